// Copyright 2026 The Amazons Hybrid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Training loops for the two autoencoder scorers and the attention network,
// plus the loss-curve statistics used to compare them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "amazons/config.hpp"
#include "amazons/datagen.hpp"
#include "amazons/nn.hpp"

namespace amazons {

struct TrainConfig {
  int iterations = 1000;  // optimiser steps
  int batch_size = 32;    // samples (or graphs) per step
  double learning_rate = 0.01;
  double recon_weight = 0.1;  // AE reconstruction term
  double holdout = 0.1;       // fraction kept out of training
  std::uint64_t seed = 1;

  static TrainConfig uct_ae_defaults() { return {}; }
  static TrainConfig gat_defaults() { return {1000, 8, 1e-4, 0.0, 0.1, 1}; }

  void write_to(KeyValueConfig& kv) const;
  /// Missing keys keep the values of `base`.
  static TrainConfig read_from(const KeyValueConfig& kv, const TrainConfig& base);
};

struct UctAeTraining {
  nn::AeScorer move;
  nn::AeScorer place;
  std::vector<double> move_loss;   // supervised MSE per step, pre-update
  std::vector<double> place_loss;
  double move_holdout = 0.0;   // NaN-free; 0 when nothing was held out
  double place_holdout = 0.0;
  int train_size = 0;
  int holdout_size = 0;
};

/// Adam on both scorers: squash(score(v)) against move_score / place_score.
/// Starts from `init` when given, else from seeded random weights.
/// Throws EmptyDataset.
UctAeTraining train_uct_ae(std::span<const DatasetRecord> data, const TrainConfig& cfg,
                           const nn::ModelBundle* init = nullptr);

/// Whole-tree subgraphs with per-node labels; rows never visited by the
/// genetic sampler are masked out. Graphs without a labelled row are dropped.
std::vector<nn::GraphSample> graph_samples(std::span<const GraphRecord> graphs,
                                           const nn::ModelBundle& models, double alpha = 0.5);

struct GatTraining {
  nn::GatNetwork gat;
  std::vector<double> loss;  // smooth-L1 per step, pre-update
  double holdout = 0.0;
  int train_size = 0;
  int holdout_size = 0;
};

/// RMSprop with smooth-L1 loss. Throws EmptyDataset.
GatTraining train_gat_ae(std::span<const nn::GraphSample> samples, const TrainConfig& cfg,
                         const nn::GatNetwork* init = nullptr);

/// Trailing mean over min(window, i + 1) points.
std::vector<double> moving_average(std::span<const double> series, int window = 50);

struct FTest {
  double var_a = 0.0;
  double var_b = 0.0;
  double f = 0.0;  // var_a / var_b
  double p = 1.0;  // two-sided
  int df_a = 0;
  int df_b = 0;
};

/// Sample variances of a[from..] and b[from..] and the two-sided F-test of
/// their ratio. Throws InsufficientData for short or constant tails.
FTest variance_and_ftest(std::span<const double> a, std::span<const double> b, int from_index);

/// "iteration,raw,smoothed" rows. Throws IoError.
void write_loss_csv(const std::filesystem::path& path, std::span<const double> raw, int window = 50);

}  // namespace amazons
