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

// A deliberately small differentiable kit: everything here is tiny (the
// largest network has a few hundred weights), so plain loops over row-major
// storage are used throughout and every backward pass is written by hand.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "amazons/random.hpp"

namespace amazons::nn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// A trainable tensor together with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParamList = std::vector<Parameter*>;

/// Uniform in +-1/sqrt(fan_in).
void init_fan_in(Matrix& m, int fan_in, Rng& rng);

inline constexpr int kMeasureDim = 5;
inline constexpr int kLatentDim = 3;
using Vec5 = std::array<double, kMeasureDim>;

/// (tanh(v) + 1) / 2; maps raw scores into (0, 1).
inline double squash(double v) { return 0.5 * (std::tanh(v) + 1.0); }

/// 5 -> 3 (ReLU) -> 5 (Tanh).
class Autoencoder {
 public:
  Autoencoder();
  explicit Autoencoder(Rng& rng);

  struct Cache {
    std::array<double, kLatentDim> hidden_pre{};
    std::array<double, kLatentDim> hidden{};
    Vec5 out{};
  };

  Vec5 forward(const Vec5& v) const;
  Vec5 forward(const Vec5& v, Cache& cache) const;
  /// Accumulates parameter gradients for upstream gradient `d_out`; returns
  /// the gradient with respect to the input.
  Vec5 backward(const Vec5& v, const Cache& cache, const Vec5& d_out);

  ParamList parameters();
  std::vector<const Parameter*> parameters() const;

  Parameter enc_w{"enc_w", kLatentDim, kMeasureDim};
  Parameter enc_b{"enc_b", kLatentDim, 1};
  Parameter dec_w{"dec_w", kMeasureDim, kLatentDim};
  Parameter dec_b{"dec_b", kMeasureDim, 1};
};

struct ValueHead {
  ValueHead();
  explicit ValueHead(Rng& rng);

  Parameter w{"w", 1, kMeasureDim};
  Parameter b{"b", 1, 1};

  ParamList parameters() { return {&w, &b}; }
};

/// An autoencoder paired with its linear value head: score(v) = AE(v) . w + b.
struct AeScorer {
  Autoencoder ae;
  ValueHead head;

  AeScorer() = default;
  explicit AeScorer(Rng& rng) : ae(rng), head(rng) {}

  double score(const Vec5& v) const;
  ParamList parameters();
};

double score(const Autoencoder& ae, const ValueHead& head, const Vec5& v);

/// Multi-head masked graph attention layer.
class GatLayer {
 public:
  enum class Combine { Concat, Mean };
  enum class Activation { Identity, Elu };

  GatLayer() = default;
  GatLayer(std::string prefix, int heads, int in_dim, int out_dim, Combine combine,
           Activation activation, double leaky_slope = 0.2);

  struct HeadCache {
    Matrix z;          // n x out, W h_i
    Matrix pre;        // n x n, a^T [z_i || z_j] before LeakyReLU
    Matrix alpha;      // n x n, attention weights (0 off-neighbourhood)
    Matrix agg;        // n x out, sum_j alpha_ij z_j
  };
  struct Cache {
    Matrix input;
    std::vector<HeadCache> heads;
    Matrix combined;   // before activation
  };

  int heads() const { return heads_; }
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int output_width() const { return combine_ == Combine::Concat ? heads_ * out_dim_ : out_dim_; }

  Matrix forward(const Matrix& h, const Matrix& adjacency, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& adjacency, const Matrix& d_out);

  ParamList parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  int heads_ = 0;
  int in_dim_ = 0;
  int out_dim_ = 0;
  Combine combine_ = Combine::Concat;
  Activation activation_ = Activation::Identity;
  double slope_ = 0.2;
  std::vector<Parameter> w_;  // per head, out x in
  std::vector<Parameter> a_;  // per head, 2*out x 1
};

/// Two stacked attention layers: 8 heads x 4 (concatenated, ELU), then one
/// averaged head to a scalar, mapped through (tanh + 1) / 2.
class GatNetwork {
 public:
  static constexpr int kHeads = 8;
  static constexpr int kHiddenPerHead = 4;

  GatNetwork();
  explicit GatNetwork(Rng& rng);

  struct Cache {
    GatLayer::Cache l1;
    GatLayer::Cache l2;
    Matrix adjacency;
    std::vector<double> raw;  // pre-squash outputs
  };

  /// X is n x 5; adjacency n x n, symmetric. Self-loops are always added.
  std::vector<double> forward(const Matrix& x, const Matrix& adjacency,
                              Cache* cache = nullptr) const;
  /// Accumulates gradients for d loss / d output.
  void backward(const Cache& cache, std::span<const double> d_out);

  ParamList parameters();
  std::vector<const Parameter*> parameters() const;

  GatLayer layer1;
  GatLayer layer2;
};

/// Returns a copy of `adjacency` with unit diagonal after checking shape and
/// symmetry.
Matrix prepare_adjacency(const Matrix& adjacency, int n);

enum class LossKind { Mse, SmoothL1 };

/// Mean loss over elements where mask is non-zero (all when mask is empty).
double loss_value(LossKind kind, std::span<const double> pred, std::span<const double> target,
                  std::span<const std::uint8_t> mask = {});
/// d mean-loss / d pred, same masking.
std::vector<double> loss_grad(LossKind kind, std::span<const double> pred,
                              std::span<const double> target,
                              std::span<const std::uint8_t> mask = {});

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the accumulated gradients.
  virtual void step(const ParamList& params) = 0;
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const ParamList& params) override;

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct RmsPropConfig {
  double lr = 1e-4;
  double decay = 0.99;
  double eps = 1e-8;
};

class RmsProp final : public Optimizer {
 public:
  explicit RmsProp(RmsPropConfig cfg = {}) : cfg_(cfg) {}
  void step(const ParamList& params) override;

 private:
  RmsPropConfig cfg_;
  std::vector<Matrix> sq_;
};

struct AeStepResult {
  double loss = 0.0;        // total, pre-update
  double supervised = 0.0;  // loss of squash(score) against the targets
  double reconstruction = 0.0;
};

/// One optimiser step on an AeScorer: prediction squash(score(v)) against
/// `targets`, plus `recon_weight` times the MSE reconstruction loss.
AeStepResult train_step(AeScorer& model, std::span<const Vec5> batch,
                        std::span<const double> targets, LossKind kind, Optimizer& opt,
                        double recon_weight = 0.0);

struct GraphSample {
  Matrix x;                          // n x 5
  Matrix adjacency;                  // n x n
  std::vector<double> target;        // n
  std::vector<std::uint8_t> mask;    // n, 1 where the target counts
};

/// One optimiser step on the GAT over a batch of graphs; returns the mean
/// pre-update loss.
double train_step(GatNetwork& net, std::span<const GraphSample> batch, LossKind kind,
                  Optimizer& opt);

/// All models used by the engine.
struct ModelBundle {
  AeScorer move;   // AE_1, W_1
  AeScorer place;  // AE_2, W_2
  GatNetwork gat;

  ModelBundle() = default;
  static ModelBundle random(std::uint64_t seed);
  /// All parameters, with stable names such as "move.enc_w" or "gat.l1.w3".
  std::vector<std::pair<std::string, Parameter*>> named_parameters();
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary format: magic "AMZM", version, GAT head count, named blocks
/// (name, rows, cols, little-endian doubles), trailing CRC-32.
void save_params(ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_params(const std::filesystem::path& path);

}  // namespace amazons::nn
