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

#include "amazons/train.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "amazons/error.hpp"
#include "amazons/hybrid.hpp"
#include "amazons/random.hpp"

namespace amazons {

void TrainConfig::write_to(KeyValueConfig& kv) const {
  kv.set("iterations", iterations);
  kv.set("batch_size", batch_size);
  kv.set("learning_rate", learning_rate);
  kv.set("recon_weight", recon_weight);
  kv.set("holdout", holdout);
  kv.set("seed", static_cast<long long>(seed));
}

TrainConfig TrainConfig::read_from(const KeyValueConfig& kv, const TrainConfig& base) {
  TrainConfig c = base;
  c.iterations = static_cast<int>(kv.get_int("iterations", c.iterations));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.recon_weight = kv.get_double("recon_weight", c.recon_weight);
  c.holdout = kv.get_double("holdout", c.holdout);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  return c;
}

namespace {

void check(const TrainConfig& cfg) {
  if (cfg.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(cfg.holdout >= 0.0 && cfg.holdout < 1.0)) throw std::invalid_argument("holdout must be in [0, 1)");
}

// Seeded shuffle, then the tail fraction is held out (at least one sample
// stays in training).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::size_t n, double holdout, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  const std::size_t held = std::min(n - 1, static_cast<std::size_t>(std::floor(holdout * static_cast<double>(n))));
  std::vector<std::size_t> test(idx.end() - static_cast<std::ptrdiff_t>(held), idx.end());
  idx.resize(n - held);
  return {idx, test};
}

// Cycles through a reshuffled copy of the training indices.
class BatchStream {
 public:
  BatchStream(std::vector<std::size_t> idx, Rng& rng) : idx_(std::move(idx)), rng_(rng) { shuffle(); }

  std::vector<std::size_t> next(int size) {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
      if (pos_ == idx_.size()) shuffle();
      out.push_back(idx_[pos_++]);
    }
    return out;
  }

 private:
  void shuffle() {
    for (std::size_t i = idx_.size(); i > 1; --i) std::swap(idx_[i - 1], idx_[uniform_index(rng_, i)]);
    pos_ = 0;
  }

  std::vector<std::size_t> idx_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

double eval_scorer(const nn::AeScorer& m, std::span<const nn::Vec5> x, std::span<const double> y,
                   const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  std::vector<double> pred;
  std::vector<double> target;
  for (std::size_t i : idx) {
    pred.push_back(nn::squash(m.score(x[i])));
    target.push_back(y[i]);
  }
  return nn::loss_value(nn::LossKind::Mse, pred, target);
}

}  // namespace

UctAeTraining train_uct_ae(std::span<const DatasetRecord> data, const TrainConfig& cfg,
                           const nn::ModelBundle* init) {
  check(cfg);
  if (data.empty()) throw EmptyDataset("no dataset records to train on");
  Rng rng(cfg.seed);
  UctAeTraining out;
  if (init) {
    out.move = init->move;
    out.place = init->place;
  } else {
    out.move = nn::AeScorer(rng);
    out.place = nn::AeScorer(rng);
  }

  std::vector<nn::Vec5> x;
  std::vector<double> y_move;
  std::vector<double> y_place;
  for (const auto& r : data) {
    x.push_back(r.measures.as_array());
    y_move.push_back(r.move_score);
    y_place.push_back(r.place_score);
  }
  auto [train_idx, test_idx] = split(data.size(), cfg.holdout, rng);
  out.train_size = static_cast<int>(train_idx.size());
  out.holdout_size = static_cast<int>(test_idx.size());

  nn::Adam opt_move({cfg.learning_rate});
  nn::Adam opt_place({cfg.learning_rate});
  BatchStream stream(train_idx, rng);
  std::vector<nn::Vec5> bx;
  std::vector<double> bm;
  std::vector<double> bp;
  for (int it = 0; it < cfg.iterations; ++it) {
    bx.clear();
    bm.clear();
    bp.clear();
    for (std::size_t i : stream.next(cfg.batch_size)) {
      bx.push_back(x[i]);
      bm.push_back(y_move[i]);
      bp.push_back(y_place[i]);
    }
    out.move_loss.push_back(
        nn::train_step(out.move, bx, bm, nn::LossKind::Mse, opt_move, cfg.recon_weight).supervised);
    out.place_loss.push_back(
        nn::train_step(out.place, bx, bp, nn::LossKind::Mse, opt_place, cfg.recon_weight).supervised);
  }
  out.move_holdout = eval_scorer(out.move, x, y_move, test_idx);
  out.place_holdout = eval_scorer(out.place, x, y_place, test_idx);
  return out;
}

std::vector<nn::GraphSample> graph_samples(std::span<const GraphRecord> graphs,
                                           const nn::ModelBundle& models, double alpha) {
  std::vector<nn::GraphSample> out;
  for (const auto& rec : graphs) {
    const SearchTree tree = rec.to_tree();
    if (tree.move_node_count() == 0) continue;
    const Subgraph sub = extract_subgraph(tree, std::nullopt, models, alpha);
    nn::GraphSample s;
    s.x = sub.x;
    s.adjacency = sub.adjacency;
    s.target.assign(static_cast<std::size_t>(sub.rows()), 0.0);
    s.mask.assign(static_cast<std::size_t>(sub.rows()), 0);
    bool any = false;
    for (int r = 0; r < sub.rows(); ++r) {
      const int id = sub.node_map[static_cast<std::size_t>(r)];
      if (id < 0) continue;
      const auto& node = rec.nodes[static_cast<std::size_t>(id)];
      s.target[static_cast<std::size_t>(r)] = std::clamp(node.label, 0.0, 1.0);
      s.mask[static_cast<std::size_t>(r)] = node.labelled ? 1 : 0;
      any = any || node.labelled;
    }
    if (any) out.push_back(std::move(s));
  }
  return out;
}

GatTraining train_gat_ae(std::span<const nn::GraphSample> samples, const TrainConfig& cfg,
                         const nn::GatNetwork* init) {
  check(cfg);
  if (samples.empty()) throw EmptyDataset("no labelled graphs to train on");
  Rng rng(cfg.seed);
  GatTraining out;
  out.gat = init ? *init : nn::GatNetwork(rng);
  auto [train_idx, test_idx] = split(samples.size(), cfg.holdout, rng);
  out.train_size = static_cast<int>(train_idx.size());
  out.holdout_size = static_cast<int>(test_idx.size());

  nn::RmsProp opt({cfg.learning_rate});
  BatchStream stream(train_idx, rng);
  std::vector<nn::GraphSample> batch;
  for (int it = 0; it < cfg.iterations; ++it) {
    batch.clear();
    for (std::size_t i : stream.next(std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size())))) {
      batch.push_back(samples[i]);
    }
    out.loss.push_back(nn::train_step(out.gat, batch, nn::LossKind::SmoothL1, opt));
  }
  if (!test_idx.empty()) {
    double total = 0.0;
    for (std::size_t i : test_idx) {
      const auto& s = samples[i];
      total += nn::loss_value(nn::LossKind::SmoothL1, out.gat.forward(s.x, s.adjacency), s.target, s.mask);
    }
    out.holdout = total / static_cast<double>(test_idx.size());
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    double sum = 0.0;
    for (std::size_t k = i + 1 - n; k <= i; ++k) sum += series[k];
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

namespace {

double sample_variance(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

FTest variance_and_ftest(std::span<const double> a, std::span<const double> b, int from_index) {
  if (from_index < 0) throw std::invalid_argument("from_index must be >= 0");
  const auto from = static_cast<std::size_t>(from_index);
  if (a.size() <= from + 2 || b.size() <= from + 2) {
    throw InsufficientData("need more than two points past index " + std::to_string(from_index));
  }
  const auto ta = a.subspan(from);
  const auto tb = b.subspan(from);
  FTest r;
  r.var_a = sample_variance(ta);
  r.var_b = sample_variance(tb);
  r.df_a = static_cast<int>(ta.size()) - 1;
  r.df_b = static_cast<int>(tb.size()) - 1;
  auto constant = [](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
  };
  if (constant(ta) || constant(tb)) throw InsufficientData("a tail has zero variance");
  r.f = r.var_a / r.var_b;
  const boost::math::fisher_f dist(r.df_a, r.df_b);
  const double lower = boost::math::cdf(dist, r.f);
  const double upper = boost::math::cdf(boost::math::complement(dist, r.f));
  r.p = std::min(1.0, 2.0 * std::min(lower, upper));
  return r;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> raw, int window) {
  const auto smooth = moving_average(raw, window);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "iteration,raw,smoothed\n";
  char buf[96];
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", i + 1, raw[i], smooth[i]);
    f << buf;
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace amazons
