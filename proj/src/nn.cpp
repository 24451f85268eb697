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

#include "amazons/nn.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

#include "amazons/error.hpp"

namespace amazons::nn {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw DimensionMismatch("negative matrix dimension");
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void init_fan_in(Matrix& m, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (double& v : m.data()) v = uniform(rng, -bound, bound);
}

// ---------------------------------------------------------------- autoencoder

Autoencoder::Autoencoder() = default;

Autoencoder::Autoencoder(Rng& rng) {
  init_fan_in(enc_w.value, kMeasureDim, rng);
  init_fan_in(enc_b.value, kMeasureDim, rng);
  init_fan_in(dec_w.value, kLatentDim, rng);
  init_fan_in(dec_b.value, kLatentDim, rng);
}

Vec5 Autoencoder::forward(const Vec5& v) const {
  Cache cache;
  return forward(v, cache);
}

Vec5 Autoencoder::forward(const Vec5& v, Cache& cache) const {
  for (int j = 0; j < kLatentDim; ++j) {
    double acc = enc_b.value(j, 0);
    for (int i = 0; i < kMeasureDim; ++i) acc += enc_w.value(j, i) * v[i];
    cache.hidden_pre[j] = acc;
    cache.hidden[j] = acc > 0.0 ? acc : 0.0;
  }
  for (int o = 0; o < kMeasureDim; ++o) {
    double acc = dec_b.value(o, 0);
    for (int j = 0; j < kLatentDim; ++j) acc += dec_w.value(o, j) * cache.hidden[j];
    cache.out[o] = std::tanh(acc);
  }
  return cache.out;
}

Vec5 Autoencoder::backward(const Vec5& v, const Cache& cache, const Vec5& d_out) {
  std::array<double, kLatentDim> d_hidden{};
  for (int o = 0; o < kMeasureDim; ++o) {
    const double d_pre = d_out[o] * (1.0 - cache.out[o] * cache.out[o]);
    dec_b.grad(o, 0) += d_pre;
    for (int j = 0; j < kLatentDim; ++j) {
      dec_w.grad(o, j) += d_pre * cache.hidden[j];
      d_hidden[j] += d_pre * dec_w.value(o, j);
    }
  }
  Vec5 d_in{};
  for (int j = 0; j < kLatentDim; ++j) {
    if (cache.hidden_pre[j] <= 0.0) continue;
    enc_b.grad(j, 0) += d_hidden[j];
    for (int i = 0; i < kMeasureDim; ++i) {
      enc_w.grad(j, i) += d_hidden[j] * v[i];
      d_in[i] += d_hidden[j] * enc_w.value(j, i);
    }
  }
  return d_in;
}

ParamList Autoencoder::parameters() { return {&enc_w, &enc_b, &dec_w, &dec_b}; }

std::vector<const Parameter*> Autoencoder::parameters() const {
  return {&enc_w, &enc_b, &dec_w, &dec_b};
}

ValueHead::ValueHead() = default;

ValueHead::ValueHead(Rng& rng) { init_fan_in(w.value, kMeasureDim, rng); }

double score(const Autoencoder& ae, const ValueHead& head, const Vec5& v) {
  const Vec5 out = ae.forward(v);
  double s = head.b.value(0, 0);
  for (int i = 0; i < kMeasureDim; ++i) s += out[i] * head.w.value(0, i);
  return s;
}

double AeScorer::score(const Vec5& v) const { return nn::score(ae, head, v); }

ParamList AeScorer::parameters() {
  auto p = ae.parameters();
  p.push_back(&head.w);
  p.push_back(&head.b);
  return p;
}

// ------------------------------------------------------------ graph attention

Matrix prepare_adjacency(const Matrix& adjacency, int n) {
  if (n < 1 || adjacency.rows() != n || adjacency.cols() != n) {
    throw DimensionMismatch("adjacency must be n x n with n >= 1");
  }
  Matrix a = adjacency;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((a(i, j) != 0.0) != (a(j, i) != 0.0)) throw AsymmetricAdjacency("adjacency is not symmetric");
    }
    a(i, i) = 1.0;
  }
  return a;
}

GatLayer::GatLayer(std::string prefix, int heads, int in_dim, int out_dim, Combine combine,
                   Activation activation, double leaky_slope)
    : heads_(heads),
      in_dim_(in_dim),
      out_dim_(out_dim),
      combine_(combine),
      activation_(activation),
      slope_(leaky_slope) {
  for (int k = 0; k < heads; ++k) {
    w_.emplace_back(prefix + ".w" + std::to_string(k), out_dim, in_dim);
    a_.emplace_back(prefix + ".a" + std::to_string(k), 2 * out_dim, 1);
  }
}

Matrix GatLayer::forward(const Matrix& h, const Matrix& adjacency, Cache* cache) const {
  const int n = h.rows();
  if (h.cols() != in_dim_) throw DimensionMismatch("GAT input width mismatch");
  if (adjacency.rows() != n || adjacency.cols() != n) throw DimensionMismatch("adjacency size");

  Matrix combined(n, output_width());
  if (cache) {
    cache->input = h;
    cache->heads.assign(heads_, {});
  }
  for (int k = 0; k < heads_; ++k) {
    const Matrix& w = w_[k].value;
    const Matrix& a = a_[k].value;
    HeadCache hc{Matrix(n, out_dim_), Matrix(n, n), Matrix(n, n), Matrix(n, out_dim_)};

    std::vector<double> s(n, 0.0);
    std::vector<double> t(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < out_dim_; ++o) {
        double acc = 0.0;
        for (int f = 0; f < in_dim_; ++f) acc += h(i, f) * w(o, f);
        hc.z(i, o) = acc;
        s[i] += a(o, 0) * acc;
        t[i] += a(out_dim_ + o, 0) * acc;
      }
    }
    for (int i = 0; i < n; ++i) {
      double max_e = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (adjacency(i, j) == 0.0) continue;
        const double pre = s[i] + t[j];
        hc.pre(i, j) = pre;
        max_e = std::max(max_e, pre > 0.0 ? pre : slope_ * pre);
      }
      double denom = 0.0;
      for (int j = 0; j < n; ++j) {
        if (adjacency(i, j) == 0.0) continue;
        const double pre = hc.pre(i, j);
        const double e = std::exp((pre > 0.0 ? pre : slope_ * pre) - max_e);
        hc.alpha(i, j) = e;
        denom += e;
      }
      for (int j = 0; j < n; ++j) {
        if (adjacency(i, j) == 0.0) continue;
        hc.alpha(i, j) /= denom;
        for (int o = 0; o < out_dim_; ++o) hc.agg(i, o) += hc.alpha(i, j) * hc.z(j, o);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < out_dim_; ++o) {
        if (combine_ == Combine::Concat) {
          combined(i, k * out_dim_ + o) = hc.agg(i, o);
        } else {
          combined(i, o) += hc.agg(i, o) / heads_;
        }
      }
    }
    if (cache) cache->heads[k] = std::move(hc);
  }
  if (cache) cache->combined = combined;

  if (activation_ == Activation::Elu) {
    for (double& v : combined.data()) v = v > 0.0 ? v : std::expm1(v);
  }
  return combined;
}

Matrix GatLayer::backward(const Cache& cache, const Matrix& adjacency, const Matrix& d_out) {
  const Matrix& h = cache.input;
  const int n = h.rows();
  Matrix d_comb = d_out;
  if (activation_ == Activation::Elu) {
    for (std::size_t i = 0; i < d_comb.size(); ++i) {
      const double x = cache.combined.data()[i];
      d_comb.data()[i] *= x > 0.0 ? 1.0 : std::exp(x);
    }
  }

  Matrix d_h(n, in_dim_);
  for (int k = 0; k < heads_; ++k) {
    const HeadCache& hc = cache.heads[k];
    const Matrix& w = w_[k].value;
    const Matrix& a = a_[k].value;
    Matrix& dw = w_[k].grad;
    Matrix& da = a_[k].grad;

    Matrix d_agg(n, out_dim_);
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < out_dim_; ++o) {
        d_agg(i, o) = combine_ == Combine::Concat ? d_comb(i, k * out_dim_ + o)
                                                  : d_comb(i, o) / heads_;
      }
    }

    Matrix dz(n, out_dim_);
    std::vector<double> ds(n, 0.0);
    std::vector<double> dt(n, 0.0);
    std::vector<double> d_alpha(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double weighted = 0.0;
      for (int j = 0; j < n; ++j) {
        if (adjacency(i, j) == 0.0) continue;
        double acc = 0.0;
        for (int o = 0; o < out_dim_; ++o) {
          acc += d_agg(i, o) * hc.z(j, o);
          dz(j, o) += hc.alpha(i, j) * d_agg(i, o);
        }
        d_alpha[j] = acc;
        weighted += hc.alpha(i, j) * acc;
      }
      for (int j = 0; j < n; ++j) {
        if (adjacency(i, j) == 0.0) continue;
        const double de = hc.alpha(i, j) * (d_alpha[j] - weighted);
        const double d_pre = de * (hc.pre(i, j) > 0.0 ? 1.0 : slope_);
        ds[i] += d_pre;
        dt[j] += d_pre;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < out_dim_; ++o) {
        da(o, 0) += ds[i] * hc.z(i, o);
        da(out_dim_ + o, 0) += dt[i] * hc.z(i, o);
        dz(i, o) += ds[i] * a(o, 0) + dt[i] * a(out_dim_ + o, 0);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < out_dim_; ++o) {
        const double g = dz(i, o);
        if (g == 0.0) continue;
        for (int f = 0; f < in_dim_; ++f) {
          dw(o, f) += g * h(i, f);
          d_h(i, f) += g * w(o, f);
        }
      }
    }
  }
  return d_h;
}

ParamList GatLayer::parameters() {
  ParamList out;
  for (int k = 0; k < heads_; ++k) {
    out.push_back(&w_[k]);
    out.push_back(&a_[k]);
  }
  return out;
}

std::vector<const Parameter*> GatLayer::parameters() const {
  std::vector<const Parameter*> out;
  for (int k = 0; k < heads_; ++k) {
    out.push_back(&w_[k]);
    out.push_back(&a_[k]);
  }
  return out;
}

GatNetwork::GatNetwork()
    : layer1("l1", kHeads, kMeasureDim, kHiddenPerHead, GatLayer::Combine::Concat,
             GatLayer::Activation::Elu),
      layer2("l2", 1, kHeads * kHiddenPerHead, 1, GatLayer::Combine::Mean,
             GatLayer::Activation::Identity) {}

GatNetwork::GatNetwork(Rng& rng) : GatNetwork() {
  for (Parameter* p : layer1.parameters()) init_fan_in(p->value, p->value.cols(), rng);
  for (Parameter* p : layer2.parameters()) init_fan_in(p->value, p->value.cols(), rng);
}

std::vector<double> GatNetwork::forward(const Matrix& x, const Matrix& adjacency,
                                        Cache* cache) const {
  if (x.cols() != kMeasureDim) throw DimensionMismatch("GAT features must be n x 5");
  Matrix adj = prepare_adjacency(adjacency, x.rows());
  Matrix h1 = layer1.forward(x, adj, cache ? &cache->l1 : nullptr);
  Matrix h2 = layer2.forward(h1, adj, cache ? &cache->l2 : nullptr);
  std::vector<double> out(x.rows());
  if (cache) cache->raw.resize(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    out[i] = squash(h2(i, 0));
    if (cache) cache->raw[i] = h2(i, 0);
  }
  if (cache) cache->adjacency = std::move(adj);
  return out;
}

void GatNetwork::backward(const Cache& cache, std::span<const double> d_out) {
  const int n = static_cast<int>(cache.raw.size());
  if (static_cast<int>(d_out.size()) != n) throw DimensionMismatch("GAT gradient length");
  Matrix d_raw(n, 1);
  for (int i = 0; i < n; ++i) {
    const double th = std::tanh(cache.raw[i]);
    d_raw(i, 0) = d_out[i] * 0.5 * (1.0 - th * th);
  }
  Matrix d_h1 = layer2.backward(cache.l2, cache.adjacency, d_raw);
  layer1.backward(cache.l1, cache.adjacency, d_h1);
}

ParamList GatNetwork::parameters() {
  auto p = layer1.parameters();
  auto q = layer2.parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

std::vector<const Parameter*> GatNetwork::parameters() const {
  auto p = layer1.parameters();
  auto q = layer2.parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

// --------------------------------------------------------------------- losses

namespace {

bool counted(std::span<const std::uint8_t> mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

std::size_t check_loss_args(std::span<const double> pred, std::span<const double> target,
                            std::span<const std::uint8_t> mask) {
  if (pred.size() != target.size() || (!mask.empty() && mask.size() != pred.size())) {
    throw DimensionMismatch("loss arguments differ in length");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += counted(mask, i) ? 1 : 0;
  return n;
}

}  // namespace

double loss_value(LossKind kind, std::span<const double> pred, std::span<const double> target,
                  std::span<const std::uint8_t> mask) {
  const std::size_t n = check_loss_args(pred, target, mask);
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!counted(mask, i)) continue;
    const double r = pred[i] - target[i];
    if (kind == LossKind::Mse) {
      total += r * r;
    } else {
      total += std::abs(r) < 1.0 ? 0.5 * r * r : std::abs(r) - 0.5;
    }
  }
  return total / static_cast<double>(n);
}

std::vector<double> loss_grad(LossKind kind, std::span<const double> pred,
                              std::span<const double> target, std::span<const std::uint8_t> mask) {
  const std::size_t n = check_loss_args(pred, target, mask);
  std::vector<double> g(pred.size(), 0.0);
  if (n == 0) return g;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!counted(mask, i)) continue;
    const double r = pred[i] - target[i];
    if (kind == LossKind::Mse) {
      g[i] = 2.0 * r * scale;
    } else {
      g[i] = (std::abs(r) < 1.0 ? r : (r > 0 ? 1.0 : -1.0)) * scale;
    }
  }
  return g;
}

// ----------------------------------------------------------------- optimisers

namespace {

void ensure_slots(std::vector<Matrix>& slots, const ParamList& params) {
  if (slots.empty()) {
    for (const Parameter* p : params) slots.emplace_back(p->value.rows(), p->value.cols());
    return;
  }
  if (slots.size() != params.size()) throw DimensionMismatch("optimizer parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (slots[i].rows() != params[i]->value.rows() || slots[i].cols() != params[i]->value.cols()) {
      throw DimensionMismatch("optimizer parameter shape changed");
    }
  }
}

}  // namespace

void Adam::step(const ParamList& params) {
  ensure_slots(m_, params);
  ensure_slots(v_, params);
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->value.data();
    auto grad = params[i]->grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * grad[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * grad[j] * grad[j];
      value[j] -= cfg_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }
}

void RmsProp::step(const ParamList& params) {
  ensure_slots(sq_, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->value.data();
    auto grad = params[i]->grad.data();
    auto sq = sq_[i].data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      sq[j] = cfg_.decay * sq[j] + (1.0 - cfg_.decay) * grad[j] * grad[j];
      value[j] -= cfg_.lr * grad[j] / (std::sqrt(sq[j]) + cfg_.eps);
    }
  }
}

// ---------------------------------------------------------------- train steps

AeStepResult train_step(AeScorer& model, std::span<const Vec5> batch,
                        std::span<const double> targets, LossKind kind, Optimizer& opt,
                        double recon_weight) {
  if (batch.empty()) throw DimensionMismatch("empty batch");
  if (batch.size() != targets.size()) throw DimensionMismatch("batch and targets differ");
  auto params = model.parameters();
  for (Parameter* p : params) p->zero_grad();

  const std::size_t n = batch.size();
  std::vector<Autoencoder::Cache> caches(n);
  std::vector<double> raw(n);
  std::vector<double> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec5 out = model.ae.forward(batch[i], caches[i]);
    double s = model.head.b.value(0, 0);
    for (int k = 0; k < kMeasureDim; ++k) s += out[k] * model.head.w.value(0, k);
    raw[i] = s;
    pred[i] = squash(s);
  }

  AeStepResult result;
  result.supervised = loss_value(kind, pred, targets);
  const auto d_pred = loss_grad(kind, pred, targets);

  const double recon_scale = recon_weight / static_cast<double>(n * kMeasureDim);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec5& out = caches[i].out;
    const double th = std::tanh(raw[i]);
    const double d_raw = d_pred[i] * 0.5 * (1.0 - th * th);
    model.head.b.grad(0, 0) += d_raw;
    Vec5 d_out{};
    for (int k = 0; k < kMeasureDim; ++k) {
      model.head.w.grad(0, k) += d_raw * out[k];
      d_out[k] = d_raw * model.head.w.value(0, k);
    }
    if (recon_weight != 0.0) {
      for (int k = 0; k < kMeasureDim; ++k) {
        const double r = out[k] - batch[i][k];
        result.reconstruction += r * r;
        d_out[k] += 2.0 * r * recon_scale;
      }
    }
    model.ae.backward(batch[i], caches[i], d_out);
  }
  if (recon_weight != 0.0) result.reconstruction /= static_cast<double>(n * kMeasureDim);
  result.loss = result.supervised + recon_weight * result.reconstruction;
  opt.step(params);
  return result;
}

double train_step(GatNetwork& net, std::span<const GraphSample> batch, LossKind kind,
                  Optimizer& opt) {
  if (batch.empty()) throw DimensionMismatch("empty batch");
  auto params = net.parameters();
  for (Parameter* p : params) p->zero_grad();
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const GraphSample& g : batch) {
    GatNetwork::Cache cache;
    const auto pred = net.forward(g.x, g.adjacency, &cache);
    total += loss_value(kind, pred, g.target, g.mask);
    auto d = loss_grad(kind, pred, g.target, g.mask);
    for (double& v : d) v *= scale;
    net.backward(cache, d);
  }
  opt.step(params);
  return total * scale;
}

// ---------------------------------------------------------------- persistence

ModelBundle ModelBundle::random(std::uint64_t seed) {
  Rng rng(seed);
  ModelBundle b;
  b.move = AeScorer(rng);
  b.place = AeScorer(rng);
  b.gat = GatNetwork(rng);
  return b;
}

std::vector<std::pair<std::string, Parameter*>> ModelBundle::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  for (auto [prefix, scorer] : {std::pair{"move.", &move}, std::pair{"place.", &place}}) {
    for (Parameter* p : scorer->ae.parameters()) out.emplace_back(prefix + p->name, p);
    out.emplace_back(std::string(prefix) + "head_w", &scorer->head.w);
    out.emplace_back(std::string(prefix) + "head_b", &scorer->head.b);
  }
  for (Parameter* p : gat.parameters()) out.emplace_back("gat." + p->name, p);
  return out;
}

namespace {

constexpr char kMagic[4] = {'A', 'M', 'Z', 'M'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("model file truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

void save_params(ModelBundle& bundle, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, GatNetwork::kHeads);
  auto named = bundle.named_parameters();
  put_u32(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, p] : named) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (double v : p->value.data()) put_f64(out, v);
  }
  put_u32(out, crc(out));

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename model file: " + ec.message());
}

ModelBundle load_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 20 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw IoError(path.string() + " is not a model file");
  }
  const std::string_view body(bytes.data(), bytes.size() - 4);
  Reader trailer(std::string_view(bytes).substr(bytes.size() - 4));
  if (trailer.u32() != crc(body)) throw ChecksumMismatch("model file checksum mismatch");

  Reader r(body.substr(4));
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw VersionMismatch("model format version " + std::to_string(version));
  }
  const std::uint32_t heads = r.u32();
  if (heads != GatNetwork::kHeads) {
    throw VersionMismatch("model has " + std::to_string(heads) + " attention heads, expected " +
                          std::to_string(GatNetwork::kHeads));
  }
  ModelBundle bundle;
  auto named = bundle.named_parameters();
  const std::uint32_t count = r.u32();
  if (count != named.size()) throw VersionMismatch("unexpected parameter block count");
  for (auto& [name, p] : named) {
    const std::string got = r.str(r.u32());
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    if (got != name || rows != p->value.rows() || cols != p->value.cols()) {
      throw VersionMismatch("unexpected parameter block " + got);
    }
    for (double& v : p->value.data()) v = r.f64();
  }
  if (!r.done()) throw VersionMismatch("trailing data in model file");
  return bundle;
}

}  // namespace amazons::nn
