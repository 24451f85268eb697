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

#include "amazons/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "amazons/error.hpp"

namespace amazons {

void Subgraph::add_padding_row() {
  const int n = rows();
  nn::Matrix x2(n + 1, nn::kMeasureDim);
  nn::Matrix a2(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < nn::kMeasureDim; ++k) x2(i, k) = x(i, k);
    for (int j = 0; j < n; ++j) a2(i, j) = adjacency(i, j);
  }
  a2(n, n) = 1.0;
  x = std::move(x2);
  adjacency = std::move(a2);
  node_map.push_back(kPaddingId);
}

nn::Vec5 node_feature(const MeasureVector& v, const nn::ModelBundle& models, double alpha) {
  const auto in = v.as_array();
  const auto a = models.move.ae.forward(in);
  const auto b = models.place.ae.forward(in);
  nn::Vec5 out{};
  for (int k = 0; k < nn::kMeasureDim; ++k) out[k] = alpha * a[k] + (1.0 - alpha) * b[k];
  return out;
}

Subgraph extract_subgraph(const SearchTree& tree, std::optional<int> target,
                          const nn::ModelBundle& models, double alpha, int max_rows) {
  if (tree.move_node_count() == 0) throw EmptyTree("no move nodes to rank");
  if (max_rows < 2) throw std::invalid_argument("subgraph needs at least two rows");
  const std::size_t cap = static_cast<std::size_t>(max_rows - 1);

  std::vector<char> picked(tree.size(), 0);
  std::vector<int> ids;
  auto take = [&](int id) {
    if (picked[static_cast<std::size_t>(id)] || ids.size() >= cap) return;
    picked[static_cast<std::size_t>(id)] = 1;
    ids.push_back(id);
  };

  if (target) {
    std::vector<int> path;
    for (int cur = *target; cur >= 0 && tree.node(cur).kind == NodeKind::Move;
         cur = tree.node(cur).parent) {
      path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    for (int id : path) take(id);
    for (int id : path) {
      for (int c : tree.node(id).children) take(c);
    }
    // The super-node is on every path; its neighbours are the first actions.
    for (int h : tree.heads()) {
      for (int c : tree.node(h).children) take(c);
    }
  } else {
    for (const auto& n : tree.nodes()) {
      if (n.kind == NodeKind::Move) take(n.id);
    }
  }
  // Parents always precede children in id order.
  std::sort(ids.begin(), ids.end());

  Subgraph g;
  const int n = static_cast<int>(ids.size()) + 1;
  g.x = nn::Matrix(n, nn::kMeasureDim);
  g.adjacency = nn::Matrix(n, n);
  g.node_map.assign(1, kSuperNodeId);
  std::vector<int> row_of(tree.size(), -1);
  for (int id : ids) {
    row_of[static_cast<std::size_t>(id)] = static_cast<int>(g.node_map.size());
    g.node_map.push_back(id);
  }

  for (int r = 1; r < n; ++r) {
    const auto f = node_feature(tree.node(g.node_map[r]).measures, models, alpha);
    for (int k = 0; k < nn::kMeasureDim; ++k) g.x(r, k) = f[k];
  }
  // Super-node: mean over heads of (mean over each head's children).
  const auto& heads = tree.heads();
  for (int h : heads) {
    const auto& kids = tree.node(h).children;
    if (kids.empty()) continue;
    nn::Vec5 mean{};
    for (int c : kids) {
      const auto f = node_feature(tree.node(c).measures, models, alpha);
      for (int k = 0; k < nn::kMeasureDim; ++k) mean[k] += f[k];
    }
    for (int k = 0; k < nn::kMeasureDim; ++k) {
      g.x(0, k) += mean[k] / static_cast<double>(kids.size()) / static_cast<double>(heads.size());
    }
  }

  for (int r = 0; r < n; ++r) g.adjacency(r, r) = 1.0;
  for (int r = 1; r < n; ++r) {
    const int parent = tree.node(g.node_map[r]).parent;
    const int pr = tree.node(parent).kind == NodeKind::Head ? kSuperNodeRow
                                                            : row_of[static_cast<std::size_t>(parent)];
    g.adjacency(r, pr) = g.adjacency(pr, r) = 1.0;
    ++g.edges;
  }
  return g;
}

GatRanking gat_rank(const Subgraph& graph, const nn::GatNetwork& gat) {
  const auto y = gat.forward(graph.x, graph.adjacency);
  GatRanking out;
  double best = -1.0;
  for (int r = 0; r < graph.rows(); ++r) {
    const int id = graph.node_map[static_cast<std::size_t>(r)];
    if (id < 0) continue;
    out.scores.emplace_back(id, y[static_cast<std::size_t>(r)]);
    if (y[static_cast<std::size_t>(r)] > best ||
        (y[static_cast<std::size_t>(r)] == best && id < out.best_node)) {
      best = y[static_cast<std::size_t>(r)];
      out.best_node = id;
    }
  }
  return out;
}

std::string_view source_name(DecisionSource s) {
  switch (s) {
    case DecisionSource::UctArgmax: return "UctArgmax";
    case DecisionSource::SggaGat: return "SggaGat";
    case DecisionSource::Fallback: return "Fallback";
  }
  return "?";
}

std::string_view strategy_name(DecisionStrategy s) {
  switch (s) {
    case DecisionStrategy::Softmax: return "softmax";
    case DecisionStrategy::Argmax: return "argmax";
    case DecisionStrategy::AlwaysSgga: return "always-sgga";
  }
  return "?";
}

DecisionStrategy parse_strategy(std::string_view text) {
  if (text == "softmax") return DecisionStrategy::Softmax;
  if (text == "argmax") return DecisionStrategy::Argmax;
  if (text == "always-sgga") return DecisionStrategy::AlwaysSgga;
  throw std::invalid_argument("unknown decision strategy: " + std::string(text));
}

TurnDecision decide(const Candidate& uct, const std::optional<Candidate>& sgga, Rng& rng,
                    DecisionStrategy strategy) {
  TurnDecision d;
  d.uct = uct;
  d.sgga = sgga;
  if (!sgga) {
    d.chosen = uct.move;
    d.source = DecisionSource::Fallback;
    return d;
  }
  bool take_sgga = false;
  switch (strategy) {
    case DecisionStrategy::AlwaysSgga: take_sgga = true; break;
    case DecisionStrategy::Argmax: take_sgga = sgga->obj > uct.obj; break;
    case DecisionStrategy::Softmax:
      // softmax over the pair reduces to a logistic in the obj gap
      take_sgga = uniform01(rng) < 1.0 / (1.0 + std::exp(uct.obj - sgga->obj));
      break;
  }
  d.chosen = take_sgga ? sgga->move : uct.move;
  d.source = take_sgga ? DecisionSource::SggaGat : DecisionSource::UctArgmax;
  return d;
}

namespace {

bool better(const SearchNode& a, const SearchNode& b) {
  if (a.obj != b.obj) return a.obj > b.obj;
  if (a.visits != b.visits) return a.visits > b.visits;
  return a.id < b.id;
}

Candidate as_candidate(const SearchNode& n) { return {n.move, n.obj, n.id}; }

}  // namespace

Candidate uct_best(const SearchTree& tree) {
  const SearchNode* best = nullptr;
  for (int h : tree.heads()) {
    for (int c : tree.node(h).children) {
      if (!best || better(tree.node(c), *best)) best = &tree.node(c);
    }
  }
  if (!best) throw EmptyTree("search produced no first actions");
  return as_candidate(*best);
}

Candidate best_under_head(const SearchTree& tree, int head) {
  const SearchNode* best = nullptr;
  for (int c : tree.node(head).children) {
    if (!best || better(tree.node(c), *best)) best = &tree.node(c);
  }
  return best ? as_candidate(*best) : uct_best(tree);
}

TurnDecision play_turn(const BoardState& state, const HybridConfig& config,
                       const nn::ModelBundle& models, Rng& rng, TurnTrace* trace) {
  SearchTree tree = run_search(state, config.search, models, rng);
  propagate_values(tree);
  const Candidate uct = uct_best(tree);

  const SggaResult sg = run_sgga(tree, config.sgga, rng);
  std::optional<Candidate> sgga_candidate;
  Subgraph sub;
  GatRanking ranking;
  if (sg.target) {
    sub = extract_subgraph(tree, sg.target, models, config.search.alpha);
    ranking = gat_rank(sub, models.gat);
    sgga_candidate = as_candidate(tree.node(first_action_node(tree, ranking.best_node)));
  }

  TurnDecision d = decide(uct, sgga_candidate, rng, config.strategy);
  d.gat_scores = ranking.scores;
  if (!is_legal(state, d.chosen)) {
    throw std::logic_error("engine produced an illegal move " + move_notation(d.chosen));
  }
  if (trace) {
    trace->tree = std::move(tree);
    trace->sgga_target = sg.target;
    trace->subgraph = std::move(sub);
    trace->ranking = std::move(ranking);
  }
  return d;
}

}  // namespace amazons
