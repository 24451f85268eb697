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

#include "amazons/sgga.hpp"

#include <algorithm>
#include <cmath>

#include "amazons/error.hpp"

namespace amazons {

std::vector<int> GraphView::up_neighbours(int id) const {
  const SearchNode& n = tree_.node(id);
  if (n.parent >= 0) return {n.parent};
  std::vector<int> peers;
  if (n.kind == NodeKind::Head) {
    for (int h : tree_.heads()) {
      if (h != id) peers.push_back(h);
    }
  }
  return peers;
}

std::vector<int> GraphView::neighbours(int id) const {
  auto out = children(id);
  auto up = up_neighbours(id);
  out.insert(out.end(), up.begin(), up.end());
  return out;
}

void GeneticRepository::add_entry(int id) {
  entries.push_back(id);
  ++multiplicity.at(static_cast<std::size_t>(id));
}

GeneticRepository init_repository(const SearchTree& tree) {
  std::vector<int> moves;
  for (const auto& n : tree.nodes()) {
    if (n.kind == NodeKind::Move) moves.push_back(n.id);
  }
  if (moves.empty()) throw EmptyTree("search tree has no move nodes");
  std::stable_sort(moves.begin(), moves.end(),
                   [&](int a, int b) { return tree.node(a).obj > tree.node(b).obj; });

  GeneticRepository repo;
  repo.node_count.assign(tree.size(), 0);
  repo.multiplicity.assign(tree.size(), 0);
  repo.add_entry(moves[0]);
  repo.add_entry(moves.size() > 1 ? moves[1] : moves[0]);
  return repo;
}

std::pair<int, int> select_pair(const GeneticRepository& repo, const SearchTree& tree, Rng& rng) {
  // Sampling an entry of the multiset with weight exp(obj) is the same as
  // sampling a distinct node with weight multiplicity * exp(obj).
  std::vector<int> ids;
  std::vector<double> weights;
  double max_obj = -std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < repo.multiplicity.size(); ++id) {
    if (repo.multiplicity[id] > 0) max_obj = std::max(max_obj, tree.node(static_cast<int>(id)).obj);
  }
  for (std::size_t id = 0; id < repo.multiplicity.size(); ++id) {
    if (repo.multiplicity[id] == 0) continue;
    ids.push_back(static_cast<int>(id));
    weights.push_back(repo.multiplicity[id] * std::exp(tree.node(static_cast<int>(id)).obj - max_obj));
  }
  const int a = ids[sample_weighted(rng, weights)];
  const int b = ids[sample_weighted(rng, weights)];
  return {a, b};
}

int mutate(const GraphView& graph, GeneticRepository& repo, int node, double sigma, Rng& rng,
           WalkStep* step) {
  const auto& down = graph.children(node);
  const auto up = graph.up_neighbours(node);
  bool go_down = uniform01(rng) < sigma;
  if (go_down && down.empty()) go_down = false;
  if (!go_down && up.empty()) go_down = true;

  int next = node;
  WalkStep taken = WalkStep::Stay;
  if (go_down && !down.empty()) {
    next = down[uniform_index(rng, down.size())];
    taken = WalkStep::Down;
  } else if (!go_down && !up.empty()) {
    next = up[uniform_index(rng, up.size())];
    taken = WalkStep::Up;
  }
  if (step) *step = taken;
  ++repo.node_count.at(static_cast<std::size_t>(next));
  repo.add_entry(next);
  return next;
}

std::optional<int> crossover(GeneticRepository& repo, int c1, int c2) {
  if (c1 != c2) return std::nullopt;
  ++repo.node_count.at(static_cast<std::size_t>(c1));
  repo.add_entry(c1);
  return c1;
}

long long hit_threshold(int h_max, int height) {
  const int e = h_max - height + 1;
  return e >= 62 ? std::numeric_limits<long long>::max() : (1LL << std::max(e, 0));
}

namespace {

const char* step_name(WalkStep s) {
  switch (s) {
    case WalkStep::Down: return "down";
    case WalkStep::Up: return "up";
    case WalkStep::Stay: return "stay";
  }
  return "?";
}

}  // namespace

SggaResult run_sgga(const SearchTree& tree, const SggaConfig& config, Rng& rng) {
  SggaResult result;
  result.repo = init_repository(tree);
  GeneticRepository& repo = result.repo;
  const GraphView graph(tree);
  const int h_max = tree.h_max();

  while (repo.counter < config.max_generations) {
    const auto [c1, c2] = select_pair(repo, tree, rng);
    WalkStep s1{};
    WalkStep s2{};
    const int m1 = mutate(graph, repo, c1, config.sigma, rng, &s1);
    const int m2 = mutate(graph, repo, c2, config.sigma, rng, &s2);
    const bool crossed = crossover(repo, m1, m2).has_value();
    ++repo.counter;
    if (config.trace) {
      *config.trace << repo.counter << ' ' << c1 << "->" << m1 << ' ' << step_name(s1) << ' '
                    << c2 << "->" << m2 << ' ' << step_name(s2) << ' ' << (crossed ? 1 : 0)
                    << '\n';
    }
    for (int m : {m1, m2}) {
      if (repo.node_count[static_cast<std::size_t>(m)] >= hit_threshold(h_max, tree.node(m).height)) {
        result.target = m;
        return result;
      }
    }
  }
  return result;
}

int first_action_node(const SearchTree& tree, int target) {
  if (tree.node(target).kind == NodeKind::Head) throw TargetIsHead("target is a head node");
  int cur = target;
  while (tree.node(cur).height > 2) cur = tree.node(cur).parent;
  return cur;
}

Move trace_trajectory(const SearchTree& tree, int target) {
  return tree.node(first_action_node(tree, target)).move;
}

}  // namespace amazons
