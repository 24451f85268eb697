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

// Stochastic graph genetic algorithm over a finished search tree. The four
// head nodes are joined into a complete graph so that walkers can cross
// between pieces; walkers then select, mutate (biased random walk) and cross
// over until some node has been landed on often enough for its depth.

#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "amazons/random.hpp"
#include "amazons/search.hpp"

namespace amazons {

inline constexpr double kDefaultSigma = 0.8;
inline constexpr int kMaxGenerations = 50000;

/// Tree edges plus the undirected ring joining all four heads pairwise.
class GraphView {
 public:
  explicit GraphView(const SearchTree& tree) : tree_(tree) {}

  const SearchTree& tree() const { return tree_; }
  const std::vector<int>& children(int id) const { return tree_.node(id).children; }
  /// Tree parent, or an empty list plus ring peers for a head.
  std::vector<int> up_neighbours(int id) const;
  std::vector<int> neighbours(int id) const;

 private:
  const SearchTree& tree_;
};

struct GeneticRepository {
  std::vector<int> entries;     // every generated node, in order
  std::vector<int> node_count;  // landings + crossover additions, by node id
  std::vector<int> multiplicity;  // occurrences in `entries`, by node id
  int counter = 0;              // generations run

  void add_entry(int id);
};

/// Seeds the two highest-obj move nodes (one node twice if it is the only one).
/// Throws EmptyTree.
GeneticRepository init_repository(const SearchTree& tree);

/// Two independent softmax(obj) draws over the repository entries.
std::pair<int, int> select_pair(const GeneticRepository& repo, const SearchTree& tree, Rng& rng);

enum class WalkStep { Down, Up, Stay };

/// Biased random walk step: a uniform child with probability sigma, otherwise
/// the parent (a ring peer for heads); falls back to the other direction when
/// the chosen one is empty. Records the landing in `repo`.
int mutate(const GraphView& graph, GeneticRepository& repo, int node, double sigma, Rng& rng,
           WalkStep* step = nullptr);

/// When both candidates are the same node, adds one more entry of it.
std::optional<int> crossover(GeneticRepository& repo, int c1, int c2);

/// 2^(h_max - height + 1)
long long hit_threshold(int h_max, int height);

struct SggaConfig {
  double sigma = kDefaultSigma;
  int max_generations = kMaxGenerations;
  std::ostream* trace = nullptr;  // one line per generation when set
};

struct SggaResult {
  std::optional<int> target;
  GeneticRepository repo;
};

/// Runs generations until a node's count reaches its threshold or the
/// generation cap is hit (target empty).
SggaResult run_sgga(const SearchTree& tree, const SggaConfig& config, Rng& rng);

/// Id of the height-2 node on the path from the heads to `target`.
/// Throws TargetIsHead.
int first_action_node(const SearchTree& tree, int target);

/// The first action on the path to `target`. Throws TargetIsHead.
Move trace_trajectory(const SearchTree& tree, int target);

}  // namespace amazons
