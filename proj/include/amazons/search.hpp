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

#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "amazons/board.hpp"
#include "amazons/eval.hpp"
#include "amazons/nn.hpp"
#include "amazons/random.hpp"

namespace amazons {

enum class NodeKind { Head, Move };

struct SearchNode {
  int id = 0;
  NodeKind kind = NodeKind::Move;
  int piece_index = -1;  // head nodes only
  Move move{};           // move nodes only
  BoardState state;      // position after `move` (root position for heads)
  double obj = 0.0;  // root mover's view
  int visits = 0;
  int height = 1;
  int parent = -1;
  std::vector<int> children;
  MeasureVector measures;

  // Expansion bookkeeping: actions not yet turned into children.
  std::vector<Move> untried;
  bool untried_ready = false;
};

/// Node arena. Heads are the parentless first layer (height 1); a child is
/// always stored after its parent.
class SearchTree {
 public:
  explicit SearchTree(BoardState root = BoardState::initial());

  int add_head(int piece_index, double obj = 0.0);
  int add_move_node(int parent, const Move& move, BoardState state, const MeasureVector& m,
                    double obj);

  const SearchNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  SearchNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const SearchNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<int>& heads() const { return heads_; }
  const BoardState& root_state() const { return root_; }

  int h_max() const;
  int move_node_count() const { return static_cast<int>(nodes_.size() - heads_.size()); }

  long total_visits = 0;
  bool propagated = false;

 private:
  BoardState root_;
  std::vector<SearchNode> nodes_;
  std::vector<int> heads_;
};

struct RolloutConfig {
  int playouts = 0;  // 0 disables rollouts; obj is then the model value alone
};

struct SearchConfig {
  int budget = 20;
  std::chrono::milliseconds time_limit{0};  // 0 = no limit
  double alpha = 0.5;
  double temperature = 1.0;
  /// Progressive widening: a node may hold at most ceil(widening * sqrt(visits + 1))
  /// children. 0 expands every action of a node before descending.
  double widening = 1.0;
  RolloutConfig rollout;
};

/// sqrt(2 ln n / (n_j + 1)).
double exploration_term(long total_visits, int visits);

/// AE_1(v) . W_1 + exploration.
double ucb(const SearchNode& node, long total_visits, const nn::ModelBundle& models);

/// alpha * squash(AE_1(v).W_1) + (1 - alpha) * squash(AE_2(v).W_2), in [0, 1].
double model_value(const MeasureVector& v, const nn::ModelBundle& models, double alpha);

/// model_value + exploration.
double node_value(const SearchNode& node, long total_visits, const nn::ModelBundle& models,
                  double alpha);

/// Samples a child of `node` with probability softmax(ucb / temperature).
int select_child(const SearchTree& tree, int node, double temperature, Rng& rng,
                 const nn::ModelBundle& models);

/// Builds a UCT-AE tree of at most `budget` move nodes under the four heads.
/// Throws NoLegalMoves on a finished position.
SearchTree run_search(const BoardState& state, const SearchConfig& config,
                      const nn::ModelBundle& models, Rng& rng);

struct PropagationStats {
  int accumulated = 0;  // internal nodes touched by the bottom-up pass
  int normalised = 0;   // nodes touched by the top-down pass
};

/// Bottom-up parity accumulation followed by top-down depth normalisation.
/// Throws AlreadyPropagated on a second call.
PropagationStats propagate_values(SearchTree& tree);

/// Plays uniformly random moves to the end; returns the winner.
Side random_playout(BoardState state, Rng& rng);

/// One record per node: id, parent, kind, move, height, visits, obj, measures.
std::string dump_tree_tsv(const SearchTree& tree);

}  // namespace amazons
