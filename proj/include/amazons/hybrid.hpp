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

// One engine turn: UCT-AE search, value propagation, SGGA, graph attention
// re-ranking of the sampled region, then a randomised choice between the
// search's own pick and the re-ranked one.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "amazons/nn.hpp"
#include "amazons/search.hpp"
#include "amazons/sgga.hpp"

namespace amazons {

inline constexpr int kMaxSubgraphRows = 64;
inline constexpr int kSuperNodeRow = 0;
inline constexpr int kSuperNodeId = -1;
inline constexpr int kPaddingId = -2;

struct Subgraph {
  nn::Matrix x;          // rows x 5
  nn::Matrix adjacency;  // symmetric, unit diagonal
  std::vector<int> node_map;  // row -> tree node id (kSuperNodeId / kPaddingId otherwise)
  int super_node = kSuperNodeRow;
  int edges = 0;  // undirected, excluding self-loops

  int rows() const { return static_cast<int>(node_map.size()); }
  /// Appends an isolated row that never takes part in ranking.
  void add_padding_row();
};

/// alpha * AE_1(v) + (1 - alpha) * AE_2(v): the autoencoded measures, before
/// the value heads.
nn::Vec5 node_feature(const MeasureVector& v, const nn::ModelBundle& models, double alpha);

/// Super-node plus the move nodes on and next to the path to `target` (the
/// whole tree when there is no target), at most `max_rows` rows.
/// Throws EmptyTree.
Subgraph extract_subgraph(const SearchTree& tree, std::optional<int> target,
                          const nn::ModelBundle& models, double alpha = 0.5,
                          int max_rows = kMaxSubgraphRows);

struct GatRanking {
  int best_node = -1;
  std::vector<std::pair<int, double>> scores;  // (node id, score) per move-node row
};

/// Argmax of the GAT output over move-node rows; ties go to the lowest id.
GatRanking gat_rank(const Subgraph& graph, const nn::GatNetwork& gat);

enum class DecisionSource { UctArgmax, SggaGat, Fallback };
enum class DecisionStrategy { Softmax, Argmax, AlwaysSgga };

std::string_view source_name(DecisionSource s);
std::string_view strategy_name(DecisionStrategy s);
DecisionStrategy parse_strategy(std::string_view text);

struct Candidate {
  Move move{};
  double obj = 0.0;
  int node = -1;
};

struct TurnDecision {
  Move chosen{};
  DecisionSource source = DecisionSource::Fallback;
  Candidate uct;
  std::optional<Candidate> sgga;
  std::vector<std::pair<int, double>> gat_scores;
};

/// Picks between the two candidates. Without an SGGA candidate the UCT move
/// is played with source Fallback.
TurnDecision decide(const Candidate& uct, const std::optional<Candidate>& sgga, Rng& rng,
                    DecisionStrategy strategy = DecisionStrategy::Softmax);

/// Height-2 node with the highest propagated obj (then visits, then lowest id).
/// Throws EmptyTree.
Candidate uct_best(const SearchTree& tree);

/// Best height-2 node among the children of `head`, or uct_best when it has none.
Candidate best_under_head(const SearchTree& tree, int head);

struct HybridConfig {
  SearchConfig search;
  SggaConfig sgga;
  DecisionStrategy strategy = DecisionStrategy::Softmax;
};

/// Intermediate products kept for analysis.
struct TurnTrace {
  SearchTree tree;
  std::optional<int> sgga_target;
  Subgraph subgraph;
  GatRanking ranking;
};

/// Throws NoLegalMoves on a finished position.
TurnDecision play_turn(const BoardState& state, const HybridConfig& config,
                       const nn::ModelBundle& models, Rng& rng, TurnTrace* trace = nullptr);

}  // namespace amazons
