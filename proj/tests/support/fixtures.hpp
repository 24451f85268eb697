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

// Hand-built trees with hand-derived propagated values, and random search
// trees for statistical checks.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "amazons/board.hpp"
#include "amazons/nn.hpp"
#include "amazons/search.hpp"

namespace amazons::testing {

struct PropagationFixture {
  std::string name;
  SearchTree tree;
  std::vector<double> expected;  // by node id
};

/// Adds a move node with a placeholder action; only structure and obj matter.
inline int leaf(SearchTree& t, int parent, double obj) {
  return t.add_move_node(parent, Move{}, t.root_state(), MeasureVector{}, obj);
}

inline std::vector<PropagationFixture> propagation_fixtures() {
  std::vector<PropagationFixture> out;
  {
    // Head 0.5 over leaves 0.2 and 0.4: the head gains 2^-0.3 and is halved.
    SearchTree t;
    const int h = t.add_head(0, 0.5);
    leaf(t, h, 0.2);
    leaf(t, h, 0.4);
    out.push_back({"worked example", std::move(t), {(0.5 + std::exp2(-0.3)) / 2.0, 0.2, 0.4}});
  }
  {
    // Heads only: nothing accumulates, H_max = 1 divides by one.
    SearchTree t;
    t.add_head(0, 0.3);
    t.add_head(1, 0.8);
    out.push_back({"depth 1", std::move(t), {0.3, 0.8}});
  }
  {
    // Zero mean below an odd node is a full reward of 1.
    SearchTree t;
    const int a = t.add_head(0, 0.5);
    const int b = t.add_head(1, 0.1);
    leaf(t, a, 0.0);
    leaf(t, a, 0.0);
    leaf(t, b, 1.0);
    out.push_back({"depth 2", std::move(t), {(0.5 + 1.0) / 2.0, (0.1 + 0.5) / 2.0, 0.0, 0.0, 1.0}});
  }
  {
    // head(0.2) -> x(0.4) -> {0.6, 0.8}; x is even: 0.4 + 0.7 = 1.1.
    SearchTree t;
    const int h = t.add_head(0, 0.2);
    const int x = leaf(t, h, 0.4);
    leaf(t, x, 0.6);
    leaf(t, x, 0.8);
    out.push_back({"depth 3", std::move(t), {(0.2 + std::exp2(-1.1)) / 3.0, 1.1 / 2.0, 0.6, 0.8}});
  }
  {
    // Chain 0.1 -> 0.2 -> 0.3 -> 0.4.
    SearchTree t;
    const int h = t.add_head(0, 0.1);
    const int a = leaf(t, h, 0.2);
    const int b = leaf(t, a, 0.3);
    leaf(t, b, 0.4);
    const double b1 = 0.3 + std::exp2(-0.4);
    const double a1 = 0.2 + b1;
    const double h1 = 0.1 + std::exp2(-a1);
    out.push_back({"depth 4 chain", std::move(t), {h1 / 4.0, a1 / 3.0, b1 / 2.0, 0.4}});
  }
  {
    // head 0.5 -> {a 0.2, b 0.6}; b -> {c 0.1, d 0.3}; d -> e 0.9.
    SearchTree t;
    const int h = t.add_head(0, 0.5);
    leaf(t, h, 0.2);
    const int b = leaf(t, h, 0.6);
    leaf(t, b, 0.1);
    const int d = leaf(t, b, 0.3);
    leaf(t, d, 0.9);
    const double d1 = 0.3 + std::exp2(-0.9);
    const double b1 = 0.6 + (0.1 + d1) / 2.0;
    const double h1 = 0.5 + std::exp2(-(0.2 + b1) / 2.0);
    out.push_back({"depth 4 branching", std::move(t),
                   {h1 / 4.0, 0.2 / 3.0, b1 / 3.0, 0.1 / 2.0, d1 / 2.0, 0.9}});
  }
  return out;
}

/// A search tree from a random mid-game position with random models.
inline SearchTree random_search_tree(std::uint64_t seed, int budget, nn::ModelBundle* models_out = nullptr) {
  Rng rng(seed);
  BoardState s = BoardState::initial();
  const int plies = static_cast<int>(uniform_index(rng, 40));
  for (int i = 0; i < plies && status(s) == GameStatus::Ongoing; ++i) {
    const auto moves = legal_moves(s);
    const BoardState next = apply_move(s, moves[uniform_index(rng, moves.size())]);
    if (status(next) != GameStatus::Ongoing) break;
    s = next;
  }
  auto models = nn::ModelBundle::random(seed ^ 0x5eed);
  SearchConfig cfg;
  cfg.budget = budget;
  auto tree = run_search(s, cfg, models, rng);
  if (models_out) *models_out = std::move(models);
  return tree;
}

}  // namespace amazons::testing
