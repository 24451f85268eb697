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

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <numeric>
#include <sstream>

#include "amazons/error.hpp"
#include "amazons/sgga.hpp"
#include "fixtures.hpp"

namespace amazons {
namespace {

using testing::leaf;

SearchTree four_heads() {
  SearchTree t;
  for (int p = 0; p < 4; ++p) t.add_head(p);
  return t;
}

TEST(Repository, Initialisation) {
  SearchTree t = four_heads();
  EXPECT_THROW(init_repository(t), EmptyTree);
  const int n = leaf(t, 0, 0.3);
  auto r = init_repository(t);
  EXPECT_EQ(r.entries, (std::vector<int>{n, n}));
  EXPECT_EQ(std::accumulate(r.node_count.begin(), r.node_count.end(), 0), 0);

  leaf(t, 1, 0.9);
  leaf(t, 2, 0.1);
  leaf(t, 3, 0.5);
  r = init_repository(t);
  EXPECT_EQ(r.entries, (std::vector<int>{5, 7}));
}

TEST(Selection, UniformWhenEqual) {
  SearchTree t = four_heads();
  GeneticRepository r;
  r.node_count.assign(8, 0);
  r.multiplicity.assign(8, 0);
  for (int i = 0; i < 4; ++i) r.add_entry(leaf(t, i, 0.5));
  Rng rng(1);
  std::vector<int> hits(8, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto [a, b] = select_pair(r, t, rng);
    ++hits[a];
    ++hits[b];
  }
  double chi2 = 0.0;
  for (int id = 4; id < 8; ++id) chi2 += std::pow(hits[id] - 2500.0, 2) / 2500.0;
  const boost::math::chi_squared dist(3);
  EXPECT_GT(1.0 - boost::math::cdf(dist, chi2), 0.01);
}

TEST(Selection, DominantEntry) {
  SearchTree t = four_heads();
  GeneticRepository r;
  r.node_count.assign(7, 0);
  r.multiplicity.assign(7, 0);
  const int big = leaf(t, 0, 20.0);
  r.add_entry(big);
  r.add_entry(leaf(t, 1, 0.0));
  r.add_entry(leaf(t, 2, 0.0));
  Rng rng(2);
  int hits = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto [a, b] = select_pair(r, t, rng);
    hits += (a == big) + (b == big);
  }
  EXPECT_GT(hits, 0.99 * 10000);
}

TEST(Selection, BothEntriesDrawable) {
  SearchTree t = four_heads();
  GeneticRepository r;
  r.node_count.assign(6, 0);
  r.multiplicity.assign(6, 0);
  r.add_entry(leaf(t, 0, 0.2));
  r.add_entry(leaf(t, 0, 0.7));
  Rng rng(3);
  std::set<int> seen;
  for (int i = 0; i < 100; ++i) {
    const auto [a, b] = select_pair(r, t, rng);
    seen.insert(a);
    seen.insert(b);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Mutation, LeafStepsToParent) {
  SearchTree t = four_heads();
  const int a = leaf(t, 2, 0.1);
  GeneticRepository r;
  r.node_count.assign(t.size(), 0);
  r.multiplicity.assign(t.size(), 0);
  const GraphView g(t);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    WalkStep step{};
    EXPECT_EQ(mutate(g, r, a, 0.8, rng, &step), 2);
    EXPECT_EQ(step, WalkStep::Up);
  }
  EXPECT_EQ(r.node_count[2], 100);
}

TEST(Mutation, ChildFractionAndRing) {
  SearchTree t = four_heads();
  const int a = leaf(t, 0, 0.1);
  leaf(t, a, 0.2);
  leaf(t, a, 0.3);
  GeneticRepository r;
  r.node_count.assign(t.size(), 0);
  r.multiplicity.assign(t.size(), 0);
  const GraphView g(t);
  Rng rng(5);
  const int trials = 10000;
  int down = 0;
  for (int i = 0; i < trials; ++i) {
    const int next = mutate(g, r, a, kDefaultSigma, rng);
    down += t.node(next).parent == a;
  }
  const double sd = std::sqrt(trials * 0.8 * 0.2);
  EXPECT_NEAR(down, 0.8 * trials, 3 * sd);

  // A head walking up lands on one of the other heads.
  int ring = 0;
  for (int i = 0; i < 2000; ++i) {
    WalkStep step{};
    const int next = mutate(g, r, 0, kDefaultSigma, rng, &step);
    if (step == WalkStep::Up) {
      ++ring;
      EXPECT_NE(next, 0);
      EXPECT_EQ(t.node(next).kind, NodeKind::Head);
    }
  }
  EXPECT_GT(ring, 0);
  // A head without children always crosses the ring.
  EXPECT_EQ(t.node(mutate(g, r, 3, kDefaultSigma, rng)).kind, NodeKind::Head);
  EXPECT_EQ(g.neighbours(1).size(), 3u);
}

TEST(Crossover, Bookkeeping) {
  GeneticRepository r;
  r.node_count.assign(5, 0);
  r.multiplicity.assign(5, 0);
  EXPECT_FALSE(crossover(r, 1, 2).has_value());
  EXPECT_TRUE(r.entries.empty());
  EXPECT_EQ(crossover(r, 3, 3), 3);
  EXPECT_EQ(r.entries, (std::vector<int>{3}));
  EXPECT_EQ(r.node_count[3], 1);
}

TEST(Threshold, Arithmetic) {
  EXPECT_EQ(hit_threshold(5, 5), 2);
  EXPECT_EQ(hit_threshold(5, 1), 32);
  EXPECT_EQ(hit_threshold(2, 2), 2);
  EXPECT_EQ(hit_threshold(3, 1), 8);
}

TEST(RunSgga, DegenerateTwoNodeTree) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SearchTree t;
    const int h = t.add_head(0, 0.5);
    leaf(t, h, 0.5);
    propagate_values(t);
    Rng rng(seed);
    const auto res = run_sgga(t, SggaConfig{}, rng);
    ASSERT_TRUE(res.target.has_value());
    EXPECT_LT(res.repo.counter, kMaxGenerations);
  }
}

TEST(RunSgga, CountsAndTrace) {
  auto t = testing::random_search_tree(12, 30);
  propagate_values(t);
  Rng rng(12);
  std::ostringstream trace;
  SggaConfig cfg;
  cfg.trace = &trace;
  const auto res = run_sgga(t, cfg, rng);
  ASSERT_TRUE(res.target.has_value());
  const int total = std::accumulate(res.repo.node_count.begin(), res.repo.node_count.end(), 0);
  const int crossovers = static_cast<int>(res.repo.entries.size()) - 2 - 2 * res.repo.counter;
  EXPECT_EQ(total, 2 * res.repo.counter + crossovers);
  const auto text = trace.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), res.repo.counter);
  const auto& target = t.node(*res.target);
  EXPECT_GE(res.repo.node_count[target.id], hit_threshold(t.h_max(), target.height));
}

TEST(RunSgga, Reproducible) {
  auto t = testing::random_search_tree(13, 30);
  propagate_values(t);
  Rng a(1);
  Rng b(1);
  const auto ra = run_sgga(t, SggaConfig{}, a);
  const auto rb = run_sgga(t, SggaConfig{}, b);
  EXPECT_EQ(ra.target, rb.target);
  EXPECT_EQ(ra.repo.entries, rb.repo.entries);
}

TEST(RunSgga, GenerationCap) {
  SearchTree t = four_heads();
  const int a = leaf(t, 0, 0.5);
  leaf(t, a, 0.5);
  leaf(t, a, 0.5);
  propagate_values(t);
  SggaConfig cfg;
  cfg.max_generations = 1;
  cfg.sigma = 0.0;  // always climb: nothing reaches its threshold in one generation
  Rng rng(3);
  const auto res = run_sgga(t, cfg, rng);
  EXPECT_EQ(res.repo.counter, 1);
  EXPECT_FALSE(res.target.has_value());
}

TEST(Trajectory, FirstAction) {
  SearchTree t = four_heads();
  const BoardState s0 = t.root_state();
  const auto moves = legal_moves(s0);
  const int a = t.add_move_node(0, moves[0], apply_move(s0, moves[0]), {}, 0.1);
  const auto s1 = t.node(a).state;
  const auto replies = legal_moves(s1);
  const int b = t.add_move_node(a, replies[0], apply_move(s1, replies[0]), {}, 0.1);
  const auto s2 = t.node(b).state;
  const int c = t.add_move_node(b, legal_moves(s2)[0], apply_move(s2, legal_moves(s2)[0]), {}, 0.1);
  EXPECT_EQ(trace_trajectory(t, a), moves[0]);
  EXPECT_EQ(trace_trajectory(t, c), moves[0]);
  EXPECT_EQ(first_action_node(t, c), a);
  EXPECT_THROW(trace_trajectory(t, 2), TargetIsHead);
}

TEST(Trajectory, AlwaysLegalAtRoot) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto t = testing::random_search_tree(seed, 20);
    propagate_values(t);
    Rng rng(seed);
    const auto res = run_sgga(t, SggaConfig{}, rng);
    ASSERT_TRUE(res.target.has_value());
    if (t.node(*res.target).kind == NodeKind::Head) continue;
    EXPECT_TRUE(is_legal(t.root_state(), trace_trajectory(t, *res.target)));
  }
}

}  // namespace
}  // namespace amazons
