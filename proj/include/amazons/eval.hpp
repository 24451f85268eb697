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

#include <array>
#include <limits>

#include "amazons/board.hpp"

namespace amazons {

enum class MoveMetric { Queen, King };

/// Minimum number of moves any piece of `side` needs to reach each square.
struct DistanceField {
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  std::array<int, kNumSquares> d{};
  MoveMetric metric = MoveMetric::Queen;
  Side side = Side::White;

  int operator[](Square s) const { return d[s.index()]; }
  bool reachable(Square s) const { return d[s.index()] != kUnreachable; }
};

/// Multi-source BFS from the four pieces of `side`. Pieces of both colours
/// and arrows block.
DistanceField distance_field(const BoardState& state, Side side, MoveMetric metric);

/// Share of contested empty squares `side` reaches strictly first. Ties and
/// squares neither side reaches are not counted; 0.5 when nothing is counted.
double territory(const BoardState& state, Side side, MoveMetric metric);

/// Empty king-move neighbours of `moved_to`, divided by 8.
double one_mobility(const BoardState& state_after_move, Square moved_to);

/// Total queen reach of the side's four pieces, divided by 4 * 35.
double line_mobility(const BoardState& state, Side side);

inline constexpr int kPositionTurnSwitch = 30;
inline constexpr int kPositionExponentClamp = 10;

/// Raw positional sum p = sum over counted squares of 2^(d_side - d_opp),
/// queen distances while turn <= 30 and king distances afterwards.
struct PositionSum {
  double p = 0.0;
  int counted = 0;
};
PositionSum position_sum(const BoardState& state, Side side, int turn);

/// 1 / (1 + p / n), so larger favours `side`; 0.5 when nothing is counted.
double position_score(const BoardState& state, Side side, int turn);

/// The 1x5 evaluation vector, always from the perspective of the mover.
struct MeasureVector {
  double adjacency_territory = 0.5;
  double line_territory = 0.5;
  double one_mobility = 0.0;
  double line_mobility = 0.0;
  double position = 0.5;

  static constexpr int kSize = 5;
  std::array<double, kSize> as_array() const {
    return {adjacency_territory, line_territory, one_mobility, line_mobility, position};
  }
  static MeasureVector from_array(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  friend bool operator==(const MeasureVector&, const MeasureVector&) = default;
};

/// `state_after` must equal apply_move(state_before, move).
MeasureVector measures(const BoardState& state_before, const Move& move,
                       const BoardState& state_after);

}  // namespace amazons
