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

#include "amazons/eval.hpp"

#include <algorithm>
#include <cmath>

namespace amazons {
namespace {

constexpr std::array<std::array<int, 2>, 8> kSteps = {{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1},
}};
constexpr double kMaxSingleReach = 35.0;

double ratio(int mine, int theirs) {
  if (mine + theirs == 0) return 0.5;
  return static_cast<double>(mine) / static_cast<double>(mine + theirs);
}

}  // namespace

DistanceField distance_field(const BoardState& state, Side side, MoveMetric metric) {
  DistanceField f;
  f.metric = metric;
  f.side = side;
  f.d.fill(DistanceField::kUnreachable);

  std::array<int, kNumSquares> queue{};
  int head = 0;
  int tail = 0;
  for (Square p : state.pieces(side)) {
    f.d[p.index()] = 0;
    queue[tail++] = p.index();
  }
  while (head < tail) {
    const Square cur = Square::from_index(queue[head++]);
    const int next = f.d[cur.index()] + 1;
    for (const auto& [df, dr] : kSteps) {
      Square sq{cur.file + df, cur.rank + dr};
      while (sq.on_board() && state.at(sq) == Cell::Empty) {
        if (f.d[sq.index()] == DistanceField::kUnreachable) {
          f.d[sq.index()] = next;
          queue[tail++] = sq.index();
        }
        if (metric == MoveMetric::King) break;
        sq = {sq.file + df, sq.rank + dr};
      }
    }
  }
  return f;
}

double territory(const BoardState& state, Side side, MoveMetric metric) {
  const auto mine = distance_field(state, side, metric);
  const auto theirs = distance_field(state, opponent(side), metric);
  int n_me = 0;
  int n_opp = 0;
  for (int i = 0; i < kNumSquares; ++i) {
    if (state.at(i) != Cell::Empty) continue;
    if (mine.d[i] < theirs.d[i]) ++n_me;
    else if (theirs.d[i] < mine.d[i]) ++n_opp;
  }
  return ratio(n_me, n_opp);
}

double one_mobility(const BoardState& state_after_move, Square moved_to) {
  int free = 0;
  for (const auto& [df, dr] : kSteps) {
    const Square n{moved_to.file + df, moved_to.rank + dr};
    if (n.on_board() && state_after_move.at(n) == Cell::Empty) ++free;
  }
  return free / 8.0;
}

double line_mobility(const BoardState& state, Side side) {
  int total = 0;
  for (Square p : state.pieces(side)) total += queen_reach_count(state, p);
  return total / (kPiecesPerSide * kMaxSingleReach);
}

namespace {

PositionSum position_sum_from(const BoardState& state, const DistanceField& mine,
                              const DistanceField& theirs) {
  PositionSum out;
  for (int i = 0; i < kNumSquares; ++i) {
    if (state.at(i) != Cell::Empty) continue;
    const bool rm = mine.d[i] != DistanceField::kUnreachable;
    const bool rt = theirs.d[i] != DistanceField::kUnreachable;
    if (!rm && !rt) continue;
    int exponent;
    if (rm && rt) {
      exponent = std::clamp(mine.d[i] - theirs.d[i], -kPositionExponentClamp, kPositionExponentClamp);
    } else {
      exponent = rm ? -kPositionExponentClamp : kPositionExponentClamp;
    }
    out.p += std::ldexp(1.0, exponent);
    ++out.counted;
  }
  return out;
}

double normalise_position(const PositionSum& s) {
  if (s.counted == 0) return 0.5;
  return 1.0 / (1.0 + s.p / s.counted);
}

}  // namespace

PositionSum position_sum(const BoardState& state, Side side, int turn) {
  const MoveMetric metric = turn <= kPositionTurnSwitch ? MoveMetric::Queen : MoveMetric::King;
  return position_sum_from(state, distance_field(state, side, metric),
                           distance_field(state, opponent(side), metric));
}

double position_score(const BoardState& state, Side side, int turn) {
  return normalise_position(position_sum(state, side, turn));
}

MeasureVector measures(const BoardState& state_before, const Move& move,
                       const BoardState& state_after) {
  const Side mover = state_before.side_to_move();
  const Side other = opponent(mover);

  const auto king_me = distance_field(state_after, mover, MoveMetric::King);
  const auto king_opp = distance_field(state_after, other, MoveMetric::King);
  const auto queen_me = distance_field(state_after, mover, MoveMetric::Queen);
  const auto queen_opp = distance_field(state_after, other, MoveMetric::Queen);

  auto count = [&](const DistanceField& a, const DistanceField& b) {
    int n_me = 0;
    int n_opp = 0;
    for (int i = 0; i < kNumSquares; ++i) {
      if (state_after.at(i) != Cell::Empty) continue;
      if (a.d[i] < b.d[i]) ++n_me;
      else if (b.d[i] < a.d[i]) ++n_opp;
    }
    return ratio(n_me, n_opp);
  };

  MeasureVector v;
  v.adjacency_territory = count(king_me, king_opp);
  v.line_territory = count(queen_me, queen_opp);
  v.one_mobility = one_mobility(state_after, move.to);
  v.line_mobility = line_mobility(state_after, mover);
  const bool early = state_before.turn() <= kPositionTurnSwitch;
  v.position = normalise_position(early ? position_sum_from(state_after, queen_me, queen_opp)
                                        : position_sum_from(state_after, king_me, king_opp));
  return v;
}

}  // namespace amazons
