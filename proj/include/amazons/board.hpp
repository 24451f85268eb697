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
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amazons {

inline constexpr int kBoardSize = 10;
inline constexpr int kNumSquares = kBoardSize * kBoardSize;
inline constexpr int kPiecesPerSide = 4;
/// Upper bound on the length of any game: one arrow per ply.
inline constexpr int kMaxPlies = kNumSquares - 2 * kPiecesPerSide;

struct Square {
  int file = 0;  // 0..9, a..j
  int rank = 0;  // 0..9, 1..10

  constexpr int index() const { return rank * kBoardSize + file; }
  static constexpr Square from_index(int i) { return {i % kBoardSize, i / kBoardSize}; }
  constexpr bool on_board() const {
    return file >= 0 && file < kBoardSize && rank >= 0 && rank < kBoardSize;
  }

  friend constexpr auto operator<=>(const Square& a, const Square& b) {
    return a.index() <=> b.index();
  }
  friend constexpr bool operator==(const Square&, const Square&) = default;
};

/// Cell contents; the numeric values are the digit-grid wire encoding.
enum class Cell : std::uint8_t { Empty = 0, White = 1, Black = 2, Arrow = 3 };

enum class Side : std::uint8_t { White = 0, Black = 1 };

constexpr Side opponent(Side s) { return s == Side::White ? Side::Black : Side::White; }
constexpr Cell piece_cell(Side s) { return s == Side::White ? Cell::White : Cell::Black; }
std::string_view side_name(Side s);  // "white" / "black"

struct Move {
  Square from;
  Square to;
  Square arrow;

  friend constexpr bool operator==(const Move&, const Move&) = default;
};

enum class GameStatus : std::uint8_t { Ongoing, WhiteWins, BlackWins };

/// Full game position. Piece lists are kept sorted by square index so that
/// two positions with the same grid compare equal.
class BoardState {
 public:
  /// Standard tournament setup, White to move, turn 0.
  static BoardState initial();

  /// Builds a position from a cell grid. Throws ParseError unless there are
  /// exactly four pieces per side. `turn` defaults to the arrow count.
  static BoardState from_cells(const std::array<Cell, kNumSquares>& cells, Side to_move,
                               std::optional<int> turn = std::nullopt);

  Cell at(Square s) const { return grid_[s.index()]; }
  Cell at(int index) const { return grid_[index]; }
  const std::array<Cell, kNumSquares>& cells() const { return grid_; }
  const std::array<Square, kPiecesPerSide>& pieces(Side s) const {
    return s == Side::White ? white_ : black_;
  }
  const std::vector<Square>& arrows() const { return arrows_; }
  Side side_to_move() const { return to_move_; }
  int turn() const { return turn_; }

  /// Checks grid/list consistency and the turn == arrow-count rule.
  bool invariants_hold() const;

  friend bool operator==(const BoardState&, const BoardState&) = default;

 private:
  friend BoardState apply_move(const BoardState&, const Move&);

  std::array<Cell, kNumSquares> grid_{};
  std::array<Square, kPiecesPerSide> white_{};
  std::array<Square, kPiecesPerSide> black_{};
  std::vector<Square> arrows_;
  Side to_move_ = Side::White;
  int turn_ = 0;
};

/// Squares reachable in one queen move from `origin`, walking the eight rays
/// in a fixed order (direction-major, distance-minor). `ignore`, when set, is
/// treated as empty.
std::vector<Square> queen_reachable(const BoardState& state, Square origin,
                                    std::optional<Square> ignore = std::nullopt);

/// Number of squares queen_reachable would return, without allocating.
int queen_reach_count(const BoardState& state, Square origin);

/// All legal moves for the side to move, ordered by piece index, then
/// destination index, then arrow index.
std::vector<Move> legal_moves(const BoardState& state);

/// Legal moves of a single piece of the side to move, same ordering.
std::vector<Move> legal_moves_for_piece(const BoardState& state, int piece_index);

bool is_legal(const BoardState& state, const Move& move);
bool has_legal_move(const BoardState& state);

/// Returns the successor position. Throws IllegalMove.
BoardState apply_move(const BoardState& state, const Move& move);

GameStatus status(const BoardState& state);

/// Ten lines of ten digits, rank 10 first, each terminated by '\n'.
std::string encode_grid(const BoardState& state);

/// Inverse of encode_grid. Throws ParseError.
BoardState parse_grid(std::string_view text, Side to_move, std::optional<int> turn = std::nullopt);

/// "d1", "j10", ...
std::string square_name(Square s);
Square parse_square(std::string_view text);
/// "d1-d7/g7"
std::string move_notation(const Move& m);
Move parse_move(std::string_view text);

}  // namespace amazons
