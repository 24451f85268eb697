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

#include "amazons/board.hpp"

#include <algorithm>
#include <cstdlib>

#include "amazons/error.hpp"

namespace amazons {
namespace {

constexpr std::array<std::array<int, 2>, 8> kDirections = {{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1},
}};

bool empty_or_ignored(const BoardState& s, Square sq, std::optional<Square> ignore) {
  return s.at(sq) == Cell::Empty || (ignore && *ignore == sq);
}

// True when `target` lies on an unobstructed queen line from `origin`.
bool queen_line_clear(const BoardState& s, Square origin, Square target,
                      std::optional<Square> ignore) {
  const int df = target.file - origin.file;
  const int dr = target.rank - origin.rank;
  if (df == 0 && dr == 0) return false;
  if (df != 0 && dr != 0 && std::abs(df) != std::abs(dr)) return false;
  const int sf = (df > 0) - (df < 0);
  const int sr = (dr > 0) - (dr < 0);
  Square cur = origin;
  do {
    cur = {cur.file + sf, cur.rank + sr};
    if (!empty_or_ignored(s, cur, ignore)) return false;
  } while (cur != target);
  return true;
}

}  // namespace

std::string_view side_name(Side s) { return s == Side::White ? "white" : "black"; }

BoardState BoardState::initial() {
  std::array<Cell, kNumSquares> cells{};
  for (Square sq : {Square{3, 0}, Square{6, 0}, Square{0, 3}, Square{9, 3}}) {
    cells[sq.index()] = Cell::White;
  }
  for (Square sq : {Square{0, 6}, Square{9, 6}, Square{3, 9}, Square{6, 9}}) {
    cells[sq.index()] = Cell::Black;
  }
  return from_cells(cells, Side::White, 0);
}

BoardState BoardState::from_cells(const std::array<Cell, kNumSquares>& cells, Side to_move,
                                  std::optional<int> turn) {
  BoardState s;
  s.grid_ = cells;
  s.to_move_ = to_move;
  int nw = 0;
  int nb = 0;
  for (int i = 0; i < kNumSquares; ++i) {
    const Square sq = Square::from_index(i);
    switch (cells[i]) {
      case Cell::White:
        if (nw == kPiecesPerSide) throw ParseError("more than four white pieces");
        s.white_[nw++] = sq;
        break;
      case Cell::Black:
        if (nb == kPiecesPerSide) throw ParseError("more than four black pieces");
        s.black_[nb++] = sq;
        break;
      case Cell::Arrow:
        s.arrows_.push_back(sq);
        break;
      case Cell::Empty:
        break;
      default:
        throw ParseError("invalid cell value");
    }
  }
  if (nw != kPiecesPerSide || nb != kPiecesPerSide) {
    throw ParseError("each side needs exactly four pieces");
  }
  s.turn_ = turn.value_or(static_cast<int>(s.arrows_.size()));
  if (s.turn_ < 0) throw ParseError("negative turn counter");
  return s;
}

bool BoardState::invariants_hold() const {
  std::array<Cell, kNumSquares> expect{};
  for (Square sq : white_) {
    if (!sq.on_board() || expect[sq.index()] != Cell::Empty) return false;
    expect[sq.index()] = Cell::White;
  }
  for (Square sq : black_) {
    if (!sq.on_board() || expect[sq.index()] != Cell::Empty) return false;
    expect[sq.index()] = Cell::Black;
  }
  for (Square sq : arrows_) {
    if (!sq.on_board() || expect[sq.index()] != Cell::Empty) return false;
    expect[sq.index()] = Cell::Arrow;
  }
  if (!std::is_sorted(white_.begin(), white_.end()) ||
      !std::is_sorted(black_.begin(), black_.end()) ||
      !std::is_sorted(arrows_.begin(), arrows_.end())) {
    return false;
  }
  return expect == grid_ && static_cast<int>(arrows_.size()) == turn_;
}

std::vector<Square> queen_reachable(const BoardState& state, Square origin,
                                    std::optional<Square> ignore) {
  std::vector<Square> out;
  out.reserve(35);
  for (const auto& [df, dr] : kDirections) {
    Square cur{origin.file + df, origin.rank + dr};
    while (cur.on_board() && empty_or_ignored(state, cur, ignore)) {
      out.push_back(cur);
      cur = {cur.file + df, cur.rank + dr};
    }
  }
  return out;
}

int queen_reach_count(const BoardState& state, Square origin) {
  int n = 0;
  for (const auto& [df, dr] : kDirections) {
    Square cur{origin.file + df, origin.rank + dr};
    while (cur.on_board() && state.at(cur) == Cell::Empty) {
      ++n;
      cur = {cur.file + df, cur.rank + dr};
    }
  }
  return n;
}

std::vector<Move> legal_moves_for_piece(const BoardState& state, int piece_index) {
  std::vector<Move> out;
  const Square from = state.pieces(state.side_to_move()).at(piece_index);
  auto targets = queen_reachable(state, from);
  std::sort(targets.begin(), targets.end());
  for (Square to : targets) {
    auto arrows = queen_reachable(state, to, from);
    std::sort(arrows.begin(), arrows.end());
    for (Square arrow : arrows) out.push_back({from, to, arrow});
  }
  return out;
}

std::vector<Move> legal_moves(const BoardState& state) {
  std::vector<Move> out;
  out.reserve(2200);
  for (int p = 0; p < kPiecesPerSide; ++p) {
    auto piece_moves = legal_moves_for_piece(state, p);
    out.insert(out.end(), piece_moves.begin(), piece_moves.end());
  }
  return out;
}

bool is_legal(const BoardState& state, const Move& move) {
  if (!move.from.on_board() || !move.to.on_board() || !move.arrow.on_board()) return false;
  if (state.at(move.from) != piece_cell(state.side_to_move())) return false;
  if (!queen_line_clear(state, move.from, move.to, std::nullopt)) return false;
  // The arrow flies from the new square; the vacated origin counts as empty.
  return queen_line_clear(state, move.to, move.arrow, move.from);
}

bool has_legal_move(const BoardState& state) {
  // Any piece with an empty neighbour can step there and shoot back.
  for (Square p : state.pieces(state.side_to_move())) {
    for (const auto& [df, dr] : kDirections) {
      const Square n{p.file + df, p.rank + dr};
      if (n.on_board() && state.at(n) == Cell::Empty) return true;
    }
  }
  return false;
}

BoardState apply_move(const BoardState& state, const Move& move) {
  if (!is_legal(state, move)) throw IllegalMove("illegal move " + move_notation(move));
  BoardState next = state;
  const Side mover = state.side_to_move();
  auto& pieces = mover == Side::White ? next.white_ : next.black_;
  auto it = std::find(pieces.begin(), pieces.end(), move.from);
  *it = move.to;
  std::sort(pieces.begin(), pieces.end());
  next.grid_[move.from.index()] = Cell::Empty;
  next.grid_[move.to.index()] = piece_cell(mover);
  next.grid_[move.arrow.index()] = Cell::Arrow;
  next.arrows_.insert(std::upper_bound(next.arrows_.begin(), next.arrows_.end(), move.arrow),
                      move.arrow);
  next.to_move_ = opponent(mover);
  next.turn_ = state.turn_ + 1;
  return next;
}

GameStatus status(const BoardState& state) {
  if (has_legal_move(state)) return GameStatus::Ongoing;
  return state.side_to_move() == Side::White ? GameStatus::BlackWins : GameStatus::WhiteWins;
}

std::string encode_grid(const BoardState& state) {
  std::string out;
  out.reserve(kNumSquares + kBoardSize);
  for (int rank = kBoardSize - 1; rank >= 0; --rank) {
    for (int file = 0; file < kBoardSize; ++file) {
      out.push_back(static_cast<char>('0' + static_cast<int>(state.at(Square{file, rank}))));
    }
    out.push_back('\n');
  }
  return out;
}

BoardState parse_grid(std::string_view text, Side to_move, std::optional<int> turn) {
  std::array<Cell, kNumSquares> cells{};
  int rank = kBoardSize - 1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty() && rank < 0) continue;
    if (rank < 0) throw ParseError("grid has more than ten rows");
    if (line.size() != kBoardSize) {
      throw ParseError("grid row " + std::to_string(kBoardSize - rank) + " has " +
                       std::to_string(line.size()) + " characters");
    }
    for (int file = 0; file < kBoardSize; ++file) {
      const char c = line[file];
      if (c < '0' || c > '3') throw ParseError(std::string("invalid grid digit '") + c + "'");
      cells[Square{file, rank}.index()] = static_cast<Cell>(c - '0');
    }
    --rank;
  }
  if (rank >= 0) throw ParseError("grid has fewer than ten rows");
  return BoardState::from_cells(cells, to_move, turn);
}

std::string square_name(Square s) {
  return std::string(1, static_cast<char>('a' + s.file)) + std::to_string(s.rank + 1);
}

Square parse_square(std::string_view text) {
  if (text.size() < 2 || text.size() > 3) throw ParseError("bad square '" + std::string(text) + "'");
  const int file = text[0] - 'a';
  int rank = 0;
  for (char c : text.substr(1)) {
    if (c < '0' || c > '9') throw ParseError("bad square '" + std::string(text) + "'");
    rank = rank * 10 + (c - '0');
  }
  const Square sq{file, rank - 1};
  if (!sq.on_board()) throw ParseError("square off board '" + std::string(text) + "'");
  return sq;
}

std::string move_notation(const Move& m) {
  return square_name(m.from) + "-" + square_name(m.to) + "/" + square_name(m.arrow);
}

Move parse_move(std::string_view text) {
  const auto dash = text.find('-');
  const auto slash = text.find('/');
  if (dash == std::string_view::npos || slash == std::string_view::npos || slash < dash) {
    throw ParseError("bad move '" + std::string(text) + "'");
  }
  return {parse_square(text.substr(0, dash)), parse_square(text.substr(dash + 1, slash - dash - 1)),
          parse_square(text.substr(slash + 1))};
}

}  // namespace amazons
