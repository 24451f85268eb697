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

#include "amazons/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amazons/error.hpp"

namespace amazons {

SearchTree::SearchTree(BoardState root) : root_(std::move(root)) {}

int SearchTree::add_head(int piece_index, double obj) {
  SearchNode n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = NodeKind::Head;
  n.piece_index = piece_index;
  n.state = root_;
  n.obj = obj;
  n.height = 1;
  nodes_.push_back(std::move(n));
  heads_.push_back(nodes_.back().id);
  return nodes_.back().id;
}

int SearchTree::add_move_node(int parent, const Move& move, BoardState state,
                              const MeasureVector& m, double obj) {
  SearchNode n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = NodeKind::Move;
  n.move = move;
  n.state = std::move(state);
  n.measures = m;
  n.obj = obj;
  n.parent = parent;
  n.height = node(parent).height + 1;
  nodes_.push_back(std::move(n));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(nodes_.back().id);
  return nodes_.back().id;
}

int SearchTree::h_max() const {
  int h = 0;
  for (const auto& n : nodes_) h = std::max(h, n.height);
  return h;
}

double exploration_term(long total_visits, int visits) {
  if (total_visits < 1) return 0.0;
  return std::sqrt(2.0 * std::log(static_cast<double>(total_visits)) / (visits + 1.0));
}

double ucb(const SearchNode& node, long total_visits, const nn::ModelBundle& models) {
  return models.move.score(node.measures.as_array()) + exploration_term(total_visits, node.visits);
}

double model_value(const MeasureVector& v, const nn::ModelBundle& models, double alpha) {
  const auto x = v.as_array();
  return alpha * nn::squash(models.move.score(x)) +
         (1.0 - alpha) * nn::squash(models.place.score(x));
}

double node_value(const SearchNode& node, long total_visits, const nn::ModelBundle& models,
                  double alpha) {
  return model_value(node.measures, models, alpha) + exploration_term(total_visits, node.visits);
}

int select_child(const SearchTree& tree, int node, double temperature, Rng& rng,
                 const nn::ModelBundle& models) {
  const auto& children = tree.node(node).children;
  if (children.empty()) throw EmptyTree("node has no children");
  if (children.size() == 1) return children.front();
  std::vector<double> scores;
  scores.reserve(children.size());
  const long total = std::max(tree.total_visits, 1L);
  for (int c : children) scores.push_back(ucb(tree.node(c), total, models));
  return children[sample_softmax(rng, scores, temperature)];
}

Side random_playout(BoardState state, Rng& rng) {
  while (status(state) == GameStatus::Ongoing) {
    const auto moves = legal_moves(state);
    state = apply_move(state, moves[uniform_index(rng, moves.size())]);
  }
  return status(state) == GameStatus::WhiteWins ? Side::White : Side::Black;
}

namespace {

class Searcher {
 public:
  Searcher(const BoardState& root, const SearchConfig& cfg, const nn::ModelBundle& models, Rng& rng)
      : tree_(root), cfg_(cfg), models_(models), rng_(rng) {}

  SearchTree run() {
    for (int p = 0; p < kPiecesPerSide; ++p) {
      const int h = tree_.add_head(p);
      auto& head = tree_.node(h);
      head.untried = legal_moves_for_piece(tree_.root_state(), p);
      head.untried_ready = true;
    }
    const auto start = std::chrono::steady_clock::now();
    int created = 0;
    int stalls = 0;
    while (created < cfg_.budget) {
      if (cfg_.time_limit.count() > 0 &&
          std::chrono::steady_clock::now() - start >= cfg_.time_limit) {
        break;
      }
      if (iterate()) {
        ++created;
      } else if (++stalls > 4 * cfg_.budget + 16) {
        break;  // every reachable line is fully expanded or terminal
      }
    }
    return std::move(tree_);
  }

 private:
  // One select/expand/evaluate/backtrack pass; returns true if a node was added.
  bool iterate() {
    path_.clear();
    int cur = select_head();
    if (cur < 0) return false;
    path_.push_back(cur);
    bool created = false;
    while (true) {
      SearchNode& n = tree_.node(cur);
      ensure_untried(n);
      if (!n.untried.empty() && static_cast<double>(n.children.size()) < widen_limit(n)) {
        path_.push_back(expand(cur));
        created = true;
        break;
      }
      if (n.children.empty()) break;  // terminal position
      cur = select_child(tree_, cur, cfg_.temperature, rng_, models_);
      path_.push_back(cur);
    }
    for (int id : path_) ++tree_.node(id).visits;
    ++tree_.total_visits;
    return created;
  }

  double widen_limit(const SearchNode& n) const {
    if (cfg_.widening <= 0.0) return std::numeric_limits<double>::infinity();
    return std::ceil(cfg_.widening * std::sqrt(n.visits + 1.0));
  }

  void ensure_untried(SearchNode& n) {
    if (n.untried_ready) return;
    n.untried = legal_moves(n.state);
    n.untried_ready = true;
  }

  // Heads compete on the mean movement score of their children plus the
  // usual exploration bonus. Heads of immobile pieces are skipped.
  int select_head() {
    std::vector<int> ids;
    std::vector<double> scores;
    const long total = std::max(tree_.total_visits, 1L);
    for (int h : tree_.heads()) {
      const auto& head = tree_.node(h);
      if (head.untried.empty() && head.children.empty()) continue;
      double exploit = 0.0;
      for (int c : head.children) exploit += models_.move.score(tree_.node(c).measures.as_array());
      if (!head.children.empty()) exploit /= static_cast<double>(head.children.size());
      ids.push_back(h);
      scores.push_back(exploit + exploration_term(total, head.visits));
    }
    if (ids.empty()) return -1;
    return ids[sample_softmax(rng_, scores, cfg_.temperature)];
  }

  int expand(int parent_id) {
    SearchNode& parent = tree_.node(parent_id);
    const std::size_t pick = uniform_index(rng_, parent.untried.size());
    std::swap(parent.untried[pick], parent.untried.back());
    const Move move = parent.untried.back();
    parent.untried.pop_back();

    const BoardState& before = parent.state;
    BoardState after = apply_move(before, move);
    const MeasureVector m = measures(before, move, after);
    double obj = model_value(m, models_, cfg_.alpha);
    if (cfg_.rollout.playouts > 0) {
      const Side mover = before.side_to_move();
      int wins = 0;
      for (int i = 0; i < cfg_.rollout.playouts; ++i) wins += random_playout(after, rng_) == mover;
      obj = 0.5 * obj + 0.5 * wins / static_cast<double>(cfg_.rollout.playouts);
    }
    // obj is kept from the root mover's side so replies count against us.
    if (before.side_to_move() != tree_.root_state().side_to_move()) obj = 1.0 - obj;
    return tree_.add_move_node(parent_id, move, std::move(after), m, obj);
  }

  SearchTree tree_;
  const SearchConfig& cfg_;
  const nn::ModelBundle& models_;
  Rng& rng_;
  std::vector<int> path_;
};

}  // namespace

SearchTree run_search(const BoardState& state, const SearchConfig& config,
                      const nn::ModelBundle& models, Rng& rng) {
  if (status(state) != GameStatus::Ongoing) throw NoLegalMoves("position is already decided");
  if (config.budget < 1) throw std::invalid_argument("search budget must be >= 1");
  return Searcher(state, config, models, rng).run();
}

PropagationStats propagate_values(SearchTree& tree) {
  if (tree.size() == 0) throw EmptyTree("cannot propagate an empty tree");
  if (tree.propagated) throw AlreadyPropagated("tree values were already propagated");
  PropagationStats stats;

  // Children are stored after their parents, so a reverse sweep sees every
  // child's final bottom-up value before its parent.
  for (std::size_t i = tree.size(); i-- > 0;) {
    SearchNode& n = tree.node(static_cast<int>(i));
    if (n.children.empty()) continue;
    double mean = 0.0;
    for (int c : n.children) mean += tree.node(c).obj;
    mean /= static_cast<double>(n.children.size());
    n.obj += n.height % 2 == 0 ? mean : std::exp2(-mean);
    ++stats.accumulated;
  }

  const int h_max = tree.h_max();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    SearchNode& n = tree.node(static_cast<int>(i));
    n.obj /= static_cast<double>(h_max + 1 - n.height);
    ++stats.normalised;
  }
  tree.propagated = true;
  return stats;
}

std::string dump_tree_tsv(const SearchTree& tree) {
  std::ostringstream out;
  out.precision(6);
  out << "id\tparent\tkind\tmove\theight\tvisits\tobj\tadj_terr\tline_terr\tone_mob\tline_mob\tposition\n";
  for (const auto& n : tree.nodes()) {
    out << n.id << '\t' << n.parent << '\t' << (n.kind == NodeKind::Head ? "head" : "move") << '\t'
        << (n.kind == NodeKind::Head ? "piece" + std::to_string(n.piece_index) : move_notation(n.move))
        << '\t' << n.height << '\t' << n.visits << '\t' << n.obj;
    for (double v : n.measures.as_array()) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace amazons
