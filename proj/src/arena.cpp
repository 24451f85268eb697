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

#include "amazons/arena.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <regex>
#include <stdexcept>

#include "amazons/error.hpp"
#include "amazons/eval.hpp"

namespace amazons {

std::string_view agent_kind_name(AgentKind k) {
  switch (k) {
    case AgentKind::Hybrid: return "hybrid";
    case AgentKind::UctAeOnly: return "uct-ae";
    case AgentKind::SggaOnly: return "sgga";
    case AgentKind::GatAeOnly: return "gat-ae";
    case AgentKind::LlmAgent: return "llm";
    case AgentKind::Random: return "random";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view text) {
  for (auto k : {AgentKind::Hybrid, AgentKind::UctAeOnly, AgentKind::SggaOnly, AgentKind::GatAeOnly,
                 AgentKind::LlmAgent, AgentKind::Random}) {
    if (agent_kind_name(k) == text) return k;
  }
  throw std::invalid_argument("unknown agent kind: " + std::string(text));
}

// ------------------------------------------------------------------ agents

namespace {

class SearchAgent : public Agent {
 public:
  explicit SearchAgent(const AgentSpec& spec) : spec_(spec) {
    if (!spec_.models) throw std::invalid_argument(std::string(agent_kind_name(spec.kind)) + " agent needs models");
    if (spec_.node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  }
  std::string name() const override { return std::string(agent_kind_name(spec_.kind)); }

 protected:
  SearchConfig search_config() const {
    SearchConfig c;
    c.budget = spec_.node_budget;
    c.alpha = spec_.alpha;
    c.temperature = spec_.temperature;
    return c;
  }
  SearchTree searched(const BoardState& s, Rng& rng) const {
    SearchTree tree = run_search(s, search_config(), *spec_.models, rng);
    propagate_values(tree);
    return tree;
  }
  void attach(AgentMove& m, SearchTree tree, GatRanking ranking = {},
              std::optional<int> target = std::nullopt) const {
    if (!spec_.keep_trace) return;
    auto t = std::make_shared<TurnTrace>();
    t->tree = std::move(tree);
    t->ranking = std::move(ranking);
    t->sgga_target = target;
    m.trace = std::move(t);
  }

  AgentSpec spec_;
};

class HybridAgent final : public SearchAgent {
 public:
  using SearchAgent::SearchAgent;
  AgentMove choose(const BoardState& s, Rng& rng) override {
    HybridConfig cfg;
    cfg.search = search_config();
    cfg.strategy = spec_.strategy;
    auto trace = spec_.keep_trace ? std::make_shared<TurnTrace>() : nullptr;
    const auto d = play_turn(s, cfg, *spec_.models, rng, trace.get());
    AgentMove m{d.chosen, std::string(source_name(d.source)), {}, d, std::move(trace)};
    return m;
  }
};

class UctAgent final : public SearchAgent {
 public:
  using SearchAgent::SearchAgent;
  AgentMove choose(const BoardState& s, Rng& rng) override {
    SearchTree tree = searched(s, rng);
    TurnDecision d;
    d.uct = uct_best(tree);
    d.chosen = d.uct.move;
    d.source = DecisionSource::UctArgmax;
    AgentMove m{d.chosen, "UctArgmax", {}, d, nullptr};
    attach(m, std::move(tree));
    return m;
  }
};

class SggaAgent final : public SearchAgent {
 public:
  using SearchAgent::SearchAgent;
  AgentMove choose(const BoardState& s, Rng& rng) override {
    SearchTree tree = searched(s, rng);
    const auto sg = run_sgga(tree, SggaConfig{}, rng);
    AgentMove m;
    if (!sg.target) {
      m = {uct_best(tree).move, "Fallback", "no sampler target", {}, {}};
    } else {
      const int node = tree.node(*sg.target).kind == NodeKind::Head ? best_under_head(tree, *sg.target).node
                                                                    : first_action_node(tree, *sg.target);
      m = {tree.node(node).move, "SggaGat", {}, {}, {}};
    }
    attach(m, std::move(tree), {}, sg.target);
    return m;
  }
};

class GatAgent final : public SearchAgent {
 public:
  using SearchAgent::SearchAgent;
  AgentMove choose(const BoardState& s, Rng& rng) override {
    SearchTree tree = searched(s, rng);
    const auto sub = extract_subgraph(tree, std::nullopt, *spec_.models, spec_.alpha);
    auto rank = gat_rank(sub, spec_.models->gat);
    AgentMove m{tree.node(first_action_node(tree, rank.best_node)).move, "SggaGat", {}, {}, {}};
    attach(m, std::move(tree), std::move(rank));
    return m;
  }
};

class RandomAgent final : public Agent {
 public:
  AgentMove choose(const BoardState& s, Rng& rng) override {
    const auto moves = legal_moves(s);
    return {moves[uniform_index(rng, moves.size())], "Random", {}, {}, {}};
  }
  std::string name() const override { return "random"; }
};

std::string illegal_reason(const BoardState& s, const Move& m) {
  const Side me = s.side_to_move();
  if (s.at(m.from) != piece_cell(me)) return square_name(m.from) + " does not hold one of your Amazons";
  const auto dests = queen_reachable(s, m.from);
  if (std::find(dests.begin(), dests.end(), m.to) == dests.end()) {
    return "your Amazon on " + square_name(m.from) + " cannot reach " + square_name(m.to);
  }
  return "from " + square_name(m.to) + " the obstacle cannot reach " + square_name(m.arrow);
}

class LlmAgent final : public Agent {
 public:
  explicit LlmAgent(const AgentSpec& spec) : spec_(spec) {
    if (!spec_.provider) throw std::invalid_argument("llm agent needs a provider");
  }
  std::string name() const override { return "llm"; }

  AgentMove choose(const BoardState& s, Rng&) override {
    std::string feedback;
    std::string note;
    for (int attempt = 0; attempt <= spec_.reprompts; ++attempt) {
      ChatClient::Reply reply;
      try {
        reply = spec_.provider->complete(build_move_prompt(s, feedback), [](const std::string& raw) {
          return nlohmann::json{{"move", move_notation(parse_move_reply(raw))}};
        });
      } catch (const RatingUnavailable& e) {
        note = std::string("provider unavailable: ") + e.what();
        break;
      }
      const Move m = parse_move(reply.parsed.at("move").get<std::string>());
      if (is_legal(s, m)) return {m, "Llm", attempt ? std::to_string(attempt) + " re-prompts" : "", {}, {}};
      // The attempt number keeps a repeated answer from hitting the prompt cache.
      feedback = "Attempt " + std::to_string(attempt + 2) + ": your previous answer " + move_notation(m) +
                 " is not legal: " + illegal_reason(s, m) + ".";
      note = "illegal answers: " + std::to_string(attempt + 1);
    }
    return {best_territory_move(s), "Fallback", note, {}, {}};
  }

 private:
  AgentSpec spec_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentSpec& spec) {
  switch (spec.kind) {
    case AgentKind::Hybrid: return std::make_unique<HybridAgent>(spec);
    case AgentKind::UctAeOnly: return std::make_unique<UctAgent>(spec);
    case AgentKind::SggaOnly: return std::make_unique<SggaAgent>(spec);
    case AgentKind::GatAeOnly: return std::make_unique<GatAgent>(spec);
    case AgentKind::LlmAgent: return std::make_unique<LlmAgent>(spec);
    case AgentKind::Random: return std::make_unique<RandomAgent>();
  }
  throw std::invalid_argument("unknown agent kind");
}

std::string build_move_prompt(const BoardState& state, const std::string& feedback) {
  const Side me = state.side_to_move();
  std::string grid = encode_grid(state);
  grid.pop_back();
  std::string pieces;
  for (Square sq : state.pieces(me)) pieces += (pieces.empty() ? "" : ", ") + square_name(sq);

  std::string out(game_rules_text());
  out += "\nNow you are a professional Amazon player playing " + std::string(side_name(me)) + " (ID " +
         (me == Side::White ? "1" : "2") + "), and the current position is:\n\n" + grid + "\n\n";
  out +=
      "Here, 1 represents White Amazons, 2 represents Black Amazons, and 3 represents blocked "
      "squares. The first line is rank 10 and the last line is rank 1; columns run from file a on "
      "the left to file j on the right.\n\n";
  out += "Your Amazons are on " + pieces + ".\n\n";
  if (!feedback.empty()) out += feedback + "\n\n";
  out +=
      "Choose your move: the Amazon to move, its destination and the obstacle square, written "
      "as FROM-TO/OBSTACLE, for example d1-d7/g7.\n\n"
      "Please output exactly that format and no other text.\n";
  return out;
}

Move parse_move_reply(std::string_view text) {
  static const std::regex token(R"(([a-jA-J](?:10|[1-9]))\s*-\s*([a-jA-J](?:10|[1-9]))\s*/\s*([a-jA-J](?:10|[1-9])))");
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, token)) throw ParseError("reply holds no move: " + s.substr(0, 80));
  auto lower = [](std::string v) {
    v[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(v[0])));
    return v;
  };
  return parse_move(lower(m[1].str()) + "-" + lower(m[2].str()) + "/" + lower(m[3].str()));
}

Move best_territory_move(const BoardState& state) {
  const auto moves = legal_moves(state);
  if (moves.empty()) throw NoLegalMoves("no legal move to fall back on");
  const Side me = state.side_to_move();
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const double t = territory(apply_move(state, moves[i]), me, MoveMetric::King);
    if (t > best_score) {
      best_score = t;
      best = i;
    }
  }
  return moves[best];
}

// ------------------------------------------------------------------- games

MatchRecord play_game(Agent& a, Agent& b, Side a_color, std::uint64_t seed, int game_index) {
  const auto t0 = std::chrono::steady_clock::now();
  MatchRecord rec;
  rec.game = game_index;
  rec.agent_a = a.name();
  rec.agent_b = b.name();
  rec.a_color = a_color;
  Rng rng_a(mix_seed(seed, 1));
  Rng rng_b(mix_seed(seed, 2));

  BoardState s = BoardState::initial();
  while (status(s) == GameStatus::Ongoing) {
    const Side mover = s.side_to_move();
    const bool a_moves = mover == a_color;
    Agent& agent = a_moves ? a : b;
    AgentMove m;
    try {
      m = agent.choose(s, a_moves ? rng_a : rng_b);
      if (!is_legal(s, m.move)) throw AgentFailure("illegal move " + move_notation(m.move));
    } catch (const std::exception& e) {
      rec.failed = mover;
      rec.failure = agent.name() + ": " + e.what();
      break;
    }
    s = apply_move(s, m.move);
    rec.moves.push_back(m.move);
    rec.sources.push_back(std::move(m.source));
    rec.notes.push_back(std::move(m.note));
  }
  rec.plies = static_cast<int>(rec.moves.size());
  rec.winner = rec.failed ? opponent(*rec.failed)
                          : (status(s) == GameStatus::WhiteWins ? Side::White : Side::Black);
  rec.a_won = rec.winner == a_color;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

WinRate win_rate_ci(int wins, int n, double z) {
  if (n < 1) throw std::invalid_argument("win rate needs at least one game");
  if (wins < 0 || wins > n) throw std::invalid_argument("wins must lie in [0, n]");
  WinRate r;
  r.p = static_cast<double>(wins) / n;
  r.half_width = z * std::sqrt(r.p * (1.0 - r.p) / n);
  r.lo = std::max(0.0, r.p - r.half_width);
  r.hi = std::min(1.0, r.p + r.half_width);
  return r;
}

MatchSummary summarize(const std::vector<MatchRecord>& records) {
  MatchSummary s;
  if (records.empty()) return s;
  s.agent_a = records.front().agent_a;
  s.agent_b = records.front().agent_b;
  for (const auto& r : records) {
    ++s.games;
    if (r.a_won) ++s.wins_a;
    else ++s.wins_b;
    if (r.failed) {
      if (*r.failed == r.a_color) ++s.failures_a;
      else ++s.failures_b;
    }
    if (r.a_color == Side::White) ++s.a_as_white;
    s.curve.push_back(static_cast<double>(s.wins_a) / s.games);
  }
  s.rate = win_rate_ci(s.wins_a, s.games);
  return s;
}

MatchResult run_match(const AgentSpec& a, const AgentSpec& b, int n_games, std::uint64_t seed,
                      int workers) {
  if (n_games < 1) throw std::invalid_argument("a match needs at least one game");
  // Build once up front so a bad spec fails before any game starts.
  make_agent(a);
  make_agent(b);

  auto one = [&](int i) {
    auto agent_a = make_agent(a);
    auto agent_b = make_agent(b);
    return play_game(*agent_a, *agent_b, i % 2 == 0 ? Side::White : Side::Black,
                     mix_seed(seed, static_cast<std::uint64_t>(i)), i);
  };
  MatchResult result;
  const int batch = std::max(workers, 1);
  for (int start = 0; start < n_games; start += batch) {
    std::vector<std::future<MatchRecord>> jobs;
    for (int i = start; i < std::min(n_games, start + batch); ++i) {
      jobs.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async, one, i));
    }
    for (auto& j : jobs) result.records.push_back(j.get());
  }
  result.summary = summarize(result.records);
  return result;
}

// ------------------------------------------------------------------ report

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

}  // namespace

void emit_report(const std::vector<MatchResult>& matches, const std::filesystem::path& out_dir) {
  if (matches.empty()) throw std::invalid_argument("no matches to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  auto games = open_csv(out_dir / "games.csv");
  auto curve = open_csv(out_dir / "curve.csv");
  auto ci = open_csv(out_dir / "ci.csv");
  games << "match,game,agent_a,agent_b,a_color,winner,a_won,plies,failed,wall_seconds,moves,sources\n";
  curve << "match,agent_a,agent_b,game,wins_a,win_rate_a\n";
  ci << "match,agent_a,agent_b,games,wins_a,win_rate_a,ci_lo,ci_hi,half_width,a_as_white,failures_a,failures_b\n";

  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto& recs = matches[k].records;
    if (recs.empty()) throw std::invalid_argument("match without records");
    const MatchSummary s = summarize(recs);
    int wins = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      std::string moves;
      std::string sources;
      for (std::size_t m = 0; m < r.moves.size(); ++m) {
        moves += (m ? " " : "") + move_notation(r.moves[m]);
        sources += (m ? " " : "") + r.sources[m];
      }
      games << k << ',' << r.game << ',' << r.agent_a << ',' << r.agent_b << ',' << side_name(r.a_color)
            << ',' << side_name(r.winner) << ',' << (r.a_won ? 1 : 0) << ',' << r.plies << ','
            << (r.failed ? std::string(side_name(*r.failed)) : "") << ',' << fmt(r.wall_seconds) << ','
            << moves << ',' << sources << '\n';
      wins += r.a_won;
      curve << k << ',' << r.agent_a << ',' << r.agent_b << ',' << i + 1 << ',' << wins << ','
            << fmt(static_cast<double>(wins) / static_cast<double>(i + 1)) << '\n';
    }
    ci << k << ',' << s.agent_a << ',' << s.agent_b << ',' << s.games << ',' << s.wins_a << ','
       << fmt(s.rate.p) << ',' << fmt(s.rate.lo) << ',' << fmt(s.rate.hi) << ',' << fmt(s.rate.half_width)
       << ',' << s.a_as_white << ',' << s.failures_a << ',' << s.failures_b << '\n';
  }
  for (auto* f : {&games, &curve, &ci}) {
    f->flush();
    if (!*f) throw IoError("write failed in " + out_dir.string());
  }
}

}  // namespace amazons
