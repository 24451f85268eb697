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

// Agent-versus-agent matches with alternating colours, win-rate curves and
// binomial confidence intervals.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amazons/board.hpp"
#include "amazons/datagen.hpp"
#include "amazons/hybrid.hpp"
#include "amazons/nn.hpp"

namespace amazons {

enum class AgentKind { Hybrid, UctAeOnly, SggaOnly, GatAeOnly, LlmAgent, Random };

/// "hybrid", "uct-ae", "sgga", "gat-ae", "llm", "random".
std::string_view agent_kind_name(AgentKind k);
AgentKind parse_agent_kind(std::string_view text);

struct AgentSpec {
  AgentKind kind = AgentKind::Hybrid;
  int node_budget = 20;
  double alpha = 0.5;
  double temperature = 0.1;  // search selection during play
  DecisionStrategy strategy = DecisionStrategy::Softmax;
  std::shared_ptr<const nn::ModelBundle> models;  // search-based agents
  std::shared_ptr<ChatClient> provider;           // LlmAgent only
  int reprompts = 3;                              // LlmAgent legality retries
  bool keep_trace = false;                        // search agents attach their tree
};

struct AgentMove {
  Move move{};
  std::string source;  // UctArgmax, SggaGat, Fallback, Llm or Random
  std::string note;    // e.g. why an LLM move fell back
  std::optional<TurnDecision> decision;   // hybrid and uct-ae agents
  std::shared_ptr<const TurnTrace> trace;  // only with AgentSpec::keep_trace
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Never called on a finished position.
  virtual AgentMove choose(const BoardState& state, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

/// Throws std::invalid_argument for a spec missing its models or provider.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec);

/// The move prompt sent to a chat model, with a feedback paragraph when a
/// previous answer was rejected.
std::string build_move_prompt(const BoardState& state, const std::string& feedback = {});

/// First "a1-b2/c3"-style token in a reply. Throws ParseError.
Move parse_move_reply(std::string_view text);

/// Legal move maximising the mover's king-move territory afterwards (first
/// in generation order on ties). Throws NoLegalMoves.
Move best_territory_move(const BoardState& state);

struct MatchRecord {
  int game = 0;
  std::string agent_a;
  std::string agent_b;
  Side a_color = Side::White;
  Side winner = Side::White;
  bool a_won = false;
  int plies = 0;
  std::vector<Move> moves;
  std::vector<std::string> sources;
  std::vector<std::string> notes;
  /// Set when an agent threw or returned an illegal move; that agent lost.
  std::optional<Side> failed;
  std::string failure;
  double wall_seconds = 0.0;
};

/// Plays one game; agent `a` takes `a_color`. Every move is checked here.
MatchRecord play_game(Agent& a, Agent& b, Side a_color, std::uint64_t seed, int game_index = 0);

struct WinRate {
  double p = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double half_width = 0.0;
};

/// p = wins / n with a normal-approximation half-width z sqrt(p(1-p)/n),
/// clamped to [0, 1].
WinRate win_rate_ci(int wins, int n, double z = 1.96);

struct MatchSummary {
  std::string agent_a;
  std::string agent_b;
  int games = 0;
  int wins_a = 0;
  int wins_b = 0;
  int failures_a = 0;
  int failures_b = 0;
  int a_as_white = 0;
  WinRate rate;                    // of agent a
  std::vector<double> curve;       // running win rate of a after each game
};

struct MatchResult {
  std::vector<MatchRecord> records;
  MatchSummary summary;
};

/// Game i uses seed mix_seed(seed, i); a plays white in even games.
/// Agents are rebuilt per game so games may run on `workers` threads.
MatchResult run_match(const AgentSpec& a, const AgentSpec& b, int n_games, std::uint64_t seed,
                      int workers = 1);

/// Recomputes the summary from the records.
MatchSummary summarize(const std::vector<MatchRecord>& records);

/// Writes games.csv, curve.csv and ci.csv into out_dir. Throws IoError.
void emit_report(const std::vector<MatchResult>& matches, const std::filesystem::path& out_dir);

}  // namespace amazons
