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

// Game sessions behind a small JSON API, plus the HTTP front end that serves it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"

#include "amazons/arena.hpp"

namespace amazons {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  std::shared_ptr<const nn::ModelBundle> models;  // required for search engines
  std::uint64_t seed = 1;                        // session ids and engine randomness
  std::filesystem::path journal;                 // empty disables the journal
  int max_budget = 1000;
};

/// {"file": 0-9, "rank": 0-9, "name": "a1"}.
nlohmann::json square_json(Square sq);
nlohmann::json move_json(const Move& m);
/// Grid rows (rank 10 first), side to move, turn, status and piece squares.
nlohmann::json state_json(const BoardState& s);
std::string_view status_name(GameStatus st);

/// In-memory session store. Requests on one session are serialised; distinct
/// sessions run concurrently.
class GameService {
 public:
  /// Replays the journal when one exists. Throws IoError.
  explicit GameService(ServiceOptions options);

  /// Routes one request. Errors come back as {code, message} with 404, 405,
  /// 409 or 422; the service itself never throws.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

  std::size_t session_count() const;

 private:
  struct Session {
    std::mutex mu;
    std::string id;
    AgentSpec engine;
    std::optional<Side> human;
    std::uint64_t seed = 0;
    BoardState state = BoardState::initial();
    std::vector<Move> history;
    std::vector<std::string> sources;
    std::shared_ptr<const TurnTrace> trace;
    std::optional<TurnDecision> decision;
    int trace_ply = -1;
  };

  ApiResponse create(const nlohmann::json& body);
  ApiResponse get(Session& s) const;
  ApiResponse human_move(Session& s, const nlohmann::json& body);
  ApiResponse engine_move(Session& s);
  ApiResponse analysis(const Session& s) const;

  nlohmann::json summary(const Session& s) const;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> make_session(const std::string& id, const nlohmann::json& params);
  void journal(const nlohmann::json& entry);
  void replay_journal();

  ServiceOptions opts_;
  mutable std::mutex store_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 0;
  std::mutex journal_mu_;
  std::ofstream journal_out_;
};

/// Serves a GameService over HTTP on a background thread.
class HttpFrontend {
 public:
  explicit HttpFrontend(GameService& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  /// Port 0 binds any free port. Returns the bound port; throws IoError.
  int start(const std::string& host, int port);
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace amazons
