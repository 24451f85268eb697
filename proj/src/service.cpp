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

#include "amazons/service.hpp"

#include <cstdio>
#include <sstream>
#include <thread>

#include "amazons/error.hpp"
#include "httplib.h"

namespace amazons {

using nlohmann::json;

namespace {

ApiResponse error(int status, const std::string& code, const std::string& message) {
  return {status, json{{"code", code}, {"message", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Thrown for request bodies that parse but do not validate.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  json j = json::parse(body);
  if (!j.is_object()) throw BadRequest("body must be a JSON object");
  return j;
}

Square square_from(const json& j, const char* field) {
  if (j.is_string()) {
    try {
      return parse_square(j.get<std::string>());
    } catch (const ParseError& e) {
      throw BadRequest(std::string(field) + ": " + e.what());
    }
  }
  if (!j.is_object() || !j.contains("file") || !j.contains("rank") || !j["file"].is_number_integer() ||
      !j["rank"].is_number_integer()) {
    throw BadRequest(std::string(field) + " must be {file, rank} or a square name");
  }
  const Square sq{j["file"].get<int>(), j["rank"].get<int>()};
  if (!sq.on_board()) throw BadRequest(std::string(field) + " is off the board");
  return sq;
}

Move move_from(const json& body) {
  if (body.contains("move")) {
    if (!body["move"].is_string()) throw BadRequest("move must be a string like d1-d7/g7");
    try {
      return parse_move(body["move"].get<std::string>());
    } catch (const ParseError& e) {
      throw BadRequest(e.what());
    }
  }
  for (const char* f : {"from", "to", "arrow"}) {
    if (!body.contains(f)) throw BadRequest(std::string("missing field ") + f);
  }
  return {square_from(body["from"], "from"), square_from(body["to"], "to"),
          square_from(body["arrow"], "arrow")};
}

std::optional<Side> parse_colour(const std::string& text) {
  if (text == "white") return Side::White;
  if (text == "black") return Side::Black;
  if (text == "none") return std::nullopt;
  throw BadRequest("human_color must be white, black or none");
}

json candidate_json(const Candidate& c) {
  return {{"move", move_json(c.move)}, {"obj", c.obj}, {"node", c.node}};
}

json decision_json(const TurnDecision& d) {
  json scores = json::array();
  for (const auto& [node, score] : d.gat_scores) scores.push_back({{"node", node}, {"score", score}});
  return {{"chosen", move_json(d.chosen)},
          {"source", source_name(d.source)},
          {"uct", candidate_json(d.uct)},
          {"sgga", d.sgga ? candidate_json(*d.sgga) : json(nullptr)},
          {"gat_scores", scores}};
}

}  // namespace

json square_json(Square sq) { return {{"file", sq.file}, {"rank", sq.rank}, {"name", square_name(sq)}}; }

json move_json(const Move& m) {
  return {{"from", square_json(m.from)},
          {"to", square_json(m.to)},
          {"arrow", square_json(m.arrow)},
          {"notation", move_notation(m)}};
}

std::string_view status_name(GameStatus st) {
  switch (st) {
    case GameStatus::Ongoing: return "ongoing";
    case GameStatus::WhiteWins: return "white_wins";
    case GameStatus::BlackWins: return "black_wins";
  }
  return "?";
}

json state_json(const BoardState& s) {
  json grid = json::array();
  std::istringstream in(encode_grid(s));
  for (std::string line; std::getline(in, line);) grid.push_back(line);
  json pieces = json::object();
  for (Side side : {Side::White, Side::Black}) {
    json list = json::array();
    for (Square sq : s.pieces(side)) list.push_back(square_json(sq));
    pieces[std::string(side_name(side))] = list;
  }
  return {{"grid", grid},
          {"side_to_move", side_name(s.side_to_move())},
          {"turn", s.turn()},
          {"status", status_name(status(s))},
          {"pieces", pieces},
          {"legal_moves", legal_moves(s).size()}};
}

// ----------------------------------------------------------------- service

GameService::GameService(ServiceOptions options) : opts_(std::move(options)) {
  if (opts_.journal.empty()) return;
  replay_journal();
  journal_out_.open(opts_.journal, std::ios::binary | std::ios::app);
  if (!journal_out_) throw IoError("cannot open journal " + opts_.journal.string());
}

std::size_t GameService::session_count() const {
  std::lock_guard lock(store_mu_);
  return sessions_.size();
}

std::shared_ptr<GameService::Session> GameService::find(const std::string& id) const {
  std::lock_guard lock(store_mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse GameService::handle(const std::string& method, const std::string& path,
                                const std::string& body) {
  try {
    const auto parts = split_path(path);
    if (parts.empty() || parts[0] != "games" || parts.size() > 3) {
      return error(404, "not_found", "no route for " + path);
    }
    if (parts.size() == 1) {
      if (method != "POST") return error(405, "method_not_allowed", method + " " + path);
      return create(parse_body(body));
    }
    const auto session = find(parts[1]);
    if (!session) return error(404, "unknown_game", "no game with id " + parts[1]);
    const std::string action = parts.size() == 3 ? parts[2] : "";
    const std::string want = action.empty() || action == "analysis" ? "GET" : "POST";
    if (!action.empty() && action != "move" && action != "engine-move" && action != "analysis") {
      return error(404, "not_found", "no route for " + path);
    }
    if (method != want) return error(405, "method_not_allowed", method + " " + path);

    std::lock_guard lock(session->mu);
    if (action.empty()) return get(*session);
    if (action == "move") return human_move(*session, parse_body(body));
    if (action == "engine-move") return engine_move(*session);
    return analysis(*session);
  } catch (const json::exception& e) {
    return error(422, "malformed_body", e.what());
  } catch (const BadRequest& e) {
    return error(422, "malformed_body", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

std::shared_ptr<GameService::Session> GameService::make_session(const std::string& id,
                                                                const json& p) {
  auto s = std::make_shared<Session>();
  s->id = id;
  AgentKind kind;
  try {
    kind = parse_agent_kind(p.at("engine").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw BadRequest(e.what());
  }
  if (kind == AgentKind::LlmAgent) throw BadRequest("the llm engine is not served");
  const int budget = p.at("budget").get<int>();
  if (budget < 1 || budget > opts_.max_budget) {
    throw BadRequest("budget must lie in [1, " + std::to_string(opts_.max_budget) + "]");
  }
  s->engine.kind = kind;
  s->engine.node_budget = budget;
  s->engine.models = opts_.models;
  s->engine.keep_trace = true;
  if (kind != AgentKind::Random && !s->engine.models) throw BadRequest("no models loaded for this engine");
  s->human = parse_colour(p.at("human_color").get<std::string>());
  s->seed = p.at("seed").get<std::uint64_t>();
  return s;
}

ApiResponse GameService::create(const json& body) {
  json p = {{"engine", body.value("engine", std::string("hybrid"))},
            {"budget", body.value("budget", 20)},
            {"human_color", body.value("human_color", std::string("white"))}};
  std::string id;
  {
    std::lock_guard lock(store_mu_);
    do {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(mix_seed(opts_.seed, next_id_++)));
      id = buf;
    } while (sessions_.count(id));
  }
  p["seed"] = body.contains("seed") ? body["seed"].get<std::uint64_t>() : mix_seed(opts_.seed, std::hash<std::string>{}(id));
  auto s = make_session(id, p);
  {
    std::lock_guard lock(store_mu_);
    sessions_[id] = s;
  }
  json entry = p;
  entry["op"] = "create";
  entry["id"] = id;
  journal(entry);
  std::lock_guard lock(s->mu);
  return {201, summary(*s)};
}

json GameService::summary(const Session& s) const {
  json history = json::array();
  for (const auto& m : s.history) history.push_back(move_notation(m));
  return {{"id", s.id},
          {"engine", {{"kind", agent_kind_name(s.engine.kind)}, {"budget", s.engine.node_budget}}},
          {"human_color", s.human ? std::string(side_name(*s.human)) : "none"},
          {"state", state_json(s.state)},
          {"status", status_name(status(s.state))},
          {"history", history},
          {"sources", s.sources}};
}

ApiResponse GameService::get(Session& s) const { return {200, summary(s)}; }

ApiResponse GameService::human_move(Session& s, const json& body) {
  const Move m = move_from(body);
  if (status(s.state) != GameStatus::Ongoing) return error(409, "game_over", "the game has finished");
  if (!s.human || *s.human != s.state.side_to_move()) {
    return error(409, "not_your_turn", "it is the engine's turn");
  }
  if (!is_legal(s.state, m)) return error(409, "illegal_move", move_notation(m) + " is not legal here");
  s.state = apply_move(s.state, m);
  s.history.push_back(m);
  s.sources.push_back("Human");
  journal({{"op", "move"}, {"id", s.id}, {"move", move_notation(m)}, {"source", "Human"}});
  return {200, summary(s)};
}

ApiResponse GameService::engine_move(Session& s) {
  if (status(s.state) != GameStatus::Ongoing) return error(409, "game_over", "the game has finished");
  if (s.human && *s.human == s.state.side_to_move()) {
    return error(409, "not_engine_turn", "it is the human's turn");
  }
  auto agent = make_agent(s.engine);
  Rng rng(mix_seed(s.seed, s.history.size()));
  AgentMove m = agent->choose(s.state, rng);
  if (!is_legal(s.state, m.move)) {
    return error(500, "engine_failure", "engine proposed " + move_notation(m.move));
  }
  s.trace = m.trace;
  s.decision = m.decision;
  s.trace_ply = static_cast<int>(s.history.size());
  s.state = apply_move(s.state, m.move);
  s.history.push_back(m.move);
  s.sources.push_back(m.source);
  journal({{"op", "move"}, {"id", s.id}, {"move", move_notation(m.move)}, {"source", m.source}});

  json out = summary(s);
  out["engine_move"] = move_json(m.move);
  out["source"] = m.source;
  out["decision"] = m.decision ? decision_json(*m.decision) : json(nullptr);
  return {200, out};
}

ApiResponse GameService::analysis(const Session& s) const {
  if (!s.trace) return {200, {{"id", s.id}, {"available", false}}};
  std::map<int, double> gat;
  for (const auto& [node, score] : s.trace->ranking.scores) gat[node] = score;
  json nodes = json::array();
  for (const auto& n : s.trace->tree.nodes()) {
    const bool head = n.kind == NodeKind::Head;
    const auto g = gat.find(n.id);
    nodes.push_back({{"id", n.id},
                     {"parent", n.parent},
                     {"kind", head ? "head" : "move"},
                     {"piece", head ? json(square_json(s.trace->tree.root_state().pieces(
                                          s.trace->tree.root_state().side_to_move())[n.piece_index]))
                                    : json(nullptr)},
                     {"move", head ? json(nullptr) : move_json(n.move)},
                     {"height", n.height},
                     {"visits", n.visits},
                     {"obj", n.obj},
                     {"gat_score", g == gat.end() ? json(nullptr) : json(g->second)}});
  }
  return {200,
          {{"id", s.id},
           {"available", true},
           {"ply", s.trace_ply},
           {"source", s.sources.at(static_cast<std::size_t>(s.trace_ply))},
           {"sgga_target", s.trace->sgga_target ? json(*s.trace->sgga_target) : json(nullptr)},
           {"decision", s.decision ? decision_json(*s.decision) : json(nullptr)},
           {"nodes", nodes}}};
}

// ----------------------------------------------------------------- journal

void GameService::journal(const json& entry) {
  if (opts_.journal.empty()) return;
  std::lock_guard lock(journal_mu_);
  journal_out_ << entry.dump() << '\n';
  journal_out_.flush();
  if (!journal_out_) throw IoError("journal write failed");
}

void GameService::replay_journal() {
  std::ifstream in(opts_.journal, std::ios::binary);
  if (!in) return;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  // A torn final line is dropped so that new entries start cleanly.
  const auto last_nl = text.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (keep != text.size()) std::filesystem::resize_file(opts_.journal, keep);

  std::istringstream lines(text.substr(0, keep));
  int line_no = 0;
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json e = json::parse(line);
      const std::string op = e.at("op");
      const std::string id = e.at("id");
      if (op == "create") {
        sessions_[id] = make_session(id, e);
        ++next_id_;
      } else if (op == "move") {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw IoError("move for unknown game " + id);
        Session& s = *it->second;
        const Move m = parse_move(e.at("move").get<std::string>());
        if (!is_legal(s.state, m)) throw IoError("illegal move " + move_notation(m));
        s.state = apply_move(s.state, m);
        s.history.push_back(m);
        s.sources.push_back(e.value("source", std::string("Human")));
      }
    } catch (const std::exception& ex) {
      throw IoError("journal " + opts_.journal.string() + " line " + std::to_string(line_no) + ": " +
                    ex.what());
    }
  }
}

// -------------------------------------------------------------------- http

struct HttpFrontend::Impl {
  explicit Impl(GameService& s) : service(s) {}
  GameService& service;
  httplib::Server server;
  std::thread thread;
};

HttpFrontend::HttpFrontend(GameService& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const char* any = R"(/.*)";
  impl_->server.Get(any, handler);
  impl_->server.Post(any, handler);
  impl_->server.Put(any, handler);
  impl_->server.Delete(any, handler);
  impl_->server.Options(any, [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  impl_->server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  return bound;
}

void HttpFrontend::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpFrontend::stop() {
  impl_->server.stop();
  wait();
}

}  // namespace amazons
