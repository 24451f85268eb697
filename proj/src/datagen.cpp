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

#include "amazons/datagen.hpp"

#include <openssl/evp.h>

#include "httplib.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "amazons/error.hpp"
#include "amazons/hybrid.hpp"

namespace amazons {

using nlohmann::json;

// ------------------------------------------------------------------ prompt

namespace {

constexpr std::string_view kRules =
    "Amazon is a two-player abstract strategy game that combines elements of strategy and board "
    "games. Below are the basic rules of Amazon:\n"
    "\n"
    "1.Board and Pieces\n"
    "Board: Amazon is played on a 10×10 grid.\n"
    "Pieces: Each player has four “Amazons”, typically distinguished by color (e.g., "
    "White vs. Black).\n"
    "\n"
    "2.Objective\n"
    "Players aim to occupy as much space as possible by moving their Amazons and firing arrows, "
    "while simultaneously blocking the opponent’s mobility.\n"
    "\n"
    "3.Rules of Play\n"
    "Initial Setup: Each player’s four Amazons are placed on predetermined squares of the "
    "first and last ranks.\n"
    "Turn Sequence: Players alternate turns. On your turn, you perform two actions in order:\n"
    "    Move: Choose one of your Amazons and move it along any straight line—horizontal, "
    "vertical, or diagonal—for any number of empty squares, without jumping over other "
    "pieces.\n"
    "    Shoot: After moving, choose a target square along another straight line from that "
    "Amazon’s new location; that square becomes permanently blocked and cannot be occupied "
    "or traversed.\n"
    "Restrictions: You may not move into or shoot at squares that are already occupied or "
    "already blocked.\n"
    "\n"
    "4.Additional Rule\n"
    "Players must ensure they follow the movement and shooting rules at every step.\n";

constexpr std::string_view kRatingTail =
    "\n"
    "Please review the above rules. Now you are a professional Amazon player, and the current "
    "position is:\n"
    "\n"
    "{string}\n"
    "\n"
    "Here, 1 represents White Amazons, 2 represents Black Amazons, and 3 represents blocked "
    "squares. You are to evaluate the move just played by player {chess} (ID {target}): they "
    "moved the Amazon with index {step0} to square {step1}, then place an obstacle at {put}. "
    "Based on both the current and potential future positions, score this turn using two values "
    "(each between 0 and 1):\n"
    "\n"
    "[move_score place_score]\n"
    "\n"
    "A score closer to 1 favors the player; closer to 0 favors the opponent.\n"
    "\n"
    "Please output exactly the above format and no other text.\n";

void replace_all(std::string& s, std::string_view key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
}

}  // namespace

std::string_view game_rules_text() { return kRules; }

RatingRequest RatingRequest::from_turn(const BoardState& after, Side mover, const Move& move) {
  return {encode_grid(after), mover, move.from, move.to, move.arrow};
}

std::string build_prompt(const RatingRequest& req) {
  std::string grid = req.grid_text;
  while (!grid.empty() && grid.back() == '\n') grid.pop_back();
  std::string out = std::string(kRules) + std::string(kRatingTail);
  replace_all(out, "{string}", grid);
  replace_all(out, "{chess}", std::string(side_name(req.chess)));
  replace_all(out, "{target}", std::to_string(req.target()));
  replace_all(out, "{step0}", square_name(req.step_from));
  replace_all(out, "{step1}", square_name(req.step_to));
  replace_all(out, "{put}", square_name(req.put));
  return out;
}

// ----------------------------------------------------------------- parsing

std::pair<double, double> parse_scores(std::string_view text) {
  static const std::regex strict(
      R"(^\s*\[?\s*([-+]?(?:\d+\.?\d*|\.\d+))\s+([-+]?(?:\d+\.?\d*|\.\d+))\s*\]?\s*$)");
  static const std::regex number(R"([-+]?(?:\d+\.\d*|\.\d+|\d+))");
  const std::string s(text);
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };

  std::smatch m;
  if (std::regex_match(s, m, strict)) {
    const double a = std::stod(m[1].str());
    const double b = std::stod(m[2].str());
    if (in_range(a) && in_range(b)) return {a, b};
  }
  std::vector<double> ok;
  bool saw_number = false;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator();
       ++it) {
    saw_number = true;
    const double v = std::stod(it->str());
    if (in_range(v)) ok.push_back(v);
    if (ok.size() == 2) return {ok[0], ok[1]};
  }
  if (saw_number) throw OutOfRange("no two scores in [0, 1] in reply: " + s.substr(0, 80));
  throw ParseError("reply holds no scores: " + s.substr(0, 80));
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

// -------------------------------------------------------------------- mock

RatingResponse MockRater::rate(const RatingRequest& req) {
  const BoardState after = parse_grid(req.grid_text, opponent(req.chess));
  double move_score = territory(after, req.chess, MoveMetric::King);
  double place_score = 1.0 - line_mobility(after, opponent(req.chess));
  if (epsilon_ > 0.0) {
    const std::string hash = sha256_hex(build_prompt(req));
    Rng rng(mix_seed(seed_, std::stoull(hash.substr(0, 16), nullptr, 16)));
    move_score += epsilon_ * uniform(rng, -1.0, 1.0);
    place_score += epsilon_ * uniform(rng, -1.0, 1.0);
  }
  RatingResponse r;
  r.move_score = std::clamp(move_score, 0.0, 1.0);
  r.place_score = std::clamp(place_score, 0.0, 1.0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.4f %.4f]", r.move_score, r.place_score);
  r.raw_text = buf;
  r.provider = name();
  return r;
}

// ------------------------------------------------------------- transport

namespace {

class HttplibTransport final : public Transport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout) override;
};

HttpResult HttplibTransport::post_json(const std::string& url, const std::string& body,
                                       const std::vector<std::pair<std::string, std::string>>& headers,
                                       std::chrono::milliseconds timeout) {
  // Split "scheme://host[:port]/path".
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  HttpResult out;
  try {
    httplib::Client client(origin);
    if (!client.is_valid()) {
      out.error = "unsupported endpoint " + origin;
      return out;
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

std::optional<json> PromptCache::get(const std::string& hash) const {
  std::lock_guard lock(mu_);
  std::ifstream f(path_for(hash));
  if (!f) return std::nullopt;
  try {
    return json::parse(f);
  } catch (const json::exception&) {
    return std::nullopt;  // a torn or foreign file is a miss
  }
}

void PromptCache::put(const std::string& hash, const json& entry) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const auto final_path = path_for(hash);
  auto tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot write cache entry " + tmp.string());
    f << entry.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw IoError("cannot commit cache entry: " + ec.message());
}

TokenBucket::TokenBucket(double per_minute, double burst)
    : rate_per_s_(per_minute / 60.0), burst_(burst), tokens_(burst),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_per_s_ <= 0.0) return;
  std::unique_lock lock(mu_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_s_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_s_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

ChatClient::ChatClient(ProviderConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      sleep_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      cache_(cfg_.cache_dir),
      bucket_(cfg_.requests_per_minute) {}

ChatClient::Reply ChatClient::complete(const std::string& prompt, const Validator& validate) {
  const std::string hash = sha256_hex(prompt);
  if (auto hit = cache_.get(hash); hit && hit->contains("raw") && hit->contains("parsed")) {
    return {(*hit)["raw"].get<std::string>(), (*hit)["parsed"], true};
  }
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw AuthError("environment variable " + cfg_.api_key_env + " is not set");

  const json body = {{"model", cfg_.model},
                     {"temperature", cfg_.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  const std::vector<std::pair<std::string, std::string>> headers = {
      {"Authorization", std::string("Bearer ") + key}};

  std::string last_error = "no attempt made";
  const int attempts = std::max(cfg_.max_retries, 1);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) sleep_(cfg_.backoff_base * (1LL << (attempt - 1)));
    bucket_.acquire();
    {
      std::lock_guard lock(count_mu_);
      ++network_calls_;
    }
    const HttpResult res = transport_->post_json(cfg_.endpoint_url, body.dump(), headers, cfg_.timeout);
    if (res.status == 401 || res.status == 403) {
      throw AuthError("provider rejected the credentials (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status == 0) {
      last_error = "transport: " + res.error;
      continue;
    }
    if (res.status == 429) {
      last_error = RateLimited("HTTP 429").what();
      continue;
    }
    if (res.status >= 400) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    std::string content;
    try {
      const json reply = json::parse(res.body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      last_error = std::string("malformed completion: ") + e.what();
      continue;
    }
    try {
      json parsed = validate(content);
      cache_.put(hash, {{"prompt_sha256", hash}, {"model", cfg_.model}, {"raw", content}, {"parsed", parsed}});
      return {content, std::move(parsed), false};
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw RatingUnavailable("no usable reply after " + std::to_string(attempts) +
                          " attempts; last error: " + last_error);
}

RatingResponse LlmRater::rate(const RatingRequest& req) {
  const auto reply = client_->complete(build_prompt(req), [](const std::string& raw) {
    const auto [m, p] = parse_scores(raw);
    return json{{"move_score", m}, {"place_score", p}};
  });
  RatingResponse r;
  r.move_score = reply.parsed.at("move_score").get<double>();
  r.place_score = reply.parsed.at("place_score").get<double>();
  r.raw_text = reply.raw;
  r.provider = name();
  r.cached = reply.cached;
  return r;
}

// ----------------------------------------------------------------- records

namespace {

json measures_json(const MeasureVector& m) {
  const auto a = m.as_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

MeasureVector measures_from(const json& j) {
  std::array<double, MeasureVector::kSize> a{};
  if (!j.is_array() || j.size() != a.size()) throw ParseError("measure vector must have 5 entries");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = j[i].get<double>();
  return MeasureVector::from_array(a);
}

Side side_from(const std::string& s) {
  if (s == "white") return Side::White;
  if (s == "black") return Side::Black;
  throw ParseError("unknown side " + s);
}

}  // namespace

json DatasetRecord::to_json() const {
  return {{"game", game},
          {"ply", ply},
          {"mover", std::string(side_name(mover))},
          {"move", move_notation(move)},
          {"grid", grid},
          {"measures", measures_json(measures)},
          {"move_score", move_score},
          {"place_score", place_score}};
}

DatasetRecord DatasetRecord::from_json(const json& j) {
  try {
    DatasetRecord r;
    r.game = j.at("game").get<int>();
    r.ply = j.at("ply").get<int>();
    r.mover = side_from(j.at("mover").get<std::string>());
    r.move = parse_move(j.at("move").get<std::string>());
    r.grid = j.at("grid").get<std::string>();
    r.measures = measures_from(j.at("measures"));
    r.move_score = j.at("move_score").get<double>();
    r.place_score = j.at("place_score").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad dataset record: ") + e.what());
  }
}

json GraphRecord::to_json() const {
  json parent = json::array();
  json m = json::array();
  json label = json::array();
  json labelled = json::array();
  for (const auto& n : nodes) {
    parent.push_back(n.parent);
    m.push_back(measures_json(n.measures));
    label.push_back(n.label);
    labelled.push_back(n.labelled ? 1 : 0);
  }
  return {{"game", game}, {"ply", ply}, {"parent", parent}, {"measures", m}, {"label", label},
          {"labelled", labelled}};
}

GraphRecord GraphRecord::from_json(const json& j) {
  try {
    GraphRecord g;
    g.game = j.at("game").get<int>();
    g.ply = j.at("ply").get<int>();
    const auto& parent = j.at("parent");
    const auto& m = j.at("measures");
    const auto& label = j.at("label");
    const auto& labelled = j.at("labelled");
    if (m.size() != parent.size() || label.size() != parent.size() || labelled.size() != parent.size()) {
      throw ParseError("graph record columns differ in length");
    }
    for (std::size_t i = 0; i < parent.size(); ++i) {
      GraphNodeRecord n;
      n.parent = parent[i].get<int>();
      if (n.parent >= static_cast<int>(i)) throw ParseError("graph node precedes its parent");
      n.measures = measures_from(m[i]);
      n.label = label[i].get<double>();
      n.labelled = labelled[i].get<int>() != 0;
      g.nodes.push_back(n);
    }
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad graph record: ") + e.what());
  }
}

SearchTree GraphRecord::to_tree() const {
  SearchTree t;
  int heads = 0;
  for (const auto& n : nodes) {
    if (n.parent < 0) {
      t.add_head(heads++, n.label);
    } else {
      t.add_move_node(n.parent, Move{}, t.root_state(), n.measures, n.label);
    }
  }
  return t;
}

std::filesystem::path graphs_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".graphs.jsonl";
  return p;
}

// ---------------------------------------------------------------- self-play

namespace {

struct GameOutput {
  std::string records;
  std::string graphs;
  int record_count = 0;
  int unavailable = 0;
};

Square sample_arrow(const BoardState& s, Square from, Square to, const nn::ModelBundle& models,
                    Rng& rng) {
  const auto& pieces = s.pieces(s.side_to_move());
  const auto piece = static_cast<int>(std::find(pieces.begin(), pieces.end(), from) - pieces.begin());
  std::vector<Move> options;
  std::vector<double> weights;
  for (const Move& m : legal_moves_for_piece(s, piece)) {
    if (m.to != to) continue;
    options.push_back(m);
    weights.push_back(nn::squash(models.place.score(measures(s, m, apply_move(s, m)).as_array())));
  }
  return options[sample_weighted(rng, weights)].arrow;
}

GameOutput play_labelled_game(int game, const DatagenConfig& cfg, Rater& rater,
                              const nn::ModelBundle& models) {
  GameOutput out;
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(game)));
  BoardState s = BoardState::initial();
  for (int ply = 0; status(s) == GameStatus::Ongoing; ++ply) {
    SearchTree tree = run_search(s, cfg.search, models, rng);
    propagate_values(tree);
    const SggaResult sg = run_sgga(tree, cfg.sgga, rng);

    int node;
    if (cfg.movement == MovementMode::Sgga && sg.target) {
      node = tree.node(*sg.target).kind == NodeKind::Head ? best_under_head(tree, *sg.target).node
                                                           : first_action_node(tree, *sg.target);
    } else {
      node = uct_best(tree).node;
    }
    Move mv = tree.node(node).move;
    if (cfg.placement == PlacementMode::WeightedRandom) mv.arrow = sample_arrow(s, mv.from, mv.to, models, rng);

    const Side mover = s.side_to_move();
    const BoardState after = apply_move(s, mv);

    if (cfg.write_graphs) {
      GraphRecord g;
      g.game = game;
      g.ply = ply;
      for (const auto& n : tree.nodes()) {
        g.nodes.push_back({n.parent, n.measures, n.obj,
                           sg.repo.node_count[static_cast<std::size_t>(n.id)] > 0});
      }
      out.graphs += g.to_json().dump() + "\n";
    }

    try {
      const RatingResponse r = rater.rate(RatingRequest::from_turn(after, mover, mv));
      DatasetRecord rec{game, ply, mover, mv, encode_grid(after), measures(s, mv, after),
                        r.move_score, r.place_score};
      out.records += rec.to_json().dump() + "\n";
      ++out.record_count;
    } catch (const RatingUnavailable&) {
      ++out.unavailable;
    }
    s = after;
  }
  return out;
}

// Game ids present in a JSONL file; drops a torn final line.
std::set<int> existing_games(const std::filesystem::path& path) {
  std::set<int> games;
  if (!std::filesystem::exists(path)) return games;
  std::string content;
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    content.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  const std::size_t keep = content.empty() || content.back() == '\n' ? content.size()
                                                                     : content.rfind('\n') + 1;
  if (keep != content.size()) {
    std::filesystem::resize_file(path, keep);
    content.resize(keep);
  }
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("game")) games.insert(j["game"].get<int>());
  }
  return games;
}

void append(const std::filesystem::path& path, const std::string& text) {
  if (text.empty()) return;
  std::ofstream f(path, std::ios::binary | std::ios::app);
  if (!f) throw IoError("cannot append to " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace

DatagenResult generate_dataset(const DatagenConfig& config, Rater& rater,
                               const nn::ModelBundle& models, const std::filesystem::path& out) {
  if (config.games < 0) throw std::invalid_argument("game count must be >= 0");
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  const bool fresh = !std::filesystem::exists(out) || std::filesystem::file_size(out) == 0;
  const auto done = existing_games(out);
  const auto gpath = graphs_path(out);
  const auto graphs_done = config.write_graphs ? existing_games(gpath) : std::set<int>{};
  if (fresh) {
    const json header = {{"format", "amazons-dataset"},
                         {"version", 1},
                         {"seed", config.seed},
                         {"provider", rater.name()},
                         {"budget", config.search.budget},
                         {"movement", config.movement == MovementMode::Sgga ? "sgga" : "uct"},
                         {"placement", config.placement == PlacementMode::Sgga ? "sgga" : "weighted-random"}};
    append(out, header.dump() + "\n");
  }

  DatagenResult result;
  std::vector<int> todo;
  for (int g = 0; g < config.games; ++g) {
    if (done.count(g)) ++result.games_resumed;
    else todo.push_back(g);
  }
  const std::size_t batch = static_cast<std::size_t>(std::max(config.workers, 1));
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    std::vector<std::future<GameOutput>> jobs;
    for (std::size_t i = start; i < std::min(todo.size(), start + batch); ++i) {
      jobs.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async,
                                play_labelled_game, todo[i], std::cref(config), std::ref(rater),
                                std::cref(models)));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      GameOutput g = jobs[i].get();
      // Graphs first: a game only counts as done once its records land.
      if (config.write_graphs && !graphs_done.count(todo[start + i])) append(gpath, g.graphs);
      append(out, g.records);
      ++result.games_written;
      result.records += g.record_count;
      result.unavailable += g.unavailable;
    }
  }
  return result;
}

namespace {

template <class T>
std::vector<T> load_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": not JSON");
    if (j.contains("format")) continue;  // header
    out.push_back(T::from_json(j));
  }
  return out;
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  return load_jsonl<DatasetRecord>(path);
}

std::vector<GraphRecord> load_graphs(const std::filesystem::path& path) {
  return load_jsonl<GraphRecord>(path);
}

}  // namespace amazons
