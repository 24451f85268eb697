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

// Labelling of played turns by a chat model (or an offline mock), and the
// self-play loop that writes the labelled dataset.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amazons/board.hpp"
#include "amazons/eval.hpp"
#include "amazons/nn.hpp"
#include "amazons/search.hpp"
#include "amazons/sgga.hpp"

#include "json.hpp"

namespace amazons {

struct RatingRequest {
  std::string grid_text;  // position after the rated turn
  Side chess = Side::White;
  Square step_from;
  Square step_to;
  Square put;

  int target() const { return chess == Side::White ? 1 : 2; }
  static RatingRequest from_turn(const BoardState& after, Side mover, const Move& move);
};

struct RatingResponse {
  double move_score = 0.0;
  double place_score = 0.0;
  std::string raw_text;
  std::string provider;
  bool cached = false;
};

/// The rules section shared by every prompt, ending with a newline.
std::string_view game_rules_text();

/// The rating prompt with every placeholder filled in.
std::string build_prompt(const RatingRequest& req);

/// Strict "[a b]" first, then the first two numbers in [0, 1] anywhere.
/// Throws OutOfRange when only out-of-range numbers are present, ParseError
/// otherwise.
std::pair<double, double> parse_scores(std::string_view text);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

class Rater {
 public:
  virtual ~Rater() = default;
  virtual RatingResponse rate(const RatingRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Offline stand-in: king-move territory of the mover and one minus the
/// opponent's line mobility, plus uniform noise of amplitude epsilon.
class MockRater final : public Rater {
 public:
  explicit MockRater(std::uint64_t seed = 0, double epsilon = 0.1) : seed_(seed), epsilon_(epsilon) {}
  RatingResponse rate(const RatingRequest& req) override;
  std::string name() const override { return "mock"; }

 private:
  std::uint64_t seed_;
  double epsilon_;
};

// ------------------------------------------------------------ chat provider

struct ProviderConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int max_retries = 3;  // total attempts per prompt
  std::chrono::milliseconds timeout{30000};
  double requests_per_minute = 60.0;
  std::chrono::milliseconds backoff_base{500};
  std::filesystem::path cache_dir = ".amazons-cache";
};

struct HttpResult {
  int status = 0;          // 0 when the request never completed
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResult post_json(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib client; https needs the library built with OpenSSL support.
std::shared_ptr<Transport> make_http_transport();

/// One JSON file per prompt hash.
class PromptCache {
 public:
  explicit PromptCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<nlohmann::json> get(const std::string& hash) const;
  void put(const std::string& hash, const nlohmann::json& entry);
  std::filesystem::path path_for(const std::string& hash) const { return dir_ / (hash + ".json"); }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// Blocks until a request slot is free.
class TokenBucket {
 public:
  explicit TokenBucket(double per_minute, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_s_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

/// Cached, rate-limited chat completion with retries.
class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  /// Parses the raw reply into the value that gets cached; throwing
  /// ParseError asks for another attempt.
  using Validator = std::function<nlohmann::json(const std::string& raw)>;

  ChatClient(ProviderConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  struct Reply {
    std::string raw;
    nlohmann::json parsed;
    bool cached = false;
  };
  /// Throws AuthError, RatingUnavailable.
  Reply complete(const std::string& prompt, const Validator& validate);

  int network_calls() const { return network_calls_; }
  const ProviderConfig& config() const { return cfg_; }

 private:
  ProviderConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleep_;
  PromptCache cache_;
  TokenBucket bucket_;
  std::mutex count_mu_;
  int network_calls_ = 0;
};

class LlmRater final : public Rater {
 public:
  explicit LlmRater(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}
  RatingResponse rate(const RatingRequest& req) override;
  std::string name() const override { return "api:" + client_->config().model; }

 private:
  std::shared_ptr<ChatClient> client_;
};

// ------------------------------------------------------------------ dataset

struct DatasetRecord {
  int game = 0;
  int ply = 0;
  Side mover = Side::White;
  Move move{};
  std::string grid;  // after the move
  MeasureVector measures;
  double move_score = 0.0;
  double place_score = 0.0;

  nlohmann::json to_json() const;
  static DatasetRecord from_json(const nlohmann::json& j);
};

/// One searched position: enough of the tree to rebuild the GAT input.
struct GraphNodeRecord {
  int parent = -1;  // -1 for heads
  MeasureVector measures;
  double label = 0.0;  // propagated obj
  bool labelled = false;  // visited by SGGA
};

struct GraphRecord {
  int game = 0;
  int ply = 0;
  std::vector<GraphNodeRecord> nodes;

  nlohmann::json to_json() const;
  static GraphRecord from_json(const nlohmann::json& j);
  /// Tree with placeholder positions; heads first, ids preserved.
  SearchTree to_tree() const;
};

enum class MovementMode { Sgga, Uct };
enum class PlacementMode { WeightedRandom, Sgga };

struct DatagenConfig {
  int games = 200;
  std::uint64_t seed = 1;
  SearchConfig search;
  SggaConfig sgga;
  MovementMode movement = MovementMode::Sgga;
  PlacementMode placement = PlacementMode::WeightedRandom;
  bool write_graphs = true;
  int workers = 1;  // games labelled concurrently
};

struct DatagenResult {
  int games_written = 0;
  int games_resumed = 0;  // already present, skipped
  int records = 0;
  int unavailable = 0;  // turns whose rating failed
};

/// Companion file holding the per-ply search graphs.
std::filesystem::path graphs_path(const std::filesystem::path& dataset);

/// Self-play with the given models, labelling every turn through `rater`.
/// Appends to `out`, skipping game ids it already holds. Throws IoError.
DatagenResult generate_dataset(const DatagenConfig& config, Rater& rater,
                               const nn::ModelBundle& models, const std::filesystem::path& out);

/// Throws IoError, ParseError.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
std::vector<GraphRecord> load_graphs(const std::filesystem::path& path);

}  // namespace amazons
