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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "amazons/datagen.hpp"
#include "amazons/error.hpp"
#include "scripted_transport.hpp"
#include "tempdir.hpp"

namespace amazons {
namespace {

using nlohmann::json;
using testing::completion;
using testing::read_file;
using testing::ScriptedTransport;
using testing::TempDir;

RatingRequest golden_request() {
  const auto s = BoardState::initial();
  const Move m = parse_move("d1-d7/g7");
  return RatingRequest::from_turn(apply_move(s, m), Side::White, m);
}

TEST(Prompt, MatchesGoldenFile) {
  const auto golden = read_file(std::filesystem::path(AMAZONS_TEST_DATA_DIR) / "prompt_golden.txt");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(build_prompt(golden_request()), golden);
}

TEST(Prompt, BlackTargetId) {
  auto req = golden_request();
  req.chess = Side::Black;
  EXPECT_EQ(req.target(), 2);
  EXPECT_NE(build_prompt(req).find("player black (ID 2)"), std::string::npos);
}

TEST(ParseScores, StrictAndLenient) {
  EXPECT_EQ(parse_scores("[0.7 0.4]"), std::make_pair(0.7, 0.4));
  EXPECT_EQ(parse_scores("  [0.25   1]\n"), std::make_pair(0.25, 1.0));
  EXPECT_EQ(parse_scores("0.1 0.9"), std::make_pair(0.1, 0.9));
  EXPECT_EQ(parse_scores("Scores: move 0.62, place .35."), std::make_pair(0.62, 0.35));
  EXPECT_EQ(parse_scores("[0.6 1.3 0.2]"), std::make_pair(0.6, 0.2));
  EXPECT_THROW(parse_scores("[1.5 2]"), OutOfRange);
  EXPECT_THROW(parse_scores("[-0.5 0.4]"), OutOfRange);
  EXPECT_THROW(parse_scores("I cannot evaluate this."), ParseError);
  EXPECT_THROW(parse_scores(""), ParseError);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(MockRater, NoiselessMatchesMeasures) {
  MockRater rater(1, 0.0);
  const auto req = golden_request();
  const auto after = parse_grid(req.grid_text, Side::Black);
  const auto r = rater.rate(req);
  EXPECT_DOUBLE_EQ(r.move_score, territory(after, Side::White, MoveMetric::King));
  EXPECT_DOUBLE_EQ(r.place_score, 1.0 - line_mobility(after, Side::Black));
  EXPECT_EQ(r.provider, "mock");
  EXPECT_EQ(parse_scores(r.raw_text).first, std::round(r.move_score * 1e4) / 1e4);
}

TEST(MockRater, NoiseIsBoundedAndSeeded) {
  MockRater clean(1, 0.0);
  MockRater a(1, 0.1);
  MockRater b(1, 0.1);
  MockRater c(2, 0.1);
  Rng rng(3);
  BoardState s = BoardState::initial();
  int differs = 0;
  for (int i = 0; i < 40 && status(s) == GameStatus::Ongoing; ++i) {
    const auto moves = legal_moves(s);
    const Move m = moves[uniform_index(rng, moves.size())];
    const auto after = apply_move(s, m);
    const auto req = RatingRequest::from_turn(after, s.side_to_move(), m);
    const auto ra = a.rate(req);
    const auto rb = b.rate(req);
    const auto rc = c.rate(req);
    const auto r0 = clean.rate(req);
    EXPECT_EQ(ra.move_score, rb.move_score);
    EXPECT_EQ(ra.place_score, rb.place_score);
    differs += ra.move_score != rc.move_score;
    EXPECT_LE(std::abs(ra.move_score - r0.move_score), 0.1 + 1e-12);
    EXPECT_LE(std::abs(ra.place_score - r0.place_score), 0.1 + 1e-12);
    for (double v : {ra.move_score, ra.place_score}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    s = after;
  }
  EXPECT_GT(differs, 0);
}

class ChatClientTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ::setenv("AMAZONS_TEST_KEY", "sk-test-123", 1);
    cfg.api_key_env = "AMAZONS_TEST_KEY";
    cfg.cache_dir = dir / "cache";
    cfg.requests_per_minute = 0;  // unlimited
    transport = std::make_shared<ScriptedTransport>();
  }

  std::shared_ptr<ChatClient> client() {
    return std::make_shared<ChatClient>(cfg, transport,
                                        [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }

  TempDir dir;
  ProviderConfig cfg;
  std::shared_ptr<ScriptedTransport> transport;
  std::vector<std::chrono::milliseconds> sleeps;
};

TEST_F(ChatClientTest, RatesAndCaches) {
  transport->script.push_back(completion("[0.8 0.3]"));
  LlmRater rater(client());
  const auto r = rater.rate(golden_request());
  EXPECT_EQ(r.move_score, 0.8);
  EXPECT_EQ(r.place_score, 0.3);
  EXPECT_FALSE(r.cached);
  ASSERT_EQ(transport->bodies.size(), 1u);

  const auto body = json::parse(transport->bodies[0]);
  EXPECT_EQ(body["model"], cfg.model);
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["content"], build_prompt(golden_request()));
  EXPECT_EQ(transport->headers[0][0].second, "Bearer sk-test-123");

  // A fresh client over the same cache directory never touches the network.
  auto second = client();
  LlmRater again(second);
  const auto r2 = again.rate(golden_request());
  EXPECT_TRUE(r2.cached);
  EXPECT_EQ(r2.move_score, 0.8);
  EXPECT_EQ(second->network_calls(), 0);

  const auto cache_file = read_file(PromptCache(cfg.cache_dir).path_for(sha256_hex(build_prompt(golden_request()))));
  EXPECT_EQ(cache_file.find("sk-test-123"), std::string::npos);
}

TEST_F(ChatClientTest, RetriesWithBackoff) {
  transport->script.push_back({429, "", ""});
  transport->script.push_back({0, "", "connection reset"});
  transport->script.push_back(completion("[0.5 0.5]"));
  cfg.max_retries = 3;
  auto c = client();
  LlmRater rater(c);
  EXPECT_EQ(rater.rate(golden_request()).move_score, 0.5);
  EXPECT_EQ(c->network_calls(), 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0], cfg.backoff_base);
  EXPECT_EQ(sleeps[1], 2 * cfg.backoff_base);
}

TEST_F(ChatClientTest, UnparseableRepliesExhaustRetries) {
  for (int i = 0; i < 3; ++i) transport->script.push_back(completion("I think white is better."));
  auto c = client();
  LlmRater rater(c);
  EXPECT_THROW(rater.rate(golden_request()), RatingUnavailable);
  EXPECT_EQ(c->network_calls(), 3);
  EXPECT_FALSE(std::filesystem::exists(PromptCache(cfg.cache_dir).path_for(sha256_hex(build_prompt(golden_request())))));
}

TEST_F(ChatClientTest, MalformedEnvelopeRetried) {
  transport->script.push_back({200, "{\"choices\": []}", ""});
  transport->script.push_back(completion("[0.1 0.2]"));
  auto c = client();
  EXPECT_EQ(LlmRater(c).rate(golden_request()).place_score, 0.2);
  EXPECT_EQ(c->network_calls(), 2);
}

TEST_F(ChatClientTest, AuthFailuresAreFatal) {
  transport->script.push_back({401, "", ""});
  auto c = client();
  EXPECT_THROW(LlmRater(c).rate(golden_request()), AuthError);
  EXPECT_EQ(c->network_calls(), 1);

  ::unsetenv("AMAZONS_TEST_KEY");
  auto d = client();
  EXPECT_THROW(LlmRater(d).rate(golden_request()), AuthError);
  EXPECT_EQ(d->network_calls(), 0);
}

TEST(TokenBucket, SpacesRequests) {
  TokenBucket bucket(600.0);  // one slot per 100 ms
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) bucket.acquire();
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_GE(elapsed, std::chrono::milliseconds(190));
}

TEST(Records, RoundTrip) {
  const auto req = golden_request();
  DatasetRecord r{3, 7, Side::Black, parse_move("a7-a5/b6"), req.grid_text,
                  MeasureVector::from_array({0.1, 0.2, 0.3, 0.4, 0.5}), 0.25, 0.75};
  const auto back = DatasetRecord::from_json(json::parse(r.to_json().dump()));
  EXPECT_EQ(back.game, 3);
  EXPECT_EQ(back.mover, Side::Black);
  EXPECT_EQ(back.move, r.move);
  EXPECT_EQ(back.grid, r.grid);
  EXPECT_EQ(back.measures.as_array(), r.measures.as_array());
  EXPECT_EQ(back.place_score, 0.75);
  EXPECT_THROW(DatasetRecord::from_json(json{{"game", 1}}), ParseError);

  GraphRecord g{1, 2, {{-1, {}, 0.4, true}, {0, MeasureVector::from_array({1, 0, 0, 0, 0}), 0.6, false}}};
  const auto gb = GraphRecord::from_json(json::parse(g.to_json().dump()));
  ASSERT_EQ(gb.nodes.size(), 2u);
  EXPECT_EQ(gb.nodes[1].parent, 0);
  EXPECT_FALSE(gb.nodes[1].labelled);
  const auto t = gb.to_tree();
  EXPECT_EQ(t.heads().size(), 1u);
  EXPECT_EQ(t.node(1).obj, 0.6);
  auto bad = g.to_json();
  bad["parent"][1] = 5;
  EXPECT_THROW(GraphRecord::from_json(bad), ParseError);
}

DatagenConfig small_config() {
  DatagenConfig cfg;
  cfg.games = 3;
  cfg.seed = 42;
  cfg.search.budget = 6;
  return cfg;
}

TEST(GenerateDataset, ReproducibleAndResumable) {
  TempDir dir;
  const auto models = nn::ModelBundle::random(2);
  MockRater rater(42);
  const auto cfg = small_config();

  const auto a = dir / "a.jsonl";
  const auto res = generate_dataset(cfg, rater, models, a);
  EXPECT_EQ(res.games_written, 3);
  EXPECT_EQ(res.unavailable, 0);
  const auto records = load_dataset(a);
  EXPECT_EQ(static_cast<int>(records.size()), res.records);
  for (const auto& r : records) {
    EXPECT_GE(r.move_score, 0.0);
    EXPECT_LE(r.place_score, 1.0);
  }
  // Replaying the recorded moves from the start is legal and matches the grids.
  BoardState s = BoardState::initial();
  for (const auto& r : records) {
    if (r.game != 0) break;
    ASSERT_TRUE(is_legal(s, r.move));
    s = apply_move(s, r.move);
    ASSERT_EQ(encode_grid(s), r.grid);
  }
  const auto graphs = load_graphs(graphs_path(a));
  EXPECT_EQ(graphs.size(), records.size());

  // Same seed, different file: identical bytes.
  const auto b = dir / "b.jsonl";
  generate_dataset(cfg, rater, models, b);
  EXPECT_EQ(read_file(a), read_file(b));

  // Interrupted run: drop the last game and tear the final line.
  const auto full = read_file(a);
  std::string cut;
  std::istringstream in(full);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("\"game\":2") != std::string::npos) break;
    cut += line + "\n";
  }
  cut += "{\"game\":2,\"ply\":0,\"mov";
  const auto c = dir / "c.jsonl";
  std::ofstream(c, std::ios::binary) << cut;
  std::filesystem::copy_file(graphs_path(a), graphs_path(c));
  const auto resumed = generate_dataset(cfg, rater, models, c);
  EXPECT_EQ(resumed.games_resumed, 2);
  EXPECT_EQ(resumed.games_written, 1);
  EXPECT_EQ(read_file(c), full);
  EXPECT_EQ(load_graphs(graphs_path(c)).size(), graphs.size());
}

TEST(GenerateDataset, WorkersDoNotChangeOutput) {
  TempDir dir;
  const auto models = nn::ModelBundle::random(2);
  MockRater rater(42);
  auto cfg = small_config();
  cfg.write_graphs = false;
  generate_dataset(cfg, rater, models, dir / "one.jsonl");
  cfg.workers = 3;
  generate_dataset(cfg, rater, models, dir / "three.jsonl");
  EXPECT_EQ(read_file(dir / "one.jsonl"), read_file(dir / "three.jsonl"));
  EXPECT_FALSE(std::filesystem::exists(graphs_path(dir / "one.jsonl")));
}

class FailingRater final : public Rater {
 public:
  RatingResponse rate(const RatingRequest&) override { throw RatingUnavailable("offline"); }
  std::string name() const override { return "failing"; }
};

TEST(GenerateDataset, UnavailableRatingsAreSkipped) {
  TempDir dir;
  FailingRater rater;
  auto cfg = small_config();
  cfg.games = 1;
  const auto res = generate_dataset(cfg, rater, nn::ModelBundle::random(1), dir / "d.jsonl");
  EXPECT_EQ(res.records, 0);
  EXPECT_GT(res.unavailable, 0);
  EXPECT_TRUE(load_dataset(dir / "d.jsonl").empty());
}

TEST(GenerateDataset, OneGameGivesAFullLog) {
  TempDir dir;
  MockRater rater(7);
  auto cfg = small_config();
  cfg.games = 1;
  const auto res = generate_dataset(cfg, rater, nn::ModelBundle::random(5), dir / "one.jsonl");
  const auto records = load_dataset(dir / "one.jsonl");
  EXPECT_GE(records.size(), 10u);
  EXPECT_EQ(static_cast<int>(records.size()), res.records);
  for (const auto& r : records) {
    EXPECT_EQ(r.game, 0);
    EXPECT_EQ(DatasetRecord::from_json(r.to_json()).to_json(), r.to_json());
  }
}

// Average ranks, ties sharing the mean of their positions.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Uniform random play to the end; the side left without a move loses.
Side playout(BoardState s, Rng& rng) {
  for (;;) {
    const auto moves = legal_moves(s);
    if (moves.empty()) return opponent(s.side_to_move());
    s = apply_move(s, moves[uniform_index(rng, moves.size())]);
  }
}

TEST(MockRater, TracksWinProbabilityInEndgames) {
  MockRater rater(3);
  Rng rng(21);
  std::vector<double> scores;
  std::vector<double> wins;
  for (int pos = 0; pos < 12; ++pos) {
    BoardState s = BoardState::initial();
    for (int i = 0; i < 44 && status(s) == GameStatus::Ongoing; ++i) {
      const auto moves = legal_moves(s);
      s = apply_move(s, moves[uniform_index(rng, moves.size())]);
    }
    if (status(s) != GameStatus::Ongoing) continue;
    const Side me = s.side_to_move();
    const auto moves = legal_moves(s);
    for (int k = 0; k < 8; ++k) {
      const Move m = moves[uniform_index(rng, moves.size())];
      const BoardState after = apply_move(s, m);
      // One ply of opponent replies, each finished by a random playout.
      const auto replies = legal_moves(after);
      double won = 0;
      int n = 0;
      if (replies.empty()) {
        won = n = 1;
      } else {
        for (int r = 0; r < 24; ++r) {
          won += playout(apply_move(after, replies[uniform_index(rng, replies.size())]), rng) == me;
          ++n;
        }
      }
      scores.push_back(rater.rate(RatingRequest::from_turn(after, me, m)).move_score);
      wins.push_back(won / n);
    }
  }
  ASSERT_GE(scores.size(), 60u);
  EXPECT_GT(spearman(scores, wins), 0.3);
}

TEST(Spearman, Oracle) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
  EXPECT_EQ(ranks({5, 1, 5, 2}), (std::vector<double>{2.5, 0, 2.5, 1}));
}

}  // namespace
}  // namespace amazons
