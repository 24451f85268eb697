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

#include <sstream>
#include <thread>

#include "amazons/cli.hpp"
#include "amazons/error.hpp"
#include "amazons/service.hpp"
#include "httplib.h"
#include "tempdir.hpp"

namespace amazons {
namespace {

using nlohmann::json;
using testing::read_file;
using testing::TempDir;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, NoArgumentsPrintsHelp) {
  const auto r = cli({});
  EXPECT_EQ(r.code, kExitUsage);
  for (const char* sub : {"datagen", "train-uct-ae", "train-gat-ae", "arena", "serve", "selfplay", "analyze"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"arena", "--games", "0"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"arena", "--a", "minimax", "--b", "random", "--games", "1"}).code, kExitUsage);
  EXPECT_EQ(cli({"datagen"}).code, kExitUsage);  // --out is required
  EXPECT_EQ(cli({"arena", "--help"}).code, kExitOk);
}

TEST(Cli, RuntimeFailureExitsOne) {
  TempDir dir;
  const auto r = cli({"train-uct-ae", "--data", (dir / "missing.jsonl").string(), "--out",
                      (dir / "m.bin").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, SelfplayIsReproducible) {
  const auto a = cli({"selfplay", "--budget", "20", "--seed", "7"});
  const auto b = cli({"selfplay", "--budget", "20", "--seed", "7"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("# winner"), std::string::npos);
  EXPECT_NE(cli({"selfplay", "--budget", "20", "--seed", "8"}).out, a.out);
}

TEST(Cli, ConfigFileMergesUnderCommandLine) {
  TempDir dir;
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# players\nwhite = random\nblack = random\nbudget = 3\nseed = 4\n";
  const auto r = cli({"selfplay", "--config", cfg.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("# white random, black random, budget 3, seed 4\n", 0), 0u);

  const auto over = cli({"selfplay", "--config", cfg.string(), "--seed", "5", "--budget=6"});
  EXPECT_EQ(over.out.rfind("# white random, black random, budget 6, seed 5\n", 0), 0u);

  std::ofstream(dir / "bad.cfg") << "colour = blue\n";
  EXPECT_EQ(cli({"selfplay", "--config", (dir / "bad.cfg").string()}).code, kExitUsage);
  EXPECT_EQ(cli({"selfplay", "--config", (dir / "none.cfg").string()}).code, kExitFailure);
}

TEST(Cli, PipelineProducesArtifacts) {
  TempDir dir;
  const auto data = (dir / "d.jsonl").string();
  const auto m1 = (dir / "m1.bin").string();
  const auto m2 = (dir / "m2.bin").string();
  ASSERT_EQ(cli({"datagen", "--games", "2", "--budget", "5", "--out", data, "--seed", "2"}).code, kExitOk);
  const auto t = cli({"train-uct-ae", "--data", data, "--out", m1, "--iterations", "60", "--tail-from",
                      "10", "--loss-dir", (dir / "loss").string()});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_NE(t.out.find("tail variance"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "loss" / "move_loss.csv"));
  ASSERT_EQ(cli({"train-gat-ae", "--data", data, "--models", m1, "--out", m2, "--iterations", "20"}).code,
            kExitOk);
  const auto a = cli({"arena", "--a", "hybrid", "--b", "random", "--games", "2", "--budget", "5",
                      "--models", m2, "--out", (dir / "rep").string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_NE(a.out.find("hybrid vs random: "), std::string::npos);
  for (const char* f : {"games.csv", "curve.csv", "ci.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / "rep" / f));

  const auto an = cli({"analyze", "--moves", "d1-d7/g7", "--budget", "8", "--models", m2, "--json"});
  ASSERT_EQ(an.code, kExitOk) << an.err;
  const auto j = json::parse(an.out);
  EXPECT_TRUE(is_legal(apply_move(BoardState::initial(), parse_move("d1-d7/g7")),
                       parse_move(j["chosen"]["notation"].get<std::string>())));
}

// ------------------------------------------------------------------ service

class ServiceTest : public ::testing::Test {
 protected:
  ServiceOptions options() {
    ServiceOptions o;
    o.models = std::make_shared<const nn::ModelBundle>(nn::ModelBundle::random(4));
    o.seed = 9;
    return o;
  }
  static std::string create_body(const std::string& engine, const std::string& colour, int budget = 6) {
    return json{{"engine", engine}, {"budget", budget}, {"human_color", colour}}.dump();
  }
  static std::string id_of(const ApiResponse& r) { return r.body.at("id").get<std::string>(); }
};

TEST_F(ServiceTest, CreateThenFetch) {
  GameService svc(options());
  const auto c = svc.handle("POST", "/games", create_body("hybrid", "white"));
  ASSERT_EQ(c.status, 201) << c.body;
  const auto g = svc.handle("GET", "/games/" + id_of(c), "");
  ASSERT_EQ(g.status, 200);
  EXPECT_EQ(g.body["state"], c.body["state"]);
  EXPECT_EQ(g.body["state"], state_json(BoardState::initial()));
  EXPECT_EQ(g.body["state"]["legal_moves"], 2176);
  EXPECT_EQ(g.body["engine"]["kind"], "hybrid");
  EXPECT_TRUE(g.body["history"].empty());

  // Defaults fill an empty body.
  const auto d = svc.handle("POST", "/games", "");
  ASSERT_EQ(d.status, 201);
  EXPECT_EQ(d.body["engine"]["budget"], 20);
  EXPECT_NE(id_of(c), id_of(d));
}

TEST_F(ServiceTest, HumanAndEngineTurns) {
  GameService svc(options());
  const auto id = id_of(svc.handle("POST", "/games", create_body("hybrid", "white")));
  const std::string base = "/games/" + id;

  // A knight-shaped step is not a queen line.
  const auto before = svc.handle("GET", base, "").body;
  const auto bad = svc.handle("POST", base + "/move",
                              json{{"from", {{"file", 3}, {"rank", 0}}},
                                   {"to", {{"file", 4}, {"rank", 2}}},
                                   {"arrow", {{"file", 4}, {"rank", 3}}}}.dump());
  EXPECT_EQ(bad.status, 409);
  EXPECT_EQ(bad.body["code"], "illegal_move");
  EXPECT_EQ(svc.handle("GET", base, "").body, before);

  EXPECT_EQ(svc.handle("POST", base + "/engine-move", "").status, 409);  // human to move
  const auto ok = svc.handle("POST", base + "/move",
                             json{{"from", "d1"}, {"to", {{"file", 3}, {"rank", 6}}}, {"arrow", "g7"}}.dump());
  ASSERT_EQ(ok.status, 200) << ok.body;
  EXPECT_EQ(ok.body["history"], json::array({"d1-d7/g7"}));
  EXPECT_EQ(svc.handle("POST", base + "/move", json{{"move", "a4-a5/a6"}}.dump()).body["code"],
            "not_your_turn");

  EXPECT_EQ(svc.handle("GET", base + "/analysis", "").body["available"], false);
  const auto e = svc.handle("POST", base + "/engine-move", "");
  ASSERT_EQ(e.status, 200) << e.body;
  EXPECT_EQ(e.body["history"].size(), 2u);
  EXPECT_EQ(e.body["engine_move"]["notation"], e.body["history"][1]);
  const std::string src = e.body["source"];
  EXPECT_TRUE(src == "UctArgmax" || src == "SggaGat" || src == "Fallback") << src;
  EXPECT_EQ(e.body["decision"]["source"], src);

  const auto an = svc.handle("GET", base + "/analysis", "");
  ASSERT_EQ(an.status, 200);
  EXPECT_EQ(an.body["available"], true);
  EXPECT_EQ(an.body["ply"], 1);
  EXPECT_LE(an.body["nodes"].size(), 6u + 4u);
  int scored = 0;
  for (const auto& n : an.body["nodes"]) scored += !n["gat_score"].is_null();
  if (src != "Fallback") EXPECT_GT(scored, 0);
}

TEST_F(ServiceTest, FinishedGameRejectsMoves) {
  GameService svc(options());
  const auto id = id_of(svc.handle("POST", "/games", create_body("random", "none")));
  const std::string base = "/games/" + id;
  ApiResponse r;
  int plies = 0;
  while ((r = svc.handle("POST", base + "/engine-move", "")).status == 200) ++plies;
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["code"], "game_over");
  EXPECT_LE(plies, kMaxPlies);
  const auto g = svc.handle("GET", base, "").body;
  EXPECT_NE(g["status"], "ongoing");
  EXPECT_EQ(svc.handle("POST", base + "/move", json{{"move", "a4-a5/a6"}}.dump()).status, 409);

  // The stored state equals a replay of the history.
  BoardState s = BoardState::initial();
  for (const auto& m : g["history"]) s = apply_move(s, parse_move(m.get<std::string>()));
  EXPECT_EQ(g["state"], state_json(s));
}

TEST_F(ServiceTest, ErrorShapes) {
  GameService svc(options());
  auto check = [&](const ApiResponse& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.body;
    EXPECT_EQ(r.body.value("code", ""), code);
    EXPECT_TRUE(r.body.contains("message"));
  };
  check(svc.handle("GET", "/games/nope", ""), 404, "unknown_game");
  check(svc.handle("GET", "/elsewhere", ""), 404, "not_found");
  check(svc.handle("GET", "/games", ""), 405, "method_not_allowed");
  check(svc.handle("POST", "/games", "{not json"), 422, "malformed_body");
  check(svc.handle("POST", "/games", "[1,2]"), 422, "malformed_body");
  check(svc.handle("POST", "/games", create_body("minimax", "white")), 422, "malformed_body");
  check(svc.handle("POST", "/games", create_body("llm", "white")), 422, "malformed_body");
  check(svc.handle("POST", "/games", create_body("hybrid", "green")), 422, "malformed_body");
  check(svc.handle("POST", "/games", create_body("hybrid", "white", 0)), 422, "malformed_body");
  check(svc.handle("POST", "/games", json{{"budget", "many"}}.dump()), 422, "malformed_body");

  const auto id = id_of(svc.handle("POST", "/games", create_body("hybrid", "white")));
  check(svc.handle("POST", "/games/" + id + "/move", json{{"from", "d1"}}.dump()), 422, "malformed_body");
  check(svc.handle("POST", "/games/" + id + "/move",
                   json{{"from", {{"file", 3}, {"rank", 12}}}, {"to", "d7"}, {"arrow", "g7"}}.dump()),
        422, "malformed_body");
  check(svc.handle("POST", "/games/" + id + "/move", json{{"move", "z1-d7/g7"}}.dump()), 422, "malformed_body");
  check(svc.handle("GET", "/games/" + id + "/move", ""), 405, "method_not_allowed");
  check(svc.handle("POST", "/games/" + id + "/undo", ""), 404, "not_found");
  EXPECT_EQ(svc.session_count(), 1u);
}

TEST_F(ServiceTest, JournalRestoresSessions) {
  TempDir dir;
  auto opts = options();
  opts.journal = dir / "journal.jsonl";
  std::string id;
  json before;
  {
    GameService svc(opts);
    id = id_of(svc.handle("POST", "/games", create_body("uct-ae", "black")));
    ASSERT_EQ(svc.handle("POST", "/games/" + id + "/engine-move", "").status, 200);
    ASSERT_EQ(svc.handle("POST", "/games/" + id + "/move", json{{"move", "a7-a8/a9"}}.dump()).status, 200);
    ASSERT_EQ(svc.handle("POST", "/games/" + id + "/engine-move", "").status, 200);
    before = svc.handle("GET", "/games/" + id, "").body;
  }
  // Tear the final line as a crash would.
  std::ofstream(opts.journal, std::ios::app) << "{\"op\":\"mo";
  GameService again(opts);
  EXPECT_EQ(again.session_count(), 1u);
  EXPECT_EQ(again.handle("GET", "/games/" + id, "").body, before);
  const auto next = again.handle("POST", "/games", create_body("random", "white"));
  EXPECT_NE(id_of(next), id);
  GameService third(opts);
  EXPECT_EQ(third.session_count(), 2u);
}

TEST_F(ServiceTest, ConcurrentRequests) {
  GameService svc(options());
  const auto a = id_of(svc.handle("POST", "/games", create_body("random", "none")));
  const auto b = id_of(svc.handle("POST", "/games", create_body("uct-ae", "none", 4)));
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      const auto& id = t % 2 ? a : b;
      for (int i = 0; i < 8; ++i) svc.handle("POST", "/games/" + id + "/engine-move", "");
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& id : {a, b}) {
    const auto g = svc.handle("GET", "/games/" + id, "").body;
    BoardState s = BoardState::initial();
    for (const auto& m : g["history"]) s = apply_move(s, parse_move(m.get<std::string>()));
    EXPECT_EQ(g["state"], state_json(s));
    EXPECT_TRUE(g["history"].size() == 16u || g["status"] != "ongoing");
  }
}

TEST_F(ServiceTest, ServesOverHttp) {
  GameService svc(options());
  HttpFrontend front(svc);
  const int port = front.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  const auto c = client.Post("/games", create_body("hybrid", "white"), "application/json");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->status, 201);
  EXPECT_EQ(c->get_header_value("Content-Type"), "application/json");
  const auto id = json::parse(c->body)["id"].get<std::string>();
  const auto g = client.Get("/games/" + id);
  ASSERT_TRUE(g);
  EXPECT_EQ(json::parse(g->body)["id"], id);
  const auto bad = client.Post("/games/" + id + "/move", json{{"move", "d1-e3/e4"}}.dump(), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 409);
  const auto missing = client.Get("/games/none");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  front.stop();
}

}  // namespace
}  // namespace amazons
