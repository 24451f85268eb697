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

#include "amazons/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "amazons/arena.hpp"
#include "amazons/config.hpp"
#include "amazons/datagen.hpp"
#include "amazons/error.hpp"
#include "amazons/service.hpp"
#include "amazons/train.hpp"

namespace amazons {

namespace {

const CLI::Range kAtLeastOne(1, std::numeric_limits<int>::max());

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<const nn::ModelBundle> models_from(const std::string& path, std::uint64_t seed,
                                                   std::ostream& err) {
  if (path.empty()) {
    err << "note: no --models given, using untrained weights\n";
    return std::make_shared<const nn::ModelBundle>(nn::ModelBundle::random(seed));
  }
  return std::make_shared<const nn::ModelBundle>(nn::load_params(path));
}

DecisionStrategy strategy_from(const std::string& text) {
  try {
    return parse_strategy(text);
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
}

AgentKind kind_from(const std::string& text) {
  try {
    return parse_agent_kind(text);
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
}

struct ProviderOptions {
  std::string endpoint = ProviderConfig{}.endpoint_url;
  std::string key_env = ProviderConfig{}.api_key_env;
  std::string model = ProviderConfig{}.model;
  std::string cache_dir = ProviderConfig{}.cache_dir.string();
  double rpm = ProviderConfig{}.requests_per_minute;
  int retries = ProviderConfig{}.max_retries;

  void add_to(CLI::App& app) {
    app.add_option("--endpoint", endpoint, "Chat-completions URL");
    app.add_option("--api-key-env", key_env, "Environment variable holding the API key");
    app.add_option("--model", model, "Chat model name");
    app.add_option("--cache-dir", cache_dir, "Prompt cache directory");
    app.add_option("--rpm", rpm, "Requests per minute (0 = unlimited)");
    app.add_option("--max-retries", retries, "Attempts per prompt")->check(kAtLeastOne);
  }
  std::shared_ptr<ChatClient> client() const {
    ProviderConfig cfg;
    cfg.endpoint_url = endpoint;
    cfg.api_key_env = key_env;
    cfg.model = model;
    cfg.cache_dir = cache_dir;
    cfg.requests_per_minute = rpm;
    cfg.max_retries = retries;
    return std::make_shared<ChatClient>(cfg, make_http_transport());
  }
};

// ------------------------------------------------------------ subcommands

struct DatagenCmd {
  int games = 200;
  int budget = 20;
  int workers = 4;
  double noise = 0.1;
  std::string out;
  std::string provider = "mock";
  std::string movement = "sgga";
  std::string placement = "weighted-random";
  std::string models;
  ProviderOptions api;

  void add(CLI::App& sub) {
    sub.add_option("--games", games, "Self-play games")->check(kAtLeastOne);
    sub.add_option("--budget", budget, "Search nodes per turn")->check(kAtLeastOne);
    sub.add_option("--workers", workers, "Games labelled concurrently")->check(kAtLeastOne);
    sub.add_option("--out", out, "Dataset file (graphs go next to it)")->required();
    sub.add_option("--provider", provider, "mock or api")->check(CLI::IsMember({"mock", "api"}));
    sub.add_option("--noise", noise, "Mock label noise amplitude")->check(CLI::Range(0.0, 1.0));
    sub.add_option("--movement", movement, "sgga or uct")->check(CLI::IsMember({"sgga", "uct"}));
    sub.add_option("--placement", placement, "weighted-random or sgga")
        ->check(CLI::IsMember({"weighted-random", "sgga"}));
    sub.add_option("--models", models, "Parameter file used for the search");
    api.add_to(sub);
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    DatagenConfig cfg;
    cfg.games = games;
    cfg.seed = seed;
    cfg.search.budget = budget;
    cfg.workers = workers;
    cfg.movement = movement == "sgga" ? MovementMode::Sgga : MovementMode::Uct;
    cfg.placement = placement == "sgga" ? PlacementMode::Sgga : PlacementMode::WeightedRandom;
    const auto bundle = models_from(models, seed, err);
    std::unique_ptr<Rater> rater;
    if (provider == "mock") rater = std::make_unique<MockRater>(seed, noise);
    else rater = std::make_unique<LlmRater>(api.client());
    const auto res = generate_dataset(cfg, *rater, *bundle, out);
    out_s << "games written " << res.games_written << ", resumed " << res.games_resumed << ", records "
          << res.records << ", unavailable " << res.unavailable << '\n';
    return kExitOk;
  }
};

void print_tail(std::ostream& out, const char* name, const std::vector<double>& loss) {
  const auto sm = moving_average(loss, 50);
  out << name << " loss: first " << sm.front() << ", last " << sm.back() << '\n';
}

struct TrainUctCmd {
  std::string data;
  std::string out;
  std::string init;
  std::string loss_dir;
  TrainConfig cfg = TrainConfig::uct_ae_defaults();
  int tail_from = 500;

  void add(CLI::App& sub) {
    sub.add_option("--data", data, "Dataset file")->required();
    sub.add_option("--out", out, "Parameter file to write")->required();
    sub.add_option("--init", init, "Parameter file to start from");
    sub.add_option("--iterations", cfg.iterations, "Optimiser steps")->check(kAtLeastOne);
    sub.add_option("--batch-size", cfg.batch_size, "Records per step")->check(kAtLeastOne);
    sub.add_option("--lr", cfg.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
    sub.add_option("--recon-weight", cfg.recon_weight, "Reconstruction term weight");
    sub.add_option("--holdout", cfg.holdout, "Held-out fraction")->check(CLI::Range(0.0, 0.9));
    sub.add_option("--loss-dir", loss_dir, "Write move_loss.csv and place_loss.csv here");
    sub.add_option("--tail-from", tail_from, "First step of the variance comparison");
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    TrainConfig c = cfg;
    c.seed = seed;
    const auto records = load_dataset(data);
    nn::ModelBundle bundle = init.empty() ? nn::ModelBundle::random(seed) : nn::load_params(init);
    const auto res = train_uct_ae(records, c, init.empty() ? nullptr : &bundle);
    bundle.move = res.move;
    bundle.place = res.place;
    nn::save_params(bundle, out);
    out_s << "records " << records.size() << " (train " << res.train_size << ", holdout "
          << res.holdout_size << ")\n";
    print_tail(out_s, "movement", res.move_loss);
    print_tail(out_s, "placement", res.place_loss);
    out_s << "holdout mse: movement " << res.move_holdout << ", placement " << res.place_holdout << '\n';
    try {
      const auto f = variance_and_ftest(res.move_loss, res.place_loss, tail_from);
      out_s << "tail variance: movement " << f.var_a << ", placement " << f.var_b << ", F " << f.f
            << ", p " << f.p << '\n';
    } catch (const InsufficientData& e) {
      err << "note: no variance comparison (" << e.what() << ")\n";
    }
    if (!loss_dir.empty()) {
      std::filesystem::create_directories(loss_dir);
      write_loss_csv(std::filesystem::path(loss_dir) / "move_loss.csv", res.move_loss);
      write_loss_csv(std::filesystem::path(loss_dir) / "place_loss.csv", res.place_loss);
    }
    return kExitOk;
  }
};

struct TrainGatCmd {
  std::string data;
  std::string models;
  std::string out;
  std::string loss_csv;
  double alpha = 0.5;
  TrainConfig cfg = TrainConfig::gat_defaults();

  void add(CLI::App& sub) {
    sub.add_option("--data", data, "Dataset file; graphs are read from its companion")->required();
    sub.add_option("--models", models, "Parameter file with trained autoencoders")->required();
    sub.add_option("--out", out, "Parameter file to write")->required();
    sub.add_option("--iterations", cfg.iterations, "Optimiser steps")->check(kAtLeastOne);
    sub.add_option("--batch-size", cfg.batch_size, "Graphs per step")->check(kAtLeastOne);
    sub.add_option("--lr", cfg.learning_rate, "RMSprop learning rate")->check(CLI::PositiveNumber);
    sub.add_option("--holdout", cfg.holdout, "Held-out fraction")->check(CLI::Range(0.0, 0.9));
    sub.add_option("--alpha", alpha, "Movement share of node features")->check(CLI::Range(0.0, 1.0));
    sub.add_option("--loss-csv", loss_csv, "Write the loss series here");
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream&) const {
    TrainConfig c = cfg;
    c.seed = seed;
    nn::ModelBundle bundle = nn::load_params(models);
    const auto samples = graph_samples(load_graphs(graphs_path(data)), bundle, alpha);
    const auto res = train_gat_ae(samples, c);
    bundle.gat = res.gat;
    nn::save_params(bundle, out);
    out_s << "graphs " << samples.size() << " (train " << res.train_size << ", holdout "
          << res.holdout_size << ")\n";
    print_tail(out_s, "gat", res.loss);
    out_s << "holdout smooth-l1 " << res.holdout << '\n';
    if (!loss_csv.empty()) write_loss_csv(loss_csv, res.loss);
    return kExitOk;
  }
};

struct AgentOptions {
  std::string kind;
  std::string models;
};

struct ArenaCmd {
  AgentOptions a{"hybrid", {}};
  AgentOptions b{"uct-ae", {}};
  std::string models;
  std::string out;
  std::string strategy = "softmax";
  int games = 200;
  int budget = 20;
  int workers = 1;
  double alpha = 0.5;
  double temperature = 0.1;
  ProviderOptions api;

  void add(CLI::App& sub) {
    sub.add_option("--a", a.kind, "First agent kind");
    sub.add_option("--b", b.kind, "Second agent kind");
    sub.add_option("--games", games, "Games in the match")->check(kAtLeastOne);
    sub.add_option("--budget", budget, "Search nodes per turn")->check(kAtLeastOne);
    sub.add_option("--models", models, "Parameter file for both agents");
    sub.add_option("--models-a", a.models, "Parameter file for the first agent");
    sub.add_option("--models-b", b.models, "Parameter file for the second agent");
    sub.add_option("--out", out, "Report directory");
    sub.add_option("--workers", workers, "Games played concurrently")->check(kAtLeastOne);
    sub.add_option("--strategy", strategy, "softmax, argmax or always-sgga");
    sub.add_option("--alpha", alpha, "Movement weight in node values")->check(CLI::Range(0.0, 1.0));
    sub.add_option("--temperature", temperature, "Search selection temperature");
    api.add_to(sub);
  }

  AgentSpec spec(const AgentOptions& o, std::uint64_t seed, std::ostream& err) const {
    AgentSpec s;
    s.kind = kind_from(o.kind);
    s.node_budget = budget;
    s.alpha = alpha;
    s.temperature = temperature;
    s.strategy = strategy_from(strategy);
    if (s.kind == AgentKind::LlmAgent) s.provider = api.client();
    else if (s.kind != AgentKind::Random) s.models = models_from(o.models.empty() ? models : o.models, seed, err);
    return s;
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    const auto m = run_match(spec(a, seed, err), spec(b, seed, err), games, seed, workers);
    const auto& s = m.summary;
    char line[160];
    std::snprintf(line, sizeof line, "%s vs %s: %d/%d, win rate %.4f [%.4f, %.4f]\n", s.agent_a.c_str(),
                  s.agent_b.c_str(), s.wins_a, s.games, s.rate.p, s.rate.lo, s.rate.hi);
    out_s << line;
    if (s.failures_a || s.failures_b) {
      out_s << "failures: " << s.agent_a << ' ' << s.failures_a << ", " << s.agent_b << ' ' << s.failures_b
            << '\n';
    }
    if (!out.empty()) emit_report({m}, out);
    return kExitOk;
  }
};

std::atomic<HttpFrontend*> g_frontend{nullptr};

extern "C" void stop_serving(int) {
  if (auto* f = g_frontend.load()) f->stop();
}

struct ServeCmd {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string models;
  std::string journal;
  int max_budget = 1000;

  void add(CLI::App& sub) {
    sub.add_option("--host", host, "Listen address");
    sub.add_option("--port", port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));
    sub.add_option("--models", models, "Parameter file for the engines");
    sub.add_option("--journal", journal, "Append-only session journal");
    sub.add_option("--max-budget", max_budget, "Largest node budget a game may ask for")
        ->check(kAtLeastOne);
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    ServiceOptions opts;
    opts.models = models_from(models, seed, err);
    opts.seed = seed;
    opts.journal = journal;
    opts.max_budget = max_budget;
    GameService service(opts);
    HttpFrontend front(service);
    const int bound = front.start(host, port);
    out_s << "listening on http://" << host << ':' << bound << " (" << service.session_count()
          << " games restored)" << std::endl;
    g_frontend = &front;
    std::signal(SIGINT, stop_serving);
    std::signal(SIGTERM, stop_serving);
    front.wait();
    g_frontend = nullptr;
    return kExitOk;
  }
};

struct SelfplayCmd {
  std::string white = "hybrid";
  std::string black = "hybrid";
  std::string models;
  std::string out;
  int budget = 20;

  void add(CLI::App& sub) {
    sub.add_option("--white", white, "Agent kind playing white");
    sub.add_option("--black", black, "Agent kind playing black");
    sub.add_option("--budget", budget, "Search nodes per turn")->check(kAtLeastOne);
    sub.add_option("--models", models, "Parameter file");
    sub.add_option("--out", out, "Log file (default: standard output)");
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    auto spec_for = [&](const std::string& k) {
      AgentSpec s;
      s.kind = kind_from(k);
      if (s.kind == AgentKind::LlmAgent) throw Usage("selfplay does not drive the llm agent");
      s.node_budget = budget;
      if (s.kind != AgentKind::Random) s.models = models_from(models, seed, err);
      return s;
    };
    auto w = make_agent(spec_for(white));
    auto b = make_agent(spec_for(black));
    const auto rec = play_game(*w, *b, Side::White, seed);

    std::ostringstream log;
    log << "# white " << w->name() << ", black " << b->name() << ", budget " << budget << ", seed " << seed
        << '\n';
    for (std::size_t i = 0; i < rec.moves.size(); ++i) {
      log << i + 1 << '\t' << (i % 2 == 0 ? "white" : "black") << '\t' << move_notation(rec.moves[i]) << '\t'
          << rec.sources[i] << '\n';
    }
    log << "# winner " << side_name(rec.winner) << " after " << rec.plies << " plies";
    if (rec.failed) log << " (" << rec.failure << ')';
    log << '\n';
    if (out.empty()) {
      out_s << log.str();
    } else {
      std::ofstream f(out, std::ios::binary | std::ios::trunc);
      if (!(f << log.str())) throw IoError("cannot write " + out);
    }
    return kExitOk;
  }
};

struct AnalyzeCmd {
  std::string moves;
  std::string grid;
  std::string side = "white";
  std::string models;
  std::string strategy = "softmax";
  int budget = 20;
  bool json_out = false;

  void add(CLI::App& sub) {
    sub.add_option("--moves", moves, "Moves from the start, space separated");
    sub.add_option("--grid", grid, "File holding a 10-line grid instead of --moves");
    sub.add_option("--side", side, "Side to move for --grid")->check(CLI::IsMember({"white", "black"}));
    sub.add_option("--budget", budget, "Search nodes")->check(kAtLeastOne);
    sub.add_option("--models", models, "Parameter file");
    sub.add_option("--strategy", strategy, "softmax, argmax or always-sgga");
    sub.add_flag("--json", json_out, "Print the analysis as JSON");
  }

  BoardState position() const {
    if (!grid.empty()) {
      std::ifstream f(grid, std::ios::binary);
      if (!f) throw IoError("cannot read " + grid);
      std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      return parse_grid(text, side == "white" ? Side::White : Side::Black);
    }
    BoardState s = BoardState::initial();
    std::istringstream in(moves);
    for (std::string tok; in >> tok;) s = apply_move(s, parse_move(tok));
    return s;
  }

  int run(std::uint64_t seed, std::ostream& out_s, std::ostream& err) const {
    const BoardState s = position();
    if (status(s) != GameStatus::Ongoing) throw NoLegalMoves("the position is already decided");
    const auto bundle = models_from(models, seed, err);
    HybridConfig cfg;
    cfg.search.budget = budget;
    cfg.search.temperature = AgentSpec{}.temperature;
    cfg.strategy = strategy_from(strategy);
    Rng rng(seed);
    TurnTrace trace;
    const auto d = play_turn(s, cfg, *bundle, rng, &trace);

    if (json_out) {
      nlohmann::json j;
      j["state"] = state_json(s);
      j["chosen"] = move_json(d.chosen);
      j["source"] = source_name(d.source);
      j["uct"] = {{"move", move_notation(d.uct.move)}, {"obj", d.uct.obj}};
      j["sgga"] = d.sgga ? nlohmann::json{{"move", move_notation(d.sgga->move)}, {"obj", d.sgga->obj}}
                         : nlohmann::json(nullptr);
      nlohmann::json scores = nlohmann::json::array();
      for (const auto& [node, score] : d.gat_scores) scores.push_back({{"node", node}, {"score", score}});
      j["gat_scores"] = scores;
      j["tree"] = dump_tree_tsv(trace.tree);
      out_s << j.dump(2) << '\n';
      return kExitOk;
    }
    out_s << encode_grid(s) << side_name(s.side_to_move()) << " to move\n\n";
    out_s << "chosen " << move_notation(d.chosen) << " (" << source_name(d.source) << ")\n";
    out_s << "uct    " << move_notation(d.uct.move) << " obj " << d.uct.obj << '\n';
    if (d.sgga) out_s << "sgga   " << move_notation(d.sgga->move) << " obj " << d.sgga->obj << '\n';
    else out_s << "sgga   none\n";
    out_s << '\n' << dump_tree_tsv(trace.tree);
    return kExitOk;
  }
};

// Inserts "--key value" pairs from --config FILE for options not given on the
// command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto kv = KeyValueConfig::load(path);

  std::vector<std::string> merged{args[0]};
  for (const auto& [key, value] : kv.values()) {
    const std::string flag = "--" + key;
    CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || key == "config") throw Usage("unknown key '" + key + "' in " + path);
    bool given = false;
    for (std::size_t i = 1; i < args.size(); ++i) {
      given = given || args[i] == flag || args[i].rfind(flag + "=", 0) == 0;
    }
    if (given) continue;
    if (opt->get_expected_max() == 0) {
      if (kv.get_bool(key, false)) merged.push_back(flag);
    } else {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Game of the Amazons engine: data generation, training, matches and a play server", "amazons"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string config_path;
  DatagenCmd datagen;
  TrainUctCmd train_uct;
  TrainGatCmd train_gat;
  ArenaCmd arena;
  ServeCmd serve;
  SelfplayCmd selfplay;
  AnalyzeCmd analyze;

  struct Entry {
    const char* name;
    const char* help;
    std::function<void(CLI::App&)> add;
    std::function<int()> run;
  };
  const std::vector<Entry> entries = {
      {"datagen", "Generate a labelled self-play dataset", [&](CLI::App& s) { datagen.add(s); },
       [&] { return datagen.run(seed, out, err); }},
      {"train-uct-ae", "Train the movement and placement scorers", [&](CLI::App& s) { train_uct.add(s); },
       [&] { return train_uct.run(seed, out, err); }},
      {"train-gat-ae", "Train the graph attention ranker", [&](CLI::App& s) { train_gat.add(s); },
       [&] { return train_gat.run(seed, out, err); }},
      {"arena", "Play a match between two agents", [&](CLI::App& s) { arena.add(s); },
       [&] { return arena.run(seed, out, err); }},
      {"serve", "Serve the JSON game API", [&](CLI::App& s) { serve.add(s); },
       [&] { return serve.run(seed, out, err); }},
      {"selfplay", "Play one game and print its log", [&](CLI::App& s) { selfplay.add(s); },
       [&] { return selfplay.run(seed, out, err); }},
      {"analyze", "Search one position and show the decision", [&](CLI::App& s) { analyze.add(s); },
       [&] { return analyze.run(seed, out, err); }},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    CLI::App* s = app.add_subcommand(e.name, e.help);
    s->add_option("--seed", seed, "Random seed");
    s->add_option("--config", config_path, "key = value file merged under the command line");
    e.add(*s);
    subs.push_back(s);
  }

  if (args.empty()) {
    out << app.help();
    return kExitUsage;
  }
  try {
    auto merged = merge_config(args, app);
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests are raised as CallForHelp from the subcommand.
    err << "error: " << e.what() << "\n\n";
    for (auto* s : subs) {
      if (s->parsed()) {
        err << s->help();
        return kExitUsage;
      }
    }
    err << app.help();
    return kExitUsage;
  } catch (const Usage& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return entries[i].run();
    } catch (const Usage& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitUsage;
}

}  // namespace amazons
