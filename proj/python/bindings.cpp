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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "amazons/arena.hpp"
#include "amazons/board.hpp"
#include "amazons/cli.hpp"
#include "amazons/error.hpp"
#include "amazons/eval.hpp"
#include "amazons/hybrid.hpp"
#include "amazons/nn.hpp"
#include "amazons/service.hpp"

namespace py = pybind11;
using namespace amazons;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Side side_from(const std::string& s) {
  if (s == "white") return Side::White;
  if (s == "black") return Side::Black;
  throw py::value_error("side must be 'white' or 'black'");
}

Move as_move(const py::object& o) {
  if (py::isinstance<Move>(o)) return o.cast<Move>();
  return parse_move(o.cast<std::string>());
}

using Models = std::shared_ptr<nn::ModelBundle>;

py::dict candidate_dict(const Candidate& c) {
  py::dict d;
  d["move"] = move_notation(c.move);
  d["obj"] = c.obj;
  d["node"] = c.node;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Game of the Amazons engine core";

  py::register_exception<IllegalMove>(m, "IllegalMove", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<Move>(m, "Move")
      .def(py::init([](const std::string& text) { return parse_move(text); }), py::arg("notation"))
      .def_property_readonly("origin", [](const Move& mv) { return square_name(mv.from); })
      .def_property_readonly("to", [](const Move& mv) { return square_name(mv.to); })
      .def_property_readonly("arrow", [](const Move& mv) { return square_name(mv.arrow); })
      .def("__str__", [](const Move& mv) { return move_notation(mv); })
      .def("__repr__", [](const Move& mv) { return "Move('" + move_notation(mv) + "')"; })
      .def("__eq__", [](const Move& a, const Move& b) { return a == b; })
      .def("__hash__", [](const Move& mv) {
        return std::hash<std::string>{}(move_notation(mv));
      });

  py::class_<BoardState>(m, "Board")
      .def_static("initial", &BoardState::initial)
      .def_static(
          "from_grid",
          [](const std::string& grid, const std::string& side, std::optional<int> turn) {
            return parse_grid(grid, side_from(side), turn);
          },
          py::arg("grid"), py::arg("side_to_move") = "white", py::arg("turn") = py::none())
      .def_property_readonly("grid", [](const BoardState& s) { return encode_grid(s); })
      .def_property_readonly("side_to_move",
                             [](const BoardState& s) { return std::string(side_name(s.side_to_move())); })
      .def_property_readonly("turn", &BoardState::turn)
      .def_property_readonly("status", [](const BoardState& s) { return std::string(status_name(status(s))); })
      .def("legal_moves", [](const BoardState& s) { return legal_moves(s); })
      .def("is_legal", [](const BoardState& s, const py::object& mv) { return is_legal(s, as_move(mv)); })
      .def("play", [](const BoardState& s, const py::object& mv) { return apply_move(s, as_move(mv)); })
      .def("measures",
           [](const BoardState& s, const py::object& mv) {
             const Move move = as_move(mv);
             const auto v = measures(s, move, apply_move(s, move));
             py::dict d;
             d["adjacency_territory"] = v.adjacency_territory;
             d["line_territory"] = v.line_territory;
             d["one_mobility"] = v.one_mobility;
             d["line_mobility"] = v.line_mobility;
             d["position"] = v.position;
             return d;
           })
      .def("to_dict", [](const BoardState& s) { return to_py(state_json(s)); })
      .def("__eq__", [](const BoardState& a, const BoardState& b) { return a == b; });

  py::class_<nn::ModelBundle, Models>(m, "Models")
      .def_static("random", [](std::uint64_t seed) { return std::make_shared<nn::ModelBundle>(nn::ModelBundle::random(seed)); },
                  py::arg("seed") = 1)
      .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<nn::ModelBundle>(nn::load_params(p)); })
      .def("save", [](nn::ModelBundle& b, const std::filesystem::path& p) { nn::save_params(b, p); })
      .def("parameter_count", [](nn::ModelBundle& b) {
        std::size_t n = 0;
        for (auto& [name, p] : b.named_parameters()) n += p->value.data().size();
        return n;
      });

  m.def(
      "engine_move",
      [](const BoardState& s, const Models& models, int budget, std::uint64_t seed,
         const std::string& strategy, double alpha, double temperature) {
        HybridConfig cfg;
        cfg.search.budget = budget;
        cfg.search.alpha = alpha;
        cfg.search.temperature = temperature;
        cfg.strategy = parse_strategy(strategy);
        Rng rng(seed);
        TurnDecision d;
        {
          py::gil_scoped_release release;
          d = play_turn(s, cfg, *models, rng);
        }
        py::dict out;
        out["move"] = move_notation(d.chosen);
        out["source"] = std::string(source_name(d.source));
        out["uct"] = candidate_dict(d.uct);
        out["sgga"] = d.sgga ? py::object(candidate_dict(*d.sgga)) : py::none();
        return out;
      },
      py::arg("board"), py::arg("models"), py::arg("budget") = 20, py::arg("seed") = 1,
      py::arg("strategy") = "softmax", py::arg("alpha") = 0.5, py::arg("temperature") = 0.1,
      "One hybrid turn: search, propagate, sample and decide.");

  m.def(
      "run_match",
      [](const std::string& a, const std::string& b, int games, int budget, std::uint64_t seed,
         const Models& models, int workers) {
        AgentSpec sa;
        sa.kind = parse_agent_kind(a);
        sa.node_budget = budget;
        sa.models = models;
        AgentSpec sb = sa;
        sb.kind = parse_agent_kind(b);
        if (sa.kind == AgentKind::LlmAgent || sb.kind == AgentKind::LlmAgent) {
          throw py::value_error("llm agents are only available from the command line");
        }
        MatchResult r;
        {
          py::gil_scoped_release release;
          r = run_match(sa, sb, games, seed, workers);
        }
        const auto& s = r.summary;
        py::dict out;
        out["agent_a"] = s.agent_a;
        out["agent_b"] = s.agent_b;
        out["games"] = s.games;
        out["wins_a"] = s.wins_a;
        out["wins_b"] = s.wins_b;
        out["failures_a"] = s.failures_a;
        out["failures_b"] = s.failures_b;
        out["win_rate"] = s.rate.p;
        out["ci"] = py::make_tuple(s.rate.lo, s.rate.hi);
        out["curve"] = s.curve;
        py::list plies;
        for (const auto& rec : r.records) plies.append(rec.plies);
        out["plies"] = plies;
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("games"), py::arg("budget") = 20, py::arg("seed") = 1,
      py::arg("models") = nullptr, py::arg("workers") = 1);

  m.def(
      "win_rate_ci",
      [](int wins, int n, double z) {
        const auto w = win_rate_ci(wins, n, z);
        return py::make_tuple(w.p, w.lo, w.hi, w.half_width);
      },
      py::arg("wins"), py::arg("n"), py::arg("z") = 1.96, "Returns (p, lo, hi, half_width).");

  py::class_<GameService>(m, "GameService")
      .def(py::init([](const Models& models, std::uint64_t seed, std::optional<std::filesystem::path> journal) {
             ServiceOptions o;
             o.models = models;
             o.seed = seed;
             if (journal) o.journal = *journal;
             return std::make_unique<GameService>(o);
           }),
           py::arg("models"), py::arg("seed") = 1, py::arg("journal") = py::none())
      .def(
          "handle",
          [](GameService& svc, const std::string& method, const std::string& path, const py::object& body) {
            std::string text;
            if (!body.is_none()) {
              text = py::isinstance<py::str>(body) ? body.cast<std::string>()
                                                   : py::module_::import("json").attr("dumps")(body).cast<std::string>();
            }
            ApiResponse r;
            {
              py::gil_scoped_release release;
              r = svc.handle(method, path, text);
            }
            return py::make_tuple(r.status, to_py(r.body));
          },
          py::arg("method"), py::arg("path"), py::arg("body") = py::none(),
          "Returns (status, json body).")
      .def_property_readonly("session_count", &GameService::session_count);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the amazons command line; returns (exit code, stdout, stderr).");
}
