// partid command-line interface:
//   bounds | treat | poll | sweep | simulate | serve
//
// Exit codes: 0 success, 1 internal fault, 2 invalid input, 3 assumption
// infeasible (or undefined for the data).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "partid/identification.hpp"
#include "partid/json_io.hpp"
#include "partid/polling.hpp"
#include "partid/server.hpp"
#include "partid/service.hpp"
#include "partid/simulation.hpp"
#include "partid/treatment.hpp"

namespace {

using json = nlohmann::json;
using namespace partid;

constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::infeasible_assumption:
    case ErrorCode::undefined_mar: return kExitInfeasible;
    default: return kExitInvalid;
  }
}

// Six decimals with trailing zeros removed.
std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what(), path);
  }
}

json assumption_json(const std::string& text) { return json_io::to_json(parse_assumption(text)); }

// "START:STOP:STEP"
std::vector<DeltaPair> parse_delta_grid(const std::string& text, bool symmetric) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw ValidationError("--deltas expects START:STOP:STEP, got '" + text + "'", "deltas");
  }
  return delta_grid(partid::detail::parse_double(text.substr(0, a), "deltas"),
                    partid::detail::parse_double(text.substr(a + 1, b - a - 1), "deltas"),
                    partid::detail::parse_double(text.substr(b + 1), "deltas"), symmetric);
}

json deltas_json(const std::vector<DeltaPair>& pairs) {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back({p.delta0, p.delta1});
  return arr;
}

std::vector<DeltaPair> collect_deltas(const std::string& grid, bool symmetric,
                                      const std::vector<std::string>& pairs) {
  std::vector<DeltaPair> out;
  if (!grid.empty()) out = parse_delta_grid(grid, symmetric);
  for (const auto& p : pairs) {
    const auto [d0, d1] = partid::detail::parse_pair(p, "pair");
    BoundedVariation check(d0, d1);
    out.push_back({check.delta0, check.delta1});
  }
  return out;
}

void print_sweep_rows(std::ostream& os, const json& rows) {
  os << "  delta0     delta1     lo         hi         width      mmr        max_regret\n";
  for (const auto& r : rows) {
    char line[256];
    if (r["feasible"].get<bool>()) {
      std::snprintf(line, sizeof line, "  %-10s %-10s %-10s %-10s %-10s %-10s %s\n",
                    fmt6(r["delta0"]).c_str(), fmt6(r["delta1"]).c_str(), fmt6(r["lo"]).c_str(),
                    fmt6(r["hi"]).c_str(), fmt6(r["width"]).c_str(), fmt6(r["mmr_predictor"]).c_str(),
                    fmt6(r["max_regret"]).c_str());
    } else {
      std::snprintf(line, sizeof line, "  %-10s %-10s infeasible\n", fmt6(r["delta0"]).c_str(),
                    fmt6(r["delta1"]).c_str());
    }
    os << line;
  }
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
  std::optional<double> mean;
  double rate = 0.0;
  std::string assumption = "agnostic";
  std::vector<double> scale;
  bool as_json = false;
};

int run_bounds(const BoundsArgs& args) {
  json body = {{"rate", args.rate}, {"assumption", assumption_json(args.assumption)}};
  if (args.mean) body["mean"] = *args.mean;
  if (!args.scale.empty()) body["scale"] = {{"lo", args.scale[0]}, {"hi", args.scale[1]}};
  const json out = service::region(body);
  if (args.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  const json& shown = out.contains("original") ? out["original"] : out;
  std::cout << "[" << fmt6(shown["lo"]) << ", " << fmt6(shown["hi"]) << "] width " << fmt6(shown["width"])
            << "\n";
  return 0;
}

struct TreatArgs {
  std::string file;
  std::string criterion = "all";
  bool as_json = false;
};

int run_treat(const TreatArgs& args) {
  json body = parse_json_file(args.file);
  if (body.is_object()) {
    const std::string crit = args.criterion == "mmr" ? "minimax_regret" : args.criterion;
    body["criterion"] = crit;
  }
  const json out = service::treatment(body);
  if (args.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << "stratum: " << out["stratum_label"].get<std::string>() << "\n";
  std::cout << "  arm          lo         hi         width      max_regret min_welfare\n";
  for (std::size_t i = 0; i < out["regions"].size(); ++i) {
    const auto& r = out["regions"][i];
    const std::string regret =
        out.contains("minimax_regret") ? fmt6(out["minimax_regret"]["scores"][i]) : std::string("-");
    char line[256];
    std::snprintf(line, sizeof line, "  %-12s %-10s %-10s %-10s %-10s %s\n",
                  r["label"].get<std::string>().c_str(), fmt6(r["lo"]).c_str(), fmt6(r["hi"]).c_str(),
                  fmt6(r["width"]).c_str(), regret.c_str(), fmt6(r["lo"]).c_str());
    std::cout << line;
  }
  if (out["dominance"].empty()) {
    std::cout << "dominated arms: none\n";
  } else {
    for (const auto& d : out["dominance"]) {
      std::cout << "dominated: " << d["dominated"].get<std::string>() << " by "
                << d["dominator"].get<std::string>() << "\n";
    }
  }
  for (const char* name : {"minimax_regret", "maximin"}) {
    if (!out.contains(name)) continue;
    const auto& c = out[name];
    std::cout << name << ": optimal {";
    for (std::size_t i = 0; i < c["optimal_labels"].size(); ++i) {
      std::cout << (i ? ", " : "") << c["optimal_labels"][i].get<std::string>();
    }
    std::cout << "} chosen " << c["chosen_label"].get<std::string>() << "\n";
  }
  return 0;
}

struct PollArgs {
  std::string file;
  std::vector<std::string> assumptions;
  std::string deltas;
  bool symmetric = false;
  std::vector<std::string> pairs;
  std::string sweep_dir;
  bool as_json = false;
};

std::vector<PollSummary> load_polls_file(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".json") {
    return json_io::load_polls_json(parse_json_file(path));
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'", path);
  return load_polls_csv(in);
}

int run_poll(const PollArgs& args) {
  const auto polls = load_polls_file(args.file);
  json assumptions = json::array();
  if (args.assumptions.empty()) {
    assumptions = json::array({{{"type", "agnostic"}}, {{"type", "mar"}}});
  } else {
    for (const auto& a : args.assumptions) assumptions.push_back(assumption_json(a));
  }
  const auto deltas = collect_deltas(args.deltas, args.symmetric, args.pairs);
  json all = json::array();
  for (const auto& p : polls) {
    json body = {{"poll_id", p.poll_id},
                 {"candidate", p.candidate_label},
                 {"respondent_share", p.respondent_share.value()},
                 {"response_rate", p.response_rate},
                 {"as_of", p.as_of},
                 {"assumptions", assumptions}};
    if (!deltas.empty()) body["deltas"] = deltas_json(deltas);
    all.push_back(service::poll_audit(body));

    if (!args.sweep_dir.empty() && !deltas.empty()) {
      std::filesystem::create_directories(args.sweep_dir);
      const auto report = audit_poll(p, json_io::assumptions_from_json(assumptions, "/assumptions"), deltas);
      const auto path = std::filesystem::path(args.sweep_dir) / (p.poll_id + "_" + p.candidate_label + ".csv");
      std::ofstream out(path);
      const auto rows = emit_sweep_table(report);
      write_sweep_csv(out, rows);
    }
  }
  if (args.as_json) {
    std::cout << all.dump(2) << "\n";
    return 0;
  }
  if (polls.empty()) std::cout << "no polls\n";
  for (const auto& r : all) {
    std::cout << "poll " << r["poll_id"].get<std::string>() << "  candidate "
              << r["candidate"].get<std::string>();
    if (!r["as_of"].get<std::string>().empty()) std::cout << "  as of " << r["as_of"].get<std::string>();
    std::cout << "\n  respondents " << fmt6(r["respondent_share"]) << "  response rate "
              << fmt6(r["response_rate"]) << "\n";
    std::cout << "  agnostic region [" << fmt6(r["agnostic"]["lo"]) << ", " << fmt6(r["agnostic"]["hi"])
              << "] width " << fmt6(r["agnostic"]["width"]);
    char rep[64];
    std::snprintf(rep, sizeof rep, " (reported [%.3f, %.3f])", r["agnostic_reported"]["lo"].get<double>(),
                  r["agnostic_reported"]["hi"].get<double>());
    std::cout << rep << "\n";
    if (r["mar_point"].is_null()) {
      std::cout << "  MAR point undefined (no respondents)\n";
    } else {
      std::cout << "  MAR point " << fmt6(r["mar_point"]) << "\n";
    }
    for (const auto& reg : r["regions"]) {
      const std::string name = to_string(json_io::assumption_from_json(reg["assumption"], ""));
      char line[256];
      if (reg.contains("error")) {
        std::snprintf(line, sizeof line, "  %-20s %s\n", name.c_str(),
                      reg["error"]["message"].get<std::string>().c_str());
      } else {
        std::snprintf(line, sizeof line, "  %-20s [%s, %s]  mmr %s  max regret %s\n", name.c_str(),
                      fmt6(reg["lo"]).c_str(), fmt6(reg["hi"]).c_str(), fmt6(reg["mmr_predictor"]).c_str(),
                      fmt6(reg["max_regret"]).c_str());
      }
      std::cout << line;
    }
    if (!r["sweep"].empty()) print_sweep_rows(std::cout, r["sweep"]);
  }
  return 0;
}

struct SweepArgs {
  std::optional<double> mean;
  double rate = 0.0;
  std::string deltas;
  bool symmetric = false;
  std::vector<std::string> pairs;
  std::string out;
  bool as_json = false;
};

int run_sweep(const SweepArgs& args) {
  const auto deltas = collect_deltas(args.deltas, args.symmetric, args.pairs);
  if (deltas.empty()) throw ValidationError("sweep needs --deltas or at least one --pair", "deltas");
  json body = {{"rate", args.rate}, {"deltas", deltas_json(deltas)}};
  if (args.mean) body["mean"] = *args.mean;
  const json out = service::sweep(body);
  if (args.as_json) {
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  const ObservedStratum stratum("stratum", args.mean, args.rate);
  PollReport pseudo{};
  pseudo.sweep = sweep_bounded_variation(stratum, deltas);
  const auto rows = emit_sweep_table(pseudo);
  if (args.out.empty()) {
    write_sweep_csv(std::cout, rows);
  } else {
    std::ofstream f(args.out);
    if (!f) throw ValidationError("cannot write '" + args.out + "'", args.out);
    write_sweep_csv(f, rows);
    std::cout << "wrote " << rows.size() << " rows to " << args.out << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  bool text = false;
  bool as_json = false;
  std::optional<unsigned> threads;
};

int run_simulate(const SimulateArgs& args) {
  SimConfig config = json_io::sim_config_from_json(parse_json_file(args.config));
  if (args.threads) config.threads = *args.threads;
  const SimReport report = run_study(config);
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    if (!f) throw ValidationError("cannot write '" + args.out + "'", args.out);
    write_report_csv(f, report);
  }
  if (args.as_json) {
    std::cout << json_io::to_json(report).dump(2) << "\n";
  } else if (args.text) {
    std::cout << format_report_text(report);
  } else if (args.out.empty()) {
    write_report_csv(std::cout, report);
  }
  return 0;
}

int run_serve(const std::string& host, int port) {
  httplib::Server srv;
  server::register_routes(srv);
  std::cerr << "partid listening on http://" << host << ":" << port << "\n";
  if (!srv.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitInvalid;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial identification regions and decisions under ambiguity"};
  app.require_subcommand(1);

  BoundsArgs bounds;
  auto* b = app.add_subcommand("bounds", "Identification region for a mean with missing outcomes");
  b->add_option("--mean", bounds.mean, "Mean among respondents (original units if --scale is given)");
  b->add_option("--rate", bounds.rate, "Response rate in [0, 1]")->required();
  b->add_option("--assumption", bounds.assumption, "agnostic | mar | gamma:LO,HI | bv:D0,D1");
  b->add_option("--scale", bounds.scale, "Outcome range LO HI in original units")->expected(2);
  b->add_flag("--json", bounds.as_json, "Print the full-precision JSON result");

  TreatArgs treat;
  auto* t = app.add_subcommand("treat", "Treatment choice from a treatment-problem JSON file");
  t->add_option("file", treat.file, "Treatment problem JSON")->required();
  t->add_option("--criterion", treat.criterion, "mmr | maximin | all")
      ->check(CLI::IsMember({"mmr", "minimax_regret", "maximin", "all"}));
  t->add_flag("--json", treat.as_json, "Print the full-precision JSON result");

  PollArgs poll;
  auto* p = app.add_subcommand("poll", "Audit polls from a CSV or JSON file");
  p->add_option("file", poll.file, "Poll CSV (or .json)")->required();
  p->add_option("--assumption", poll.assumptions, "Repeatable; default agnostic and mar");
  p->add_option("--deltas", poll.deltas, "Bounded-variation grid START:STOP:STEP");
  p->add_flag("--symmetric", poll.symmetric, "Grid values d become pairs (-d, d) instead of (0, d)");
  p->add_option("--pair", poll.pairs, "Explicit D0,D1 pair; repeatable");
  p->add_option("--sweep-dir", poll.sweep_dir, "Write one sweep CSV per poll into this directory");
  p->add_flag("--json", poll.as_json, "Print the full-precision JSON reports");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Bounded-variation sensitivity sweep as CSV");
  s->add_option("--mean", sweep.mean, "Mean among respondents in [0, 1]");
  s->add_option("--rate", sweep.rate, "Response rate in [0, 1]")->required();
  s->add_option("--deltas", sweep.deltas, "Grid START:STOP:STEP");
  s->add_flag("--symmetric", sweep.symmetric, "Grid values d become pairs (-d, d) instead of (0, d)");
  s->add_option("--pair", sweep.pairs, "Explicit D0,D1 pair; repeatable");
  s->add_option("--out", sweep.out, "CSV output path (default stdout)");
  s->add_flag("--json", sweep.as_json, "Print the full-precision JSON result");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Run a missing-data Monte Carlo study");
  m->add_option("config", sim.config, "Study config JSON")->required();
  m->add_option("--out", sim.out, "Write the report CSV here");
  m->add_flag("--text", sim.text, "Print a human-readable table");
  m->add_flag("--json", sim.as_json, "Print the report as JSON");
  m->add_option("--threads", sim.threads, "Worker threads (default: hardware concurrency)");

  std::string host = "127.0.0.1";
  int port = server::default_port();
  auto* v = app.add_subcommand("serve", "Run the JSON-over-HTTP service");
  v->add_option("--port", port, "Listen port (default $PARTID_PORT or 8080)");
  v->add_option("--host", host, "Listen address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*b) return run_bounds(bounds);
    if (*t) return run_treat(treat);
    if (*p) return run_poll(poll);
    if (*s) return run_sweep(sweep);
    if (*m) return run_simulate(sim);
    if (*v) return run_serve(host, port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
