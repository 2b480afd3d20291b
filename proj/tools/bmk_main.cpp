// Command-line front end over the bmk C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmk/bmk.h"

using nlohmann::json;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kBadInput = 2, kNumeric = 3 };

int exit_code(bmk_status s) {
  switch (s) {
    case BMK_OK:
      return kPass;
    case BMK_CHECK_FAILED:
      return kCheckFailed;
    case BMK_PARSE_ERROR:
    case BMK_INVALID_ARGUMENT:
    case BMK_DOMAIN_ERROR:
    case BMK_CONSTRUCTION_ERROR:
      return kBadInput;
    default:
      return kNumeric;
  }
}

void error_record(const std::string& kind, const std::string& message) {
  std::cerr << json{{"status", BMK_PARSE_ERROR}, {"kind", kind}, {"message", message}}.dump() << "\n";
}

// Flag values land in the config only when given, so the report shows which
// values were defaulted by the library.
struct Options {
  json config = json::object();
  std::vector<std::function<void()>> fillers;

  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    fillers.push_back([this, value, opt, key] {
      if (opt->count() > 0) config[key] = *value;
    });
  }
  void fill() {
    for (auto& f : fillers) f();
  }
};

// --body lp-ball P N | ellipsoid A1 .. An | polytope FILE Q1 .. | FILE
json body_from_tokens(const std::vector<std::string>& t) {
  if (t.empty()) throw CLI::ValidationError("--body", "expects a body description");
  auto num = [](const std::string& s) { return std::stod(s); };
  if (t[0] == "lp-ball") {
    if (t.size() != 3) throw CLI::ValidationError("--body", "lp-ball takes P N");
    return {{"type", "lp"}, {"p", num(t[1])}, {"n", std::stoi(t[2])}};
  }
  if (t[0] == "ellipsoid") {
    json axes = json::array();
    for (std::size_t i = 1; i < t.size(); ++i) axes.push_back(num(t[i]));
    return {{"type", "ellipsoid"}, {"axes", axes}};
  }
  if (t[0] == "polytope") {
    if (t.size() < 3) throw CLI::ValidationError("--body", "polytope takes FILE and at least one smoothing exponent");
    json q = json::array();
    for (std::size_t i = 2; i < t.size(); ++i) q.push_back(num(t[i]));
    return {{"type", "polytope"}, {"body", t[1]}, {"q", q}};
  }
  if (t.size() != 1) throw CLI::ValidationError("--body", "unknown body kind " + t[0]);
  return t[0];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on Mahler volumes of convex bodies and functions."};
  app.set_version_flag("--version", std::string(bmk_version()));
  app.require_subcommand(1);

  int workers = 0;
  std::string format = "json";
  std::string report_path;
  std::string config_path;
  std::vector<std::string> tolerances;
  app.add_option("--workers", workers, "Worker threads (default: BMK_WORKERS or 1)")->envname("BMK_WORKERS")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "plot-data"}));
  app.add_option("--report", report_path, "Write the report to this file atomically instead of stdout");
  app.add_option("--config", config_path, "JSON file with config keys; flags override it")->check(CLI::ExistingFile);
  app.add_option("--tolerance", tolerances, "Tolerance override NAME=VALUE, repeatable");

  std::map<std::string, Options> opts;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    // global flags are accepted after the subcommand as well
    s->fallthrough();
    return std::make_pair(s, &opts[name]);
  };

  {
    auto [s, o] = sub("legendre", "Discrete Legendre transform of a grid or analytic function");
    o->add<std::string>(s, "--input", "input", "Grid file");
    o->add<std::string>(s, "--function", "function", "Function spec file (sampled on --box/--nodes)");
    o->add<double>(s, "--box", "box", "Half-width of the sampling box for --function");
    o->add<int>(s, "--nodes", "nodes", "Nodes per axis for --function");
    o->add<std::vector<double>>(s, "--dual-box", "dual_box", "Dual interval LO HI on every axis (default: boundary slopes)");
    o->add<int>(s, "--dual-nodes", "dual_nodes", "Nodes per dual axis");
    o->add<std::string>(s, "--method", "method", "fast | oracle");
    o->add<bool>(s, "--oracle-check", "oracle_check", "Also run the brute-force oracle and report the sup deviation");
    o->add<std::string>(s, "--output", "output", "Write the conjugate grid file here");
  }
  {
    auto [s, o] = sub("mahler-body", "Mahler volume of a symmetric polytope");
    o->add<std::string>(s, "--input", "input", "Body file");
    o->add<std::string>(s, "--method", "method", "exact | rational | mc");
    o->add<long long>(s, "--samples", "samples", "Monte Carlo samples");
    o->add<std::uint64_t>(s, "--seed", "seed", "Random seed");
  }
  {
    auto [s, o] = sub("theorem21", "Functional Mahler sweep J(phi) >= pi^n over a family");
    o->add<std::string>(s, "--family", "family", "quadratic | ppower | maxaffine | gauge");
    o->add<int>(s, "--n", "n", "Dimension");
    o->add<int>(s, "--count", "count", "Family members");
    o->add<std::uint64_t>(s, "--seed", "seed", "Random seed");
    o->add<int>(s, "--nodes", "nodes", "Grid nodes per axis (0: per-dimension default)");
    o->add<std::string>(s, "--csv", "csv", "Also write the flat rows to this CSV file");
  }
  {
    auto [s, o] = sub("lambda-check", "Pullback and round-trip checks of the Lagrangian embedding");
    o->add<std::string>(s, "--phi", "phi", "Function spec file");
    o->add<int>(s, "--n", "n", "Dimension (when the spec leaves it open)");
    o->add<int>(s, "--points", "points", "Sample points");
    o->add<std::uint64_t>(s, "--seed", "seed", "Random seed");
    o->add<double>(s, "--box", "box", "Half-width of the sampling box");
  }
  {
    auto [s, o] = sub("contour", "Contour integral, inequality chain and deformation sweep");
    o->add<std::string>(s, "--phi", "phi", "Function spec file");
    o->add<int>(s, "--n", "n", "Dimension (when the spec leaves it open)");
    o->add<std::string>(s, "--method", "method", "ts | xy | mc (also ts-quadrature, xy-quadrature, monte-carlo)");
    o->add<int>(s, "--nodes", "nodes", "Quadrature nodes per axis (0: default)");
    o->add<long long>(s, "--samples", "samples", "Monte Carlo samples");
    o->add<std::uint64_t>(s, "--seed", "seed", "Random seed");
    o->add<int>(s, "--steps", "steps", "Deformation steps from the identity quadratic (0: none)");
    o->add<bool>(s, "--chain", "chain", "Include the inequality-chain table");
  }
  {
    auto [s, o] = sub("kuperberg", "Directed-volume invariant V of a smooth symmetric body");
    auto body = std::make_shared<std::vector<std::string>>();
    CLI::Option* b = s->add_option("--body", *body,
                                   "lp-ball P N | ellipsoid A1 .. An | polytope FILE Q1 .. | body spec file")
                         ->expected(1, -1);
    o->fillers.push_back([o, body, b] {
      if (b->count() > 0) o->config["body"] = body_from_tokens(*body);
    });
    o->add<int>(s, "--nodes", "nodes", "Angular nodes (0: per-dimension default)");
    o->add<double>(s, "--bridge-tolerance", "bridge_tolerance", "Relative tolerance of the Omega identity");
  }
  {
    auto [s, o] = sub("suite", "Acceptance battery, one row per criterion");
    o->add<std::string>(s, "--profile", "profile", "quick | full");
    o->add<std::uint64_t>(s, "--seed", "seed", "Random seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("parse", e.what());
    return kBadInput;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Options& o = opts[chosen->get_name()];
  json config = json::object();
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      config = json::parse(in);
      if (!config.is_object()) throw std::runtime_error("--config: expected a JSON object");
    }
    o.fill();
    for (const auto& [k, v] : o.config.items()) config[k] = v;
    if (workers > 0) config["workers"] = workers;
    for (const std::string& t : tolerances) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw std::runtime_error("--tolerance expects NAME=VALUE, got " + t);
      config["tolerances"][t.substr(0, eq)] = json::parse(t.substr(eq + 1));
    }
  } catch (const std::exception& e) {
    error_record("parse", e.what());
    return kBadInput;
  }

  bmk_report* rep = nullptr;
  const bmk_status s = bmk_run(chosen->get_name().c_str(), config.dump().c_str(), &rep);
  if (!rep) {
    std::cerr << bmk_last_error() << "\n";
    return exit_code(s);
  }
  const char* text = bmk_report_render(rep, format.c_str());
  if (!text) {
    std::cerr << bmk_last_error() << "\n";
    bmk_report_free(rep);
    return kNumeric;
  }
  std::string out = text;
  if (!out.empty() && out.back() != '\n') out += '\n';
  if (report_path.empty()) {
    std::cout << out;
  } else if (bmk_write_file(report_path.c_str(), out.c_str()) != BMK_OK) {
    std::cerr << bmk_last_error() << "\n";
    bmk_report_free(rep);
    return exit_code(BMK_RESOURCE_ERROR);
  }
  bmk_report_free(rep);
  return exit_code(s);
}
