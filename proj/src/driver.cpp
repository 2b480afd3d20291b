#include "bmk/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bmk/acceptance.hpp"
#include "bmk/config.hpp"
#include "bmk/contour.hpp"
#include "bmk/error.hpp"
#include "bmk/functional_mahler.hpp"
#include "bmk/kuperberg.hpp"
#include "bmk/lagrangian.hpp"
#include "bmk/legendre.hpp"
#include "bmk/polytope.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

using nlohmann::json;

namespace {

class Config {
 public:
  Config(const json& given, json defaults) : resolved_(std::move(defaults)) {
    if (!given.is_object()) throw ParseError("config: expected a JSON object");
    resolved_["workers"] = default_workers();
    resolved_["tolerances"] = json::object();
    for (const auto& [k, v] : given.items()) {
      if (!resolved_.contains(k)) throw ParseError("config: unknown key \"" + k + "\"");
      if (!v.is_null()) resolved_[k] = v;
    }
    tol_ = resolve_tolerances(resolved_["tolerances"]);
    resolved_["tolerances"] = to_json(tol_);
    if (get<int>("workers") < 1) throw InvalidArgument("config: workers must be positive");
  }

  template <class T>
  T get(const std::string& k) const {
    try {
      return resolved_.at(k).get<T>();
    } catch (const json::exception&) {
      throw ParseError("config: key \"" + k + "\" has the wrong type");
    }
  }
  bool has(const std::string& k) const { return resolved_.contains(k) && !resolved_.at(k).is_null(); }
  const json& raw(const std::string& k) const { return resolved_.at(k); }
  const json& resolved() const { return resolved_; }
  const Tolerances& tol() const { return tol_; }
  int workers() const { return get<int>("workers"); }

 private:
  json resolved_;
  Tolerances tol_;
};

// inline object, or a path to a JSON file
json object_or_file(const json& v) { return v.is_string() ? read_json_file(v.get<std::string>()) : v; }

CheckRow lower_bound_row(const std::string& name, double value, double bound, double error, double sigma) {
  return {name, value, bound, "bound", sigma * error, value >= bound - sigma * error};
}

std::string fixed(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void run_legendre(const Config& c, Report& r) {
  GridFunction f = [&] {
    if (c.has("input")) return grid_from_json(object_or_file(c.raw("input")));
    if (!c.has("function")) throw ParseError("legendre: supply \"input\" or \"function\"");
    const ConvexFunction phi = build_analytic(object_or_file(c.raw("function")));
    return sample_to_grid(phi, symmetric_axes(phi.dim(), c.get<double>("box"), c.get<std::size_t>("nodes")));
  }();
  std::vector<GridAxis> dual = default_dual_axes(f);
  if (c.has("dual_box")) {
    const auto box = c.get<std::vector<double>>("dual_box");
    if (box.size() != 2 || !(box[0] < box[1])) throw ParseError("legendre: dual_box must be [lo, hi] with lo < hi");
    for (auto& a : dual) a.min = box[0], a.max = box[1];
  }
  if (c.has("dual_nodes")) {
    for (auto& a : dual) a.count = c.get<std::size_t>("dual_nodes");
  }
  const std::string method = c.get<std::string>("method");
  ConjugateOptions opts;
  opts.workers = c.workers();
  opts.node_cap = c.tol().node_cap;
  GridFunction out = [&] {
    if (method == "fast") return conjugate_nd(f, dual, opts);
    if (method == "oracle") return conjugate_bruteforce(f, dual);
    throw ParseError("legendre: method must be fast or oracle");
  }();
  // the oracle comparison runs when it is affordable or asked for
  double pairs = 1;
  for (const auto& a : f.axes()) pairs *= static_cast<double>(a.count);
  for (const auto& a : dual) pairs *= static_cast<double>(a.count);
  const bool compare = method == "fast" && (c.get<bool>("oracle_check") || pairs <= 5e7);
  if (compare) {
    const GridFunction ref = conjugate_bruteforce(f, dual);
    double dev = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const ExtendedReal a = out.values()[i], b = ref.values()[i];
      if (a.is_infinite() != b.is_infinite()) {
        dev = INFINITY;
        break;
      }
      if (!a.is_infinite()) dev = std::max(dev, std::abs(a.value() - b.value()));
    }
    r.checks.push_back({"fast_vs_oracle", dev, 0.0, "identity", c.tol().oracle_equivalence, dev <= c.tol().oracle_equivalence});
  }
  if (c.has("output")) write_file_atomic(c.get<std::string>("output"), grid_to_json(out).dump());
  std::size_t finite = 0;
  for (const auto& v : out.values()) finite += !v.is_infinite();
  r.result = {{"method", method},
              {"dual_nodes", out.size()},
              {"finite_nodes", finite},
              {"sup_error_bound", conjugate_error_bound(f, dual)},
              {"oracle_compared", compare}};
  if (!c.has("output")) r.result["conjugate"] = grid_to_json(out);
}

void run_mahler_body(const Config& c, Report& r) {
  if (!c.has("input")) throw ParseError("mahler-body: supply \"input\"");
  const SymmetricPolytope k = body_from_json(object_or_file(c.raw("input")));
  MahlerOptions o;
  const std::string m = c.get<std::string>("method");
  if (m == "exact") {
    o.method = VolumeMethod::kExact;
  } else if (m == "mc") {
    o.method = VolumeMethod::kMonteCarlo;
  } else if (m == "rational") {
    o.method = VolumeMethod::kRational;
  } else {
    throw ParseError("mahler-body: method must be exact, mc or rational");
  }
  o.samples = c.get<std::uint64_t>("samples");
  o.seed = c.get<std::uint64_t>("seed");
  o.workers = c.workers();
  o.interior_radius_warning = c.tol().interior_radius_warning;
  const MahlerResult res = mahler(k, o);
  const int n = k.dim();
  r.checks.push_back(lower_bound_row("mahler_lower_bound", res.mahler, std::pow(kPi, n) / factorial(n), res.error,
                                     c.tol().sigma_multiplier));
  r.result = to_json(res);
}

void run_theorem21(const Config& c, Report& r) {
  FunctionalMahlerOptions o;
  o.nodes = c.get<std::size_t>("nodes");
  o.workers = c.workers();
  o.node_cap = c.tol().node_cap;
  const int n = c.get<int>("n");
  const SweepReport s = theorem21_sweep(c.get<std::string>("family"), n, c.get<std::size_t>("count"),
                                        c.get<std::uint64_t>("seed"), o);
  const double bound = std::pow(kPi, n);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& res = s.rows[i].result;
    r.checks.push_back(lower_bound_row("member_" + std::to_string(i), res.product, bound, res.error, c.tol().sigma_multiplier));
  }
  r.result = to_json(s);
  r.csv = sweep_csv(s);
  if (c.has("csv")) write_file_atomic(c.get<std::string>("csv"), r.csv);
}

json function_spec(const Config& c) {
  if (!c.has("phi")) throw ParseError("supply \"phi\"");
  json spec = object_or_file(c.raw("phi"));
  if (c.has("n")) spec["n"] = c.get<int>("n");
  return spec;
}

void run_lambda_check(const Config& c, Report& r) {
  const ConvexFunction phi = build_analytic(function_spec(c));
  LambdaCheckOptions o;
  o.points = c.get<std::size_t>("points");
  o.seed = c.get<std::uint64_t>("seed");
  o.box = c.get<double>("box");
  o.pullback_tolerance = c.tol().pullback_tol;
  o.imag_tolerance = c.tol().lagrangian_imag_tol;
  o.roundtrip_tolerance = c.tol().roundtrip_tol;
  o.workers = c.workers();
  const LambdaCheckReport l = lambda_check(phi, o);
  auto upper = [&](const std::string& name, double v, double tol) { r.checks.push_back({name, v, 0.0, "identity", tol, v <= tol}); };
  upper("pullback", l.max_pullback, o.pullback_tolerance);
  upper("imaginary_part", l.max_imaginary, o.imag_tolerance);
  upper("roundtrip_xy", l.max_roundtrip_xy, o.roundtrip_tolerance);
  upper("roundtrip_ts", l.max_roundtrip_ts, o.roundtrip_tolerance);
  upper("newton_failures", static_cast<double>(l.newton_failures), 0.0);
  r.result = to_json(l);
}

ContourMethod contour_method(const std::string& s) {
  if (s == "ts-quadrature") return ContourMethod::kTs;
  if (s == "xy-quadrature") return ContourMethod::kXy;
  if (s == "monte-carlo") return ContourMethod::kMonteCarlo;
  return contour_method_from_string(s);
}

void run_contour(const Config& c, Report& r) {
  const ConvexFunction phi = build_analytic(function_spec(c));
  ContourOptions o;
  o.method = contour_method(c.get<std::string>("method"));
  o.nodes = c.get<std::size_t>("nodes");
  o.samples = c.get<std::uint64_t>("samples");
  o.seed = c.get<std::uint64_t>("seed");
  o.failure_abort = c.tol().invert_failure_abort;
  o.workers = c.workers();
  const double sigma = c.tol().sigma_multiplier;
  const int steps = c.get<int>("steps");
  if (steps > 0) {
    const DeformationReport d = deformation_sweep(make_quadratic(Mat::Identity(phi.dim(), phi.dim())), phi, steps, o);
    r.checks.push_back({"deformation_stdev", d.stdev, 0.0, "identity", sigma * d.mean_error, d.stdev <= sigma * d.mean_error});
    r.result["deformation"] = to_json(d);
    std::ostringstream csv;
    csv << "t,re,im,error\n";
    for (std::size_t i = 0; i < d.ts.size(); ++i) {
      const auto& e = d.results[i].integral;
      csv << fixed(d.ts[i]) << ',' << fixed(e.value.real()) << ',' << fixed(e.value.imag()) << ',' << fixed(e.error) << '\n';
    }
    r.csv = csv.str();
  } else {
    const ContourResult res = contour_integral(phi, o);
    r.result["integral"] = to_json(res);
  }
  if (c.get<bool>("chain")) {
    const InequalityChain ch = mahler_lower_bound_check(phi, o);
    r.checks.push_back({"modulus_bound", ch.lhs, ch.middle, "bound", sigma * (ch.lhs_error + ch.middle_error),
                        ch.lhs <= ch.middle + sigma * (ch.lhs_error + ch.middle_error)});
    r.checks.push_back({"functional_bound", ch.middle, ch.rhs, "bound", sigma * (ch.middle_error + ch.rhs_error),
                        ch.middle <= ch.rhs + sigma * (ch.middle_error + ch.rhs_error)});
    r.result["chain"] = to_json(ch);
  }
}

void sandwich_rows(Report& r, const std::string& prefix, const KuperbergResult& k, double sigma) {
  const double eps = std::max(k.error + k.mahler.error, 1e-12 * k.mahler.value);
  r.checks.push_back(lower_bound_row(prefix + "lower", k.v, k.lower, eps, sigma));
  r.checks.push_back({prefix + "upper", k.v, k.mahler.value, "bound", sigma * eps, k.v <= k.mahler.value + sigma * eps});
}

void run_kuperberg(const Config& c, Report& r) {
  if (!c.has("body")) throw ParseError("kuperberg: supply \"body\"");
  json spec = object_or_file(c.raw("body"));
  DirectedVolumeOptions o;
  o.angular_nodes = c.get<int>("nodes");
  const double sigma = c.tol().sigma_multiplier;
  if (spec.is_object() && spec.value("type", "") == "polytope" && spec.contains("q") && spec["q"].is_array()) {
    const SymmetricPolytope k = body_from_json(object_or_file(spec.at("body")));
    const SmoothedPolytopeReport p = kuperberg_smoothed_polytope(k, spec["q"].get<std::vector<double>>(), o);
    for (std::size_t i = 0; i < p.q.size(); ++i) sandwich_rows(r, "q" + fixed(p.q[i]) + "_", p.results[i], sigma);
    r.result = to_json(p);
    return;
  }
  BridgeOptions b;
  b.tolerance = c.get<double>("bridge_tolerance");
  const SmoothBody body = smooth_body_from_json(spec);
  const BridgeReport br = bridge_check(body, b, o);
  sandwich_rows(r, "", br.kuperberg, sigma);
  const double v = br.kuperberg.v;
  const double tol = std::max(b.tolerance * v, sigma * (br.kuperberg.error + br.omega_error));
  r.checks.push_back({"omega_identity", v, omega_scale(body.dim()) * br.omega_integral, "identity", tol,
                      br.calibrated_deviation * v <= tol});
  r.result = to_json(br);
}

void run_suite(const Config& c, Report& r) {
  const Profile p = profile_from_string(c.get<std::string>("profile"));
  json rows = json::array();
  for (int id = 1; id <= kCriterionCount; ++id) {
    const CriterionResult cr = run_criterion(id, p, c.workers(), c.get<std::uint64_t>("seed"));
    r.checks.push_back({"criterion_" + std::to_string(id), cr.seconds, cr.budget_seconds, "budget", 0.0, cr.pass});
    rows.push_back(to_json(cr));
  }
  r.result = {{"criteria", rows}};
}

struct Command {
  json defaults;
  std::function<void(const Config&, Report&)> body;
};

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m = {
      {"legendre",
       {{{"input", nullptr}, {"function", nullptr}, {"box", 4.0}, {"nodes", 401}, {"dual_box", nullptr}, {"dual_nodes", nullptr},
         {"method", "fast"}, {"oracle_check", false}, {"output", nullptr}},
        run_legendre}},
      {"mahler-body", {{{"input", nullptr}, {"method", "exact"}, {"samples", 1'000'000}, {"seed", 1}}, run_mahler_body}},
      {"theorem21",
       {{{"family", "quadratic"}, {"n", 2}, {"count", 5}, {"seed", 1}, {"nodes", 0}, {"csv", nullptr}}, run_theorem21}},
      {"lambda-check", {{{"phi", nullptr}, {"n", nullptr}, {"points", 100}, {"seed", 1}, {"box", 1.5}}, run_lambda_check}},
      {"contour",
       {{{"phi", nullptr}, {"n", nullptr}, {"method", "ts"}, {"nodes", 0}, {"samples", 200'000}, {"seed", 1}, {"steps", 0},
         {"chain", true}},
        run_contour}},
      {"kuperberg", {{{"body", nullptr}, {"nodes", 0}, {"bridge_tolerance", 1e-3}}, run_kuperberg}},
      {"suite", {{{"profile", "quick"}, {"seed", 1}}, run_suite}},
  };
  return m;
}

}  // namespace

bool Report::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

json to_json(const Report& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"reference", c.reference},
                      {"reference_kind", c.reference_kind},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  }
  return {{"tool", "bmk"},       {"version", kVersion},   {"subcommand", r.subcommand},
          {"config", r.config},  {"checks", checks},      {"pass", r.pass()},
          {"result", r.result},  {"workers", r.workers},  {"wall_seconds", r.wall_seconds}};
}

std::string render(const Report& r, const std::string& format) {
  if (format == "json") return to_json(r).dump(2) + "\n";
  if (format == "csv") {
    if (!r.csv.empty()) return r.csv;
    std::ostringstream os;
    os << "name,value,reference,reference_kind,tolerance,pass\n";
    for (const auto& c : r.checks) {
      os << c.name << ',' << fixed(c.value) << ',' << fixed(c.reference) << ',' << c.reference_kind << ',' << fixed(c.tolerance)
         << ',' << (c.pass ? 1 : 0) << '\n';
    }
    return os.str();
  }
  if (format == "plot-data") {
    std::ostringstream os;
    os << "# index value reference\n";
    for (std::size_t i = 0; i < r.checks.size(); ++i) {
      os << i << ' ' << fixed(r.checks[i].value) << ' ' << fixed(r.checks[i].reference) << '\n';
    }
    return os.str();
  }
  throw ParseError("format must be json, csv or plot-data");
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : commands()) v.push_back(k);
    return v;
  }();
  return names;
}

Report run(const std::string& subcommand, const json& config) {
  const auto it = commands().find(subcommand);
  if (it == commands().end()) throw ParseError("unknown subcommand \"" + subcommand + "\"");
  const auto start = std::chrono::steady_clock::now();
  const Config c(config, it->second.defaults);
  Report r;
  r.subcommand = subcommand;
  r.config = c.resolved();
  r.workers = c.workers();
  try {
    it->second.body(c, r);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed input: ") + e.what());
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open \"" + path + "\"");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("\"" + path + "\": " + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write \"" + tmp + "\"");
    out << content;
    out.flush();
    if (!out) throw ResourceError("write failed for \"" + tmp + "\"");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ResourceError("cannot rename onto \"" + path + "\"");
  }
}

}  // namespace bmk
