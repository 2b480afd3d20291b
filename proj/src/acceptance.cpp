#include "bmk/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include <boost/multiprecision/cpp_int.hpp>

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

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.2e", v); }

struct Ctx {
  bool quick;
  int workers;
  std::uint64_t seed;
  int max_n(int full) const { return quick ? std::min(full, 2) : full; }
};

// --- 1: cube Mahler volume -------------------------------------------------

CriterionResult cube_identity(const Ctx&) {
  using boost::multiprecision::cpp_rational;
  CriterionResult r{1, "cube Mahler volume 4^n/n!", true, "", 0, 1.0, json::array()};
  double worst = 0;
  bool exact = true;
  for (int n = 1; n <= 6; ++n) {
    cpp_rational expected(1);
    for (int i = 0; i < n; ++i) expected *= 4;
    for (int i = 2; i <= n; ++i) expected /= i;
    MahlerOptions o;
    o.method = VolumeMethod::kRational;
    const MahlerResult rat = mahler(cube(n), o);
    o.method = VolumeMethod::kExact;
    const MahlerResult fl = mahler(cube(n), o);
    const double err = std::abs(fl.mahler - expected.convert_to<double>());
    const bool ok = rat.mahler_rational == expected.str();
    exact = exact && ok;
    worst = std::max(worst, err);
    r.details.push_back({{"n", n}, {"rational", rat.mahler_rational}, {"expected", expected.str()}, {"float", fl.mahler}, {"float_error", err}});
  }
  r.pass = exact && worst <= 1e-9;
  r.summary = std::string("rational ") + (exact ? "exact" : "MISMATCH") + ", float error " + sci(worst) + " <= 1e-9";
  return r;
}

// --- 2: random polytopes ---------------------------------------------------

CriterionResult random_polytopes(const Ctx& c) {
  CriterionResult r{2, "random symmetric polytopes satisfy M >= pi^n/n!", true, "", 0, 120.0, json::object()};
  const int count = c.quick ? 40 : 200;
  double min_ratio = INFINITY;
  int failures = 0;
  for (int i = 0; i < count; ++i) {
    const int n = 1 + i % c.max_n(4);
    const int m = n + 1 + (i / 4) % 4;
    const auto rep = i % 2 ? Representation::kHalfspace : Representation::kVertex;
    const SymmetricPolytope k = random_polytope(n, m, derive_seed(c.seed, static_cast<std::uint64_t>(i)), rep);
    MahlerOptions o;
    o.workers = c.workers;
    const MahlerResult res = mahler(k, o);
    const double bound = std::pow(kPi, n) / factorial(n);
    if (res.mahler < bound - 3 * res.error) ++failures;
    min_ratio = std::min(min_ratio, res.mahler / bound);
  }
  r.pass = failures == 0;
  r.details = {{"count", count}, {"failures", failures}, {"min_ratio", min_ratio}};
  r.summary = std::to_string(count) + " bodies, " + std::to_string(failures) + " below bound, min M/(pi^n/n!) " +
              fmt("%.4f", min_ratio);
  return r;
}

// --- 3: functional inequality sweep ---------------------------------------

CriterionResult functional_sweep(const Ctx& c) {
  CriterionResult r{3, "functional inequality sweep", true, "", 0, 300.0, json::array()};
  FunctionalMahlerOptions o;
  o.workers = c.workers;
  const int top = c.max_n(3);
  int members = 0, violations = 0;
  double quad_dev = 0, min_margin = INFINITY;
  auto sweep = [&](const std::string& family, int n, std::size_t count) {
    const SweepReport s = theorem21_sweep(family, n, count, derive_seed(c.seed, static_cast<std::uint64_t>(n)), o);
    for (const auto& row : s.rows) {
      ++members;
      const double bound = std::pow(kPi, n);
      if (row.result.product < bound - 3 * row.result.error) ++violations;
      min_margin = std::min(min_margin, row.result.margin);
      if (family == "quadratic") quad_dev = std::max(quad_dev, std::abs(row.result.margin - std::pow(2.0, n)));
    }
    r.details.push_back({{"family", family}, {"n", n}, {"count", count}, {"min_margin", s.min_margin}, {"violations", s.violations}});
  };
  const std::size_t maxaffine = c.quick ? 10 : 50, gauges = c.quick ? 6 : 20;
  for (int n = 1; n <= top; ++n) {
    sweep("quadratic", n, 3);
    sweep("ppower", n, 4);
    sweep("maxaffine", n, maxaffine / static_cast<std::size_t>(top) + (static_cast<std::size_t>(n) <= maxaffine % static_cast<std::size_t>(top)));
    sweep("gauge", n, gauges / static_cast<std::size_t>(top) + (static_cast<std::size_t>(n) <= gauges % static_cast<std::size_t>(top)));
  }
  r.pass = violations == 0 && quad_dev <= 1e-4;
  r.summary = std::to_string(members) + " members, " + std::to_string(violations) + " violations, min margin " +
              fmt("%.4f", min_margin) + ", quadratic margin deviation " + sci(quad_dev) + " <= 1e-4";
  return r;
}

// --- 4: Gaussian contour integral -----------------------------------------

CriterionResult gaussian_contour(const Ctx& c) {
  CriterionResult r{4, "Gaussian contour integral 2^-n |I| = pi^n", true, "", 0, 180.0, json::array()};
  std::string parts;
  for (int n = 1; n <= c.max_n(3); ++n) {
    ContourOptions o;
    o.workers = c.workers;
    if (n == 3) {
      o.method = ContourMethod::kXy;
      o.nodes = 13;
    }
    const ContourResult res = contour_integral(make_quadratic(Mat::Identity(n, n)), o);
    const double rel = std::abs(std::pow(2.0, -n) * std::abs(res.integral.value) / std::pow(kPi, n) - 1);
    const double tol = n == 3 ? 1e-3 : 1e-5;
    r.pass = r.pass && rel <= tol;
    r.details.push_back({{"n", n}, {"method", to_string(o.method)}, {"relative_error", rel}, {"tolerance", tol}});
    parts += (parts.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " " + sci(rel) + " <= " + sci(tol);
  }
  r.summary = "relative error " + parts;
  return r;
}

// --- 5: deformation invariance --------------------------------------------

CriterionResult deformation(const Ctx& c) {
  CriterionResult r{5, "contour integral constant along deformations", true, "", 0, 600.0, json::array()};
  struct Splice {
    const char* core;
    int n;
    double a, radius;
  };
  std::vector<Splice> splices = {{"softabs", 1, 2.5, 4.0}, {"logcosh", 1, 2.5, 4.0}, {"softabs", 1, 2.0, 3.0}};
  if (!c.quick) {
    splices.push_back({"softabs", 2, 2.5, 3.0});
    splices.push_back({"logcosh", 2, 2.0, 4.5});
  } else {
    splices.pop_back();
  }
  double worst = 0;
  const auto q = [](int n) { return make_quadratic(Mat::Identity(n, n)); };
  for (const Splice& s : splices) {
    const json spec = {{"family", "splice"}, {"core", {{"family", s.core}, {"n", s.n}, {"a", s.a}}}, {"R", s.radius}};
    ContourOptions o;
    o.workers = c.workers;
    const DeformationReport d = deformation_sweep(q(s.n), build_analytic(spec), 11, o);
    const double ratio = d.mean_error > 0 ? d.stdev / d.mean_error : (d.stdev == 0 ? 0 : INFINITY);
    worst = std::max(worst, ratio);
    r.pass = r.pass && d.pass;
    r.details.push_back({{"phi", spec}, {"stdev", d.stdev}, {"mean_error", d.mean_error}, {"max_deviation", d.max_deviation}});
  }
  r.summary = std::to_string(splices.size()) + " splices x 11 steps, worst stdev/mean error " + fmt("%.3f", worst) + " <= 3";
  return r;
}

// --- 6, 7: Lagrangian identities and inversion ----------------------------

std::vector<json> lambda_functions(int top) {
  std::vector<json> all = {
      {{"family", "quadratic"}, {"A", {{2.0}}}},
      {{"family", "quadratic"}, {"A", {{1.5, 0.3}, {0.3, 0.8}}}},
      {{"family", "quadratic"}, {"A", {{1.2, 0.2, 0.0}, {0.2, 0.9, 0.1}, {0.0, 0.1, 1.4}}}},
      {{"family", "splice"}, {"core", {{"family", "softabs"}, {"n", 1}, {"a", 2.5}}}, {"R", 3.0}},
      {{"family", "splice"}, {"core", {{"family", "softabs"}, {"n", 2}, {"a", 2.5}}}, {"R", 3.0}},
      {{"family", "splice"}, {"core", {{"family", "logcosh"}, {"n", 2}, {"a", 2.0}}}, {"R", 4.5}},
      {{"family", "splice"}, {"core", {{"family", "softabs"}, {"n", 3}, {"a", 2.5}}}, {"R", 3.0}},
      {{"family", "cosh"}, {"n", 2}},
      {{"family", "sum"}, {"terms", {{{"family", "quadratic"}, {"n", 3}}, {{"family", "logcosh"}, {"n", 3}}}}},
      {{"family", "linear"},
       {"inner", {{"family", "splice"}, {"core", {{"family", "softabs"}, {"n", 2}, {"a", 2.5}}}, {"R", 3.0}}},
       {"T", {{1.0, 0.3}, {-0.2, 0.9}}}},
  };
  std::vector<json> out;
  for (const auto& f : all) {
    if (build_analytic(f).dim() <= top) out.push_back(f);
  }
  return out;
}

CriterionResult pullback(const Ctx& c) {
  CriterionResult r{6, "pullback identity and real Lagrangian", true, "", 0, 60.0, json::array()};
  const auto fns = lambda_functions(c.max_n(3));
  double dev = 0, imag = 0;
  std::size_t points = 0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    LambdaCheckOptions o;
    o.points = 50;
    o.seed = derive_seed(c.seed, i);
    o.workers = c.workers;
    const LambdaCheckReport l = lambda_check(build_analytic(fns[i]), o);
    dev = std::max(dev, l.max_pullback);
    imag = std::max(imag, l.max_imaginary);
    points += l.points;
    r.details.push_back({{"phi", fns[i]}, {"max_pullback", l.max_pullback}, {"max_imaginary", l.max_imaginary}});
  }
  r.pass = dev <= 1e-6 && imag <= 1e-8;
  r.summary = std::to_string(points) + " points on " + std::to_string(fns.size()) + " functions, pullback " + sci(dev) +
              " <= 1e-6, imaginary " + sci(imag) + " <= 1e-8";
  return r;
}

CriterionResult roundtrip(const Ctx& c) {
  CriterionResult r{7, "chart round trips and Newton success", true, "", 0, 30.0, json::array()};
  const auto fns = lambda_functions(c.max_n(3));
  double worst = 0;
  std::size_t attempts = 0, failures = 0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    LambdaCheckOptions o;
    o.points = 100;
    o.seed = derive_seed(c.seed + 1, i);
    o.workers = c.workers;
    const LambdaCheckReport l = lambda_check(build_analytic(fns[i]), o);
    worst = std::max({worst, l.max_roundtrip_xy, l.max_roundtrip_ts});
    attempts += l.newton_attempts;
    failures += l.newton_failures;
    r.details.push_back({{"phi", fns[i]}, {"roundtrip_xy", l.max_roundtrip_xy}, {"roundtrip_ts", l.max_roundtrip_ts},
                         {"newton_failures", l.newton_failures}});
  }
  r.pass = worst <= 1e-8 && failures == 0;
  r.summary = "round trip " + sci(worst) + " <= 1e-8, Newton " + std::to_string(attempts - failures) + "/" +
              std::to_string(attempts) + " converged";
  return r;
}

// --- 8: monotone conjugates -------------------------------------------------

CriterionResult monotone(const Ctx&) {
  CriterionResult r{8, "monotone families have reversed monotone conjugates", true, "", 0, 30.0, json::array()};
  const auto axes = symmetric_axes(1, 8.0, 801);
  const auto dual = symmetric_axes(1, 0.9, 91);
  // shifted quadratics decreasing to |x|^2/2
  std::vector<GridFunction> shifted;
  for (int j = 1; j <= 6; ++j) {
    std::vector<ExtendedReal> v;
    for (std::size_t i = 0; i < axes[0].count; ++i) v.emplace_back(0.5 * axes[0].node(i) * axes[0].node(i) + 1.0 / j);
    shifted.emplace_back(axes, v, true);
  }
  const GridFunction q = sample_to_grid(make_quadratic(Mat::Identity(1, 1)), axes);
  const MonotoneFamilyReport a = check_monotone_conjugates(shifted, dual, q, 1.0 / 6 + 1e-9);
  // max(f, |x|^2/2 - j) decreasing to a function of linear growth
  const ConvexFunction f = make_logcosh(1, 1.0);
  std::vector<GridFunction> capped;
  for (int j = 1; j <= 6; ++j) capped.push_back(sample_to_grid(approx_sequences(f, j).first, axes));
  const MonotoneFamilyReport b = check_monotone_conjugates(capped, dual, sample_to_grid(f, axes), 1e-9);
  r.pass = a.pass && b.pass;
  r.details.push_back(to_json(a));
  r.details.push_back(to_json(b));
  r.summary = "shifted quadratics " + std::string(a.pass ? "ok" : "FAIL") + " (limit gap " + sci(a.limit_deviation) +
              "), capped logcosh " + (b.pass ? "ok" : "FAIL") + " (limit gap " + sci(b.limit_deviation) + ")";
  return r;
}

// --- 9: fast 1D transform ---------------------------------------------------

CriterionResult fast_transform(const Ctx& c) {
  CriterionResult r{9, "fast 1D transform equals brute force", true, "", 0, 30.0, json::object()};
  Rng rng(c.seed);
  double worst = 0;
  std::size_t max_nodes = 0;
  bool inf_ok = true;
  const int grids = c.quick ? 20 : 50;
  for (int g = 0; g < grids; ++g) {
    const std::size_t nodes = g % 5 == 0 ? 4001 : 2 + static_cast<std::size_t>(uniform01(rng) * 3999);
    max_nodes = std::max(max_nodes, nodes);
    const double half = 0.5 + 4 * uniform01(rng);
    GridAxis axis{-half, half, nodes};
    std::vector<ExtendedReal> v;
    const int kind = g % 3;  // convex, rough, convex with an infinite tail
    for (std::size_t i = 0; i < nodes; ++i) {
      const double x = axis.node(i);
      if (kind == 1) {
        v.emplace_back(2 * uniform01(rng) - 1 + std::abs(x));
      } else if (kind == 2 && std::abs(x) > 0.7 * half) {
        v.push_back(ExtendedReal::infinity());
      } else {
        v.emplace_back(0.5 * x * x + 0.3 * std::abs(x) + 0.01 * uniform01(rng));
      }
    }
    const GridFunction f({axis}, v);
    const double dual_half = 0.5 + 6 * uniform01(rng);
    const GridAxis dual{-dual_half, dual_half, 2 + static_cast<std::size_t>(uniform01(rng) * 3999)};
    const GridFunction fast = conjugate_fast_1d(f, dual);
    const GridFunction ref = conjugate_bruteforce(f, {dual});
    for (std::size_t i = 0; i < dual.count; ++i) {
      const ExtendedReal a = fast.values()[i], b = ref.values()[i];
      if (a.is_infinite() != b.is_infinite()) {
        inf_ok = false;
      } else if (a.is_finite()) {
        worst = std::max(worst, std::abs(a.value() - b.value()));
      }
    }
  }
  r.pass = inf_ok && worst <= 1e-12;
  r.details = {{"grids", grids}, {"max_nodes", max_nodes}, {"max_deviation", worst}};
  r.summary = std::to_string(grids) + " grids up to " + std::to_string(max_nodes) + " nodes, deviation " + sci(worst) +
              " <= 1e-12" + (inf_ok ? "" : ", infinity pattern differs");
  return r;
}

// --- 10: directed volume bridge ---------------------------------------------

CriterionResult bridge(const Ctx&) {
  CriterionResult r{10, "directed volume bridge and sandwich", true, "", 0, 600.0, json::array()};
  const std::vector<std::pair<std::string, SmoothBody>> bodies = {
      {"segment", lp_ball(1, 2)}, {"disc", lp_ball(2, 2)}, {"l4 ball", lp_ball(2, 4)}};
  bool bridge_ok = true, sandwich_ok = true;
  std::string parts;
  for (const auto& [name, body] : bodies) {
    const BridgeReport b = bridge_check(body);
    bridge_ok = bridge_ok && b.pass;
    sandwich_ok = sandwich_ok && b.kuperberg.sandwich;
    json d = to_json(b);
    d["body"] = name;
    r.details.push_back(d);
    parts += (parts.empty() ? "" : ", ") + name + " V " + fmt("%.4f", b.kuperberg.v) + " vs " + fmt("%.4f", b.rhs);
  }
  r.pass = bridge_ok && sandwich_ok;
  r.summary = std::string("sandwich ") + (sandwich_ok ? "holds" : "FAILS") + "; bridge 2^-n int Omega " +
              (bridge_ok ? "within 1e-3" : "off") + " (" + parts + ")";
  return r;
}

// --- 11: linear invariance --------------------------------------------------

Mat random_transform(int n, Rng& rng) {
  while (true) {
    Mat t = Mat::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) t(i, j) += 0.5 * standard_normal(rng);
    }
    const double d = std::abs(t.determinant());
    if (d > 0.2 && d < 5) return t;
  }
}

CriterionResult linear_invariance(const Ctx& c) {
  CriterionResult r{11, "linear invariance of M and J", true, "", 0, 120.0, json::object()};
  Rng rng(derive_seed(c.seed, 11));
  const int count = c.quick ? 6 : 20;
  double worst_m = 0, worst_j = 0;
  FunctionalMahlerOptions o;
  o.workers = c.workers;
  double base[4] = {0, 0, 0, 0};
  for (int i = 0; i < count; ++i) {
    const int n = (c.quick || i % 2 == 0) ? 2 : 3;
    // sheared grids lose nodes across the thin directions
    o.nodes = n == 2 ? 201 : 101;
    const Mat t = random_transform(n, rng);
    const SymmetricPolytope k = random_polytope(n, n + 2, derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(i)));
    const double m0 = mahler(k).mahler, m1 = mahler(k.transformed(t)).mahler;
    worst_m = std::max(worst_m, std::abs(m1 - m0) / m0);
    const ConvexFunction phi = build_analytic(
        {{"family", "sum"}, {"terms", {{{"family", "quadratic"}, {"n", n}}, {{"family", "logcosh"}, {"n", n}}}}});
    if (base[n] == 0) base[n] = functional_mahler(phi, o).product;
    const double j0 = base[n];
    const double j1 = functional_mahler(make_linear_composition(phi, t), o).product;
    worst_j = std::max(worst_j, std::abs(j1 - j0) / j0);
  }
  r.pass = worst_m <= 1e-4 && worst_j <= 1e-4;
  r.details = {{"transforms", count}, {"max_mahler_deviation", worst_m}, {"max_functional_deviation", worst_j}};
  r.summary = std::to_string(count) + " transforms, M deviation " + sci(worst_m) + ", J deviation " + sci(worst_j) + " <= 1e-4";
  return r;
}

}  // namespace

Profile profile_from_string(const std::string& s) {
  if (s == "quick") return Profile::kQuick;
  if (s == "full") return Profile::kFull;
  throw ParseError("profile must be quick or full");
}

CriterionResult run_criterion(int id, Profile profile, int workers, std::uint64_t seed) {
  static const std::vector<std::function<CriterionResult(const Ctx&)>> table = {
      cube_identity, random_polytopes, functional_sweep, gaussian_contour, deformation, pullback,
      roundtrip,     monotone,         fast_transform,   bridge,           linear_invariance};
  if (id < 1 || id > kCriterionCount) throw InvalidArgument("criterion id must be in 1.." + std::to_string(kCriterionCount));
  const Ctx ctx{profile == Profile::kQuick, workers, seed};
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r = table[static_cast<std::size_t>(id - 1)](ctx);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > r.budget_seconds) {
    r.pass = false;
    r.summary += "; over budget";
  }
  return r;
}

json to_json(const CriterionResult& r) {
  return {{"id", r.id},           {"title", r.title},         {"pass", r.pass},      {"summary", r.summary},
          {"seconds", r.seconds}, {"budget_seconds", r.budget_seconds}, {"details", r.details}};
}

}  // namespace bmk
