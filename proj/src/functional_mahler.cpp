#include "bmk/functional_mahler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bmk/error.hpp"
#include "bmk/legendre.hpp"
#include "bmk/polytope.hpp"

namespace bmk {

namespace {

// Visit every node with its trapezoid weight, last axis fastest.
template <class F>
void for_each_weighted(const std::vector<GridAxis>& axes, F&& visit) {
  const std::size_t n = axes.size();
  std::vector<std::vector<double>> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < axes[k].count; ++i) w[k].push_back(trapezoid_weight(i, axes[k].count, axes[k].step()));
  }
  std::vector<std::size_t> idx(n, 0);
  const std::size_t total = node_count(axes);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double weight = 1.0;
    bool boundary = false;
    for (std::size_t k = 0; k < n; ++k) {
      weight *= w[k][idx[k]];
      boundary = boundary || idx[k] == 0 || idx[k] + 1 == axes[k].count;
    }
    visit(flat, weight, boundary);
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < axes[k].count) break;
      idx[k] = 0;
    }
  }
}

double finite_min(const GridFunction& g) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : g.values()) {
    if (v.is_finite()) m = std::min(m, v.value());
  }
  return m;
}

double raw_integral(const GridFunction& g) {
  const double m = finite_min(g);
  if (!std::isfinite(m)) return 0.0;
  double s = 0;
  for_each_weighted(g.axes(), [&](std::size_t flat, double w, bool) {
    const ExtendedReal& v = g.values()[flat];
    if (v.is_finite()) s += w * std::exp(m - v.value());
  });
  return s * std::exp(-m);
}

bool can_subsample(const std::vector<GridAxis>& axes) {
  return std::all_of(axes.begin(), axes.end(), [](const GridAxis& a) { return a.count % 2 == 1 && a.count >= 5; });
}

std::vector<GridAxis> coarse_axes(std::vector<GridAxis> axes) {
  for (auto& a : axes) a.count = (a.count + 1) / 2;
  return axes;
}

double radius_for_rise(const ConvexFunction& f, const Vec& u, double rise) {
  const double f0 = f.value(Vec::Zero(f.dim()));
  auto above = [&](double r) {
    const ExtendedReal v = f(Vec(r * u));
    return v.is_infinite() || v.value() - f0 >= rise;
  };
  double hi = 1.0;
  while (!above(hi)) {
    hi *= 2.0;
    if (hi > 1e6) throw DomainError("functional_mahler: exp(-f) does not decay along a coordinate axis");
  }
  double lo = 0.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Dual nodes whose discrete sup moves when the outermost primal layer is
// dropped are artifacts of the truncated box: the conjugate of the function
// on all of R^n is larger there. Set them to +inf.
GridFunction drop_boundary_artifacts(const GridFunction& g, const GridFunction& conj, const ConjugateOptions& co) {
  std::vector<GridAxis> inner_axes = g.axes();
  for (auto& a : inner_axes) {
    const double h = a.step();
    a.min += h;
    a.max -= h;
    a.count -= 2;
  }
  std::vector<ExtendedReal> vals;
  vals.reserve(node_count(inner_axes));
  std::vector<std::size_t> idx;
  GridFunction shape(inner_axes, std::vector<ExtendedReal>(node_count(inner_axes), 0.0));
  for (std::size_t k = 0; k < shape.size(); ++k) {
    idx = shape.multi_index(k);
    for (auto& i : idx) ++i;
    vals.push_back(g.at(idx));
  }
  const GridFunction inner(inner_axes, std::move(vals), g.is_even(), g.smoothness());
  const GridFunction ci = conjugate_nd(inner, conj.axes(), co);
  std::vector<ExtendedReal> out = conj.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double full = out[k].value(), in = ci.values()[k].value();
    if (full - in > 1e-10 * (1.0 + std::abs(full))) out[k] = ExtendedReal::infinity();
  }
  return GridFunction(conj.axes(), std::move(out), conj.is_even(), conj.smoothness());
}

constexpr double kRise = 28.0;  // exp(-28) ~ 7e-13

// Axis directions, the {-1,0,1}^n lattice directions (n <= 3) and a fixed
// pseudo-random set.
std::vector<Vec> probe_directions(int n) {
  std::vector<Vec> dirs;
  for (int k = 0; k < n; ++k) dirs.push_back(Vec::Unit(n, k));
  if (n <= 3) {
    int total = 1;
    for (int k = 0; k < n; ++k) total *= 3;
    for (int code = 0; code < total; ++code) {
      Vec u(n);
      int c = code;
      for (int k = 0; k < n; ++k, c /= 3) u(k) = c % 3 - 1.0;
      if (u.norm() > 0 && u(std::distance(u.data(), std::find_if(u.data(), u.data() + n, [](double v) {
                               return v != 0;
                             }))) > 0)
        dirs.push_back(u.normalized());
    }
  }
  Rng rng(12345);
  for (int i = 0; i < 32 * n; ++i) {
    Vec u(n);
    for (int k = 0; k < n; ++k) u(k) = standard_normal(rng);
    dirs.push_back(u.normalized());
  }
  return dirs;
}

// Axes whose two boundary faces carry exp(-g) above ratio x integral.
std::vector<int> axes_to_grow(const GridFunction& g, double ratio) {
  const double total = raw_integral(g);
  std::vector<double> face(g.dim(), 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const ExtendedReal& v = g.values()[flat];
    if (v.is_infinite()) continue;
    idx = g.multi_index(flat);
    for (int k = 0; k < g.dim(); ++k) {
      if (idx[k] == 0 || idx[k] + 1 == g.axes()[k].count) face[k] = std::max(face[k], std::exp(-v.value()));
    }
  }
  std::vector<int> grow;
  for (int k = 0; k < g.dim(); ++k) {
    if (face[k] > ratio * total) grow.push_back(k);
  }
  return grow;
}

// Symmetric box around {g <= min g + rise}, padded by one node, inside
// `outer`.
std::vector<GridAxis> sublevel_box(const GridFunction& g, double rise, const std::vector<GridAxis>& outer) {
  const double m = finite_min(g);
  std::vector<double> ext(g.dim(), 0.0);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const ExtendedReal& v = g.values()[flat];
    if (v.is_infinite() || v.value() > m + rise) continue;
    const Vec x = g.node(flat);
    for (int k = 0; k < g.dim(); ++k) ext[k] = std::max(ext[k], std::abs(x(k)));
  }
  std::vector<GridAxis> out = outer;
  for (int k = 0; k < g.dim(); ++k) {
    const double w = std::min(ext[k] + 2.0 * g.axes()[k].step(), outer[k].max);
    if (w > 0) out[k] = {-w, w, outer[k].count};
  }
  return out;
}

}  // namespace

double boundary_integrand(const GridFunction& g) {
  double b = 0;
  for_each_weighted(g.axes(), [&](std::size_t flat, double, bool boundary) {
    const ExtendedReal& v = g.values()[flat];
    if (boundary && v.is_finite()) b = std::max(b, std::exp(-v.value()));
  });
  return b;
}

IntegralEstimate exp_integral(const GridFunction& g, double boundary_ratio) {
  IntegralEstimate e;
  e.method = "trapezoid";
  e.count = g.size();
  const double value = raw_integral(g);
  e.value = value;
  if (can_subsample(g.axes())) {
    const double coarse = raw_integral(g.subsample());
    e.error = std::abs(value - coarse) / (g.smoothness() == Smoothness::kSmooth ? 3.0 : 1.0);
  } else {
    e.warnings.push_back("no Richardson estimate: node counts must be odd and at least 5");
  }
  const double b = boundary_integrand(g);
  if (b > boundary_ratio * value) {
    std::ostringstream os;
    os << "truncation: boundary integrand " << b << " exceeds " << boundary_ratio << " x integral";
    e.warnings.push_back(os.str());
  }
  return e;
}

IntegralEstimate exp_integral(const ConvexFunction& f, const std::vector<GridAxis>& axes, double boundary_ratio) {
  return exp_integral(sample_to_grid(f, axes), boundary_ratio);
}

std::size_t default_nodes(int n) {
  switch (n) {
    case 1: return 2001;
    case 2: return 201;
    case 3: return 61;
    default: return 21;
  }
}

FunctionalMahlerResult functional_mahler(const ConvexFunction& f, const FunctionalMahlerOptions& opts) {
  const int n = f.dim();
  if (!f.flags().is_even) throw InvalidArgument("functional_mahler: function must be even");
  std::size_t nodes = opts.nodes ? opts.nodes : default_nodes(n);
  if (nodes % 2 == 0) ++nodes;
  if (nodes < 5) throw InvalidArgument("functional_mahler: need at least 5 nodes per axis");
  FunctionalMahlerResult r;
  r.nodes = nodes;

  std::vector<double> half(n, 0.0);
  if (opts.half_width) {
    if (!(*opts.half_width > 0)) throw InvalidArgument("functional_mahler: box half-width must be positive");
    std::fill(half.begin(), half.end(), *opts.half_width);
  } else {
    for (const Vec& u : probe_directions(n)) {
      const double rad = radius_for_rise(f, u, kRise);
      for (int k = 0; k < n; ++k) half[k] = std::max(half[k], rad * std::abs(u(k)));
    }
  }
  auto axes_of = [&](const std::vector<double>& h) {
    std::vector<GridAxis> axes;
    for (double w : h) axes.push_back({-w, w, nodes});
    return axes;
  };

  // primal box, widened along any axis whose faces still carry mass
  std::optional<GridFunction> g;
  bool settled = false;
  for (int it = 0; it <= opts.max_expansions; ++it) {
    g.emplace(sample_to_grid(f, axes_of(half)));
    if (g->size() > opts.node_cap) throw ResourceError("functional_mahler: grid exceeds node cap");
    const std::vector<int> grow = axes_to_grow(*g, opts.boundary_ratio);
    if (grow.empty()) {
      settled = true;
      break;
    }
    if (it < opts.max_expansions)
      for (int k : grow) half[k] *= opts.expansion;
  }
  if (!settled) r.warnings.push_back("primal box did not reach the boundary tolerance");
  r.primal_axes = g->axes();
  r.primal = exp_integral(*g, opts.boundary_ratio);

  // dual box: the slope box first, then tightened to the sublevel set of the
  // conjugate and widened where its faces still carry mass
  ConjugateOptions co;
  co.refine = opts.refine;
  co.node_cap = opts.node_cap;
  co.workers = opts.workers;
  auto conjugate = [&](const GridFunction& primal, const std::vector<GridAxis>& axes) {
    return drop_boundary_artifacts(primal, conjugate_nd(primal, axes, co), co);
  };
  std::vector<GridAxis> dual = default_dual_axes(*g);
  dual = sublevel_box(conjugate(*g, dual), kRise + 2.0, dual);
  std::optional<GridFunction> conj;
  settled = false;
  for (int it = 0; it <= opts.max_expansions; ++it) {
    conj.emplace(conjugate(*g, dual));
    const std::vector<int> grow = axes_to_grow(*conj, opts.boundary_ratio);
    if (grow.empty()) {
      settled = true;
      break;
    }
    if (it < opts.max_expansions) {
      for (int k : grow) {
        dual[k].min *= opts.expansion;
        dual[k].max *= opts.expansion;
      }
    }
  }
  if (!settled) r.warnings.push_back("dual box did not reach the boundary tolerance");
  r.dual_axes = dual;
  r.dual = exp_integral(*conj, opts.boundary_ratio);
  const bool smooth = g->smoothness() == Smoothness::kSmooth;
  if (smooth) r.dual.error = std::abs(r.dual.real() - raw_integral(conj->subsample())) / 3.0;
  r.product = r.primal.real() * r.dual.real();

  // the whole pipeline again at half resolution
  const GridFunction gc = g->subsample();
  const GridFunction cc = conjugate(gc, coarse_axes(dual));
  const double coarse = raw_integral(gc) * raw_integral(cc);
  r.error = std::abs(r.product - coarse) / (smooth ? 3.0 : 1.0);
  r.error = std::max(r.error, r.product * (r.primal.error / r.primal.real() + r.dual.error / r.dual.real()));
  r.margin = r.product / std::pow(kPi, n);
  for (const auto& w : r.primal.warnings) r.warnings.push_back("primal: " + w);
  for (const auto& w : r.dual.warnings) r.warnings.push_back("dual: " + w);
  return r;
}

nlohmann::json to_json(const FunctionalMahlerResult& r) {
  auto axes_json = [](const std::vector<GridAxis>& axes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& a : axes) j.push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
    return j;
  };
  return {{"integral_primal", to_json(r.primal)},
          {"integral_dual", to_json(r.dual)},
          {"product", r.product},
          {"error", r.error},
          {"margin", r.margin},
          {"primal_axes", axes_json(r.primal_axes)},
          {"dual_axes", axes_json(r.dual_axes)},
          {"nodes", r.nodes},
          {"warnings", r.warnings}};
}

std::vector<nlohmann::json> sweep_members(const std::string& family, int n, std::size_t count, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sweep: dimension must be positive");
  std::vector<nlohmann::json> out;
  auto matrix = [](const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  static const double kPowers[] = {1.5, 2.0, 3.0, 6.0};
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    if (family == "quadratic") {
      Mat b(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) b(r, c) = standard_normal(rng);
      Mat a = b.transpose() * b / n + 0.2 * Mat::Identity(n, n);
      a = 0.5 * (a + a.transpose()).eval();
      out.push_back({{"family", "quadratic"}, {"A", matrix(a)}});
    } else if (family == "ppower") {
      out.push_back({{"family", "ppower"}, {"n", n}, {"p", kPowers[i % 4]}});
    } else if (family == "maxaffine") {
      const int m = n + 2;
      Mat a(m, n);
      Vec b(m);
      do {
        for (int r = 0; r < m; ++r) {
          for (int c = 0; c < n; ++c) a(r, c) = 2 * uniform01(rng) - 1;
          b(r) = 0.5 * uniform01(rng);
        }
      } while (Eigen::FullPivLU<Mat>(a).rank() < n || a.rowwise().norm().minCoeff() < 0.1);
      std::vector<double> bv(b.data(), b.data() + m);
      out.push_back({{"family", "maxaffine"}, {"a", matrix(a)}, {"b", bv}});
    } else if (family == "gauge") {
      const int m = n + 1 + static_cast<int>(i % 3);
      out.push_back({{"family", "gauge"}, {"body", body_to_json(random_polytope(n, m, derive_seed(seed, i)))}});
    } else if (family == "splice") {
      // the core must rise above |x|^2/2 + C inside the radius: scale above 1,
      // and for the separable core a radius beyond the per-axis peaks
      const double a = 2.0 + uniform01(rng);
      const bool radial = i % 2 == 0;
      const double radius = (radial ? 3.0 : 1.5 * std::sqrt(static_cast<double>(n)) * a) + uniform01(rng);
      const char* core = radial ? "softabs" : "logcosh";
      out.push_back({{"family", "splice"}, {"core", {{"family", core}, {"n", n}, {"a", a}}}, {"R", radius}});
    } else {
      throw InvalidArgument("sweep: unknown family '" + family + "'");
    }
  }
  return out;
}

SweepReport theorem21_sweep(const std::string& family, int n, const std::vector<nlohmann::json>& members,
                            const FunctionalMahlerOptions& opts) {
  SweepReport rep;
  rep.family = family;
  rep.n = n;
  rep.rows.resize(members.size());
  FunctionalMahlerOptions inner = opts;
  inner.workers = 1;
  parallel_chunks(members.size(), members.size(), opts.workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      SweepRow& row = rep.rows[i];
      row.params = members[i];
      row.result = functional_mahler(build_analytic(members[i]), inner);
      row.violation = row.result.product < std::pow(kPi, n) - 3.0 * row.result.error;
    }
  });
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (rep.rows[i].result.margin < rep.min_margin) {
      rep.min_margin = rep.rows[i].result.margin;
      rep.min_index = i;
    }
    if (rep.rows[i].violation) ++rep.violations;
  }
  return rep;
}

SweepReport theorem21_sweep(const std::string& family, int n, std::size_t count, std::uint64_t seed,
                            const FunctionalMahlerOptions& opts) {
  return theorem21_sweep(family, n, sweep_members(family, n, count, seed), opts);
}

nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = to_json(row.result);
    j["params"] = row.params;
    j["violation"] = row.violation;
    rows.push_back(j);
  }
  return {{"family", r.family},       {"n", r.n},
          {"rows", rows},             {"min_margin", r.rows.empty() ? 0.0 : r.min_margin},
          {"min_index", r.min_index}, {"violations", r.violations}};
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "index,family,n,primal,dual,product,margin,error,violation\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& x = r.rows[i].result;
    os << i << ',' << r.family << ',' << r.n << ',' << x.primal.real() << ',' << x.dual.real() << ',' << x.product
       << ',' << x.margin << ',' << x.error << ',' << (r.rows[i].violation ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace bmk
