#include "bmk/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmk/error.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

namespace {

std::vector<std::size_t> counts_of(const std::vector<GridAxis>& axes) {
  std::vector<std::size_t> c;
  for (const auto& a : axes) c.push_back(a.count);
  return c;
}

void check_axes(const std::vector<GridAxis>& axes, const char* who) {
  for (const auto& a : axes) {
    if (a.count < 2 || !(a.max > a.min)) throw InvalidArgument(std::string(who) + ": degenerate axis");
  }
}

// Result of one 1D transform: sup_j x_j xi_i - v_j, or nothing when every
// v_j is +inf.
struct Line {
  std::vector<double> out;
  bool empty = true;
};

// Lower hull + monotone argmax. `xs` ascending and uniform.
Line transform_line(const std::vector<double>& xs, const std::vector<ExtendedReal>& vs, const GridAxis& dual,
                    bool refine) {
  Line line;
  std::vector<std::size_t> hull;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (vs[j].is_infinite()) continue;
    const double vj = vs[j].value();
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double va = vs[a].value(), vb = vs[b].value();
      // drop b when it lies on or above the chord a-j
      if ((vb - va) * (xs[j] - xs[a]) >= (vj - va) * (xs[b] - xs[a])) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(j);
  }
  if (hull.empty()) return line;
  line.empty = false;
  line.out.resize(dual.count);
  std::size_t p = 0;
  auto g = [&](std::size_t j, double xi) { return xs[j] * xi - vs[j].value(); };
  for (std::size_t i = 0; i < dual.count; ++i) {
    const double xi = dual.node(i);
    while (p + 1 < hull.size() && g(hull[p + 1], xi) > g(hull[p], xi)) ++p;
    const std::size_t k = hull[p];
    double best = g(k, xi);
    if (refine && k > 0 && k + 1 < xs.size() && vs[k - 1].is_finite() && vs[k + 1].is_finite()) {
      const double gm = g(k - 1, xi), gp = g(k + 1, xi);
      const double curv = 2.0 * best - gm - gp;
      if (curv > 0) {
        const double delta = 0.5 * (gp - gm) / curv;
        best += 0.25 * (gp - gm) * delta;
        if (k > 1 && k + 2 < xs.size() && vs[k - 2].is_finite() && vs[k + 2].is_finite()) {
          // quartic through five nodes, maximised by Newton from the parabola
          const double gmm = g(k - 2, xi), gpp = g(k + 2, xi), g0 = g(k, xi);
          const double c1 = (gmm - 8 * gm + 8 * gp - gpp) / 12;
          const double c2 = (-gmm + 16 * gm - 30 * g0 + 16 * gp - gpp) / 24;
          const double c3 = (-gmm + 2 * gm - 2 * gp + gpp) / 12;
          const double c4 = (gmm - 4 * gm + 6 * g0 - 4 * gp + gpp) / 24;
          double t = delta;
          bool ok = true;
          for (int it = 0; it < 6 && ok; ++it) {
            const double d1 = c1 + t * (2 * c2 + t * (3 * c3 + t * 4 * c4));
            const double d2 = 2 * c2 + t * (6 * c3 + t * 12 * c4);
            if (d2 >= 0) ok = false;
            else t -= d1 / d2;
            if (std::abs(t) > 1) ok = false;
          }
          if (ok) best = g0 + t * (c1 + t * (c2 + t * (c3 + t * c4)));
        }
      }
    }
    line.out[i] = best;
  }
  return line;
}

// One pass: h'(.., xi_k, ..) = inf_{x_k} h - x_k xi_k, i.e. minus the 1D
// conjugate along axis k.
std::vector<ExtendedReal> pass(const std::vector<ExtendedReal>& h, const std::vector<std::size_t>& counts,
                               std::size_t axis, const GridAxis& primal, const GridAxis& dual, bool refine,
                               int workers) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < axis; ++k) outer *= counts[k];
  for (std::size_t k = axis + 1; k < counts.size(); ++k) inner *= counts[k];
  const std::size_t np = counts[axis], nd = dual.count;
  std::vector<double> xs(np);
  for (std::size_t j = 0; j < np; ++j) xs[j] = primal.node(j);
  std::vector<ExtendedReal> out(outer * nd * inner, ExtendedReal::infinity());
  const std::size_t fibres = outer * inner;
  parallel_chunks(fibres, std::min<std::size_t>(fibres, 64), workers, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<ExtendedReal> vs(np);
    for (std::size_t f = b; f < e; ++f) {
      const std::size_t o = f / inner, in = f % inner;
      for (std::size_t j = 0; j < np; ++j) vs[j] = h[(o * np + j) * inner + in];
      Line line = transform_line(xs, vs, dual, refine);
      if (line.empty) continue;
      for (std::size_t i = 0; i < nd; ++i) out[(o * nd + i) * inner + in] = ExtendedReal(-line.out[i]);
    }
  });
  return out;
}

}  // namespace

GridFunction conjugate_bruteforce(const GridFunction& f, const std::vector<GridAxis>& dual) {
  if (static_cast<int>(dual.size()) != f.dim()) throw InvalidArgument("conjugate: dual dimension mismatch");
  check_axes(dual, "conjugate");
  GridFunction shape(dual, std::vector<ExtendedReal>(node_count(dual), 0.0));
  std::vector<Vec> xs;
  std::vector<double> vs;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f.values()[k].is_infinite()) continue;
    xs.push_back(f.node(k));
    vs.push_back(f.values()[k].value());
  }
  if (xs.empty()) throw DomainError("conjugate: function is identically +inf");
  std::vector<ExtendedReal> out(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const Vec xi = shape.node(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < xs.size(); ++k) best = std::max(best, xs[k].dot(xi) - vs[k]);
    out[i] = best;
  }
  return GridFunction(dual, std::move(out), f.is_even(), Smoothness::kGridSampled);
}

GridFunction conjugate_fast_1d(const GridFunction& f, const GridAxis& dual, const ConjugateOptions& opts) {
  if (f.dim() != 1) throw InvalidArgument("conjugate_fast_1d: grid must be one-dimensional");
  return conjugate_nd(f, {dual}, opts);
}

GridFunction conjugate_nd(const GridFunction& f, const std::vector<GridAxis>& dual, const ConjugateOptions& opts) {
  if (static_cast<int>(dual.size()) != f.dim()) throw InvalidArgument("conjugate: dual dimension mismatch");
  check_axes(dual, "conjugate");
  if (f.size() > opts.node_cap || node_count(dual) > opts.node_cap) {
    throw ResourceError("conjugate: grid exceeds node cap of " + std::to_string(opts.node_cap));
  }
  const bool refine = opts.refine && f.smoothness() == Smoothness::kSmooth;
  std::vector<std::size_t> counts = counts_of(f.axes());
  std::vector<ExtendedReal> h = f.values();
  for (std::size_t k = 0; k < dual.size(); ++k) {
    h = pass(h, counts, k, f.axes()[k], dual[k], refine, opts.workers);
    counts[k] = dual[k].count;
  }
  std::vector<ExtendedReal> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].is_infinite()) throw DomainError("conjugate: function is identically +inf");
    out[i] = ExtendedReal(-h[i].value());
  }
  return GridFunction(dual, std::move(out), f.is_even(), Smoothness::kGridSampled);
}

std::vector<GridAxis> default_dual_axes(const GridFunction& f) {
  std::vector<GridAxis> dual;
  for (int k = 0; k < f.dim(); ++k) {
    const GridAxis& a = f.axes()[k];
    const double h = a.step();
    double slope = 0;
    std::vector<std::size_t> idx(f.dim());
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
      idx = f.multi_index(flat);
      const std::size_t c = idx[k];
      if (c != 0 && c + 1 != a.count) continue;
      const bool lo = c == 0;
      std::vector<std::size_t> nb = idx;
      nb[k] = lo ? 1 : c - 1;
      const ExtendedReal& v0 = f.values()[flat];
      const ExtendedReal& v1 = f.at(nb);
      if (v0.is_infinite() || v1.is_infinite()) continue;
      slope = std::max(slope, std::abs(v0.value() - v1.value()) / h);
    }
    if (slope <= 0) slope = 1.0;
    dual.push_back({-slope, slope, a.count});
  }
  return dual;
}

double conjugate_error_bound(const GridFunction& f, const std::vector<GridAxis>& dual) {
  double bound = 0;
  const std::vector<GridAxis> slopes = default_dual_axes(f);
  for (int k = 0; k < f.dim(); ++k) {
    const double xi = std::max(std::abs(dual[k].min), std::abs(dual[k].max));
    bound += 0.5 * f.axes()[k].step() * (xi + slopes[k].max);
  }
  return bound;
}

ConjugatePair conjugate_pair(const GridFunction& f, const std::optional<std::vector<GridAxis>>& dual,
                             const ConjugateOptions& opts) {
  std::vector<GridAxis> axes = dual ? *dual : default_dual_axes(f);
  GridFunction conj = conjugate_nd(f, axes, opts);
  const double bound = conjugate_error_bound(f, axes);
  return {f, std::move(conj), std::move(axes), bound};
}

ExtendedReal conjugate_value(const ConvexFunction& f, const Vec& xi, Vec* argmax) {
  if (f.has_closed_form_conjugate() && argmax == nullptr) return f.closed_form_conjugate(xi);
  if (!f.has_gradient() || !f.has_hessian()) {
    throw DomainError("conjugate_value: needs a closed form or a smooth function");
  }
  // maximize G(x) = x . xi - f(x) by damped Newton
  Vec x = Vec::Zero(f.dim());
  auto G = [&](const Vec& y) { return y.dot(xi) - f(y).value_or(std::numeric_limits<double>::infinity()); };
  double gx = G(x);
  for (int it = 0; it < 500; ++it) {
    const Vec r = xi - f.gradient(x);
    if (r.norm() <= 1e-12 * std::max(1.0, xi.norm())) break;
    Mat h = f.hessian(x);
    Vec step = h.ldlt().solve(r);
    if (!step.allFinite() || step.dot(r) <= 0) step = r;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec y = x + t * step;
      const double gy = G(y);
      if (gy >= gx) {
        moved = gy > gx || y != x;
        x = y;
        gx = gy;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    if (x.norm() > 1e12) return ExtendedReal::infinity();
  }
  if ((xi - f.gradient(x)).norm() > 1e-6 * std::max(1.0, xi.norm())) {
    // gradient range does not reach xi: sup is not attained
    if (x.norm() > 1e6) return ExtendedReal::infinity();
  }
  if (argmax) *argmax = x;
  return ExtendedReal(gx);
}

namespace {

// min_y f(y) + j |x - y| in one dimension. f is even so the minimizer lies
// between 0 and x.
double inf_convolve_1d(const ConvexFunction& f, double j, double x) {
  auto F = [&](double y) {
    Vec v(1);
    v(0) = y;
    return f(v).value_or(std::numeric_limits<double>::infinity()) + j * std::abs(x - y);
  };
  double a = std::min(0.0, x), b = std::max(0.0, x);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = F(c), fd = F(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(x)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = F(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = F(d);
    }
  }
  return std::min({F(a), F(b), F(0.5 * (a + b)), F(x)});
}

// n-D: smoothed |x - y| with a shrinking smoothing length, gradient descent
// with backtracking from y = x.
double inf_convolve_nd(const ConvexFunction& f, double j, const Vec& x) {
  Vec y = x;
  double best = f(x).value_or(std::numeric_limits<double>::infinity());
  for (double delta = 1e-2; delta >= 1e-10; delta *= 0.1) {
    auto F = [&](const Vec& z) {
      const double d = (x - z).squaredNorm();
      return f(z).value_or(std::numeric_limits<double>::infinity()) + j * (std::sqrt(d + delta * delta) - delta);
    };
    auto dF = [&](const Vec& z) -> Vec {
      const Vec e = z - x;
      return f.gradient(z) + j * e / std::sqrt(e.squaredNorm() + delta * delta);
    };
    double fy = F(y);
    double t = 1.0;
    for (int it = 0; it < 2000; ++it) {
      const Vec g = dF(y);
      if (g.norm() < 1e-12) break;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vec z = y - t * g;
        const double fz = F(z);
        if (fz < fy - 1e-4 * t * g.squaredNorm()) {
          y = z;
          fy = fz;
          moved = true;
          t *= 2.0;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
    }
    best = std::min(best, f(y).value_or(std::numeric_limits<double>::infinity()) + j * (x - y).norm());
  }
  return best;
}

}  // namespace

std::pair<ConvexFunction, ConvexFunction> approx_sequences(const ConvexFunction& f, double j) {
  if (!(j > 0)) throw InvalidArgument("approx_sequences: j must be positive");
  const int n = f.dim();
  FunctionFlags flags_phi = f.flags();
  flags_phi.growth = {GrowthClass::kGeneral, 0, 0};
  if (flags_phi.smoothness == Smoothness::kSmooth) flags_phi.smoothness = Smoothness::kC1;
  nlohmann::json d = f.descriptor();
  ConvexFunction phi(
      n,
      [f, j](const Vec& x) { return max(f(x), ExtendedReal(0.5 * x.squaredNorm() - j)); },
      f.has_gradient() ? ConvexFunction::GradFn([f, j](const Vec& x) -> Vec {
        const ExtendedReal v = f(x);
        if (v.is_finite() && v.value() >= 0.5 * x.squaredNorm() - j) return f.gradient(x);
        return x;
      })
                       : ConvexFunction::GradFn{},
      {}, flags_phi, {{"family", "approx_phi"}, {"inner", d}, {"j", j}});
  FunctionFlags flags_psi = f.flags();
  flags_psi.growth = {GrowthClass::kLinear, 0, 0};
  if (flags_psi.smoothness == Smoothness::kSmooth) flags_psi.smoothness = Smoothness::kC1;
  ConvexFunction psi(
      n,
      [f, j](const Vec& x) -> ExtendedReal {
        const ExtendedReal v = f(x);
        if (v.is_finite() && f.has_gradient() && f.gradient(x).norm() <= j) return v;
        if (x.size() == 1) return ExtendedReal(inf_convolve_1d(f, j, x(0)));
        if (!f.has_gradient()) throw DomainError("approx_sequences: psi_j in n > 1 needs a gradient");
        return ExtendedReal(inf_convolve_nd(f, j, x));
      },
      {}, {}, flags_psi, {{"family", "approx_psi"}, {"inner", d}, {"j", j}});
  return {phi, psi};
}

MonotoneFamilyReport check_monotone_conjugates(const std::vector<GridFunction>& family,
                                               const std::vector<GridAxis>& dual,
                                               const std::optional<GridFunction>& limit, double tolerance) {
  using Dir = MonotoneFamilyReport::Direction;
  if (family.size() < 2) throw InvalidArgument("monotone family: need at least two members");
  const std::size_t size = family.front().size();
  for (const auto& g : family) {
    if (g.size() != size) throw InvalidArgument("monotone family: members on different grids");
  }
  bool up = true, down = true;
  for (std::size_t k = 0; k + 1 < family.size(); ++k) {
    for (std::size_t i = 0; i < size; ++i) {
      const ExtendedReal& a = family[k].values()[i];
      const ExtendedReal& b = family[k + 1].values()[i];
      if (a < b) down = false;
      if (b < a) up = false;
    }
  }
  if (!up && !down) throw InvalidArgument("monotone family: members are not pointwise ordered");
  MonotoneFamilyReport r;
  r.primal_direction = (up && down) ? Dir::kConstant : (down ? Dir::kDecreasing : Dir::kIncreasing);
  std::vector<GridFunction> conj;
  for (const auto& g : family) conj.push_back(conjugate_bruteforce(g, dual));
  for (std::size_t k = 0; k + 1 < conj.size(); ++k) {
    for (std::size_t i = 0; i < conj[k].size(); ++i) {
      const ExtendedReal& a = conj[k].values()[i];
      const ExtendedReal& b = conj[k + 1].values()[i];
      // decreasing primal -> increasing conjugates, and vice versa
      const bool bad = r.primal_direction == Dir::kDecreasing ? (b < a) : (a < b);
      if (bad) ++r.violations;
    }
  }
  r.conjugates_monotone = r.violations == 0;
  if (limit) {
    const GridFunction cl = conjugate_bruteforce(*limit, dual);
    for (const auto& c : conj) {
      double dev = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const ExtendedReal& a = c.values()[i];
        const ExtendedReal& b = cl.values()[i];
        if (a.is_finite() && b.is_finite()) dev = std::max(dev, std::abs(a.value() - b.value()));
      }
      r.deviations.push_back(dev);
    }
    r.limit_deviation = r.deviations.back();
  }
  r.pass = r.conjugates_monotone && (!limit || r.limit_deviation <= tolerance);
  return r;
}

nlohmann::json to_json(const MonotoneFamilyReport& r) {
  using Dir = MonotoneFamilyReport::Direction;
  const char* dir = r.primal_direction == Dir::kDecreasing   ? "decreasing"
                    : r.primal_direction == Dir::kIncreasing ? "increasing"
                                                             : "constant";
  return {{"primal_direction", dir},    {"conjugates_monotone", r.conjugates_monotone},
          {"violations", r.violations}, {"limit_deviation", r.limit_deviation},
          {"deviations", r.deviations}, {"pass", r.pass}};
}

}  // namespace bmk
