#include "bmk/convex_fn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bmk/error.hpp"

namespace bmk {

ConvexFunction::ConvexFunction(int dim, EvalFn eval, GradFn grad, HessFn hess, FunctionFlags flags,
                               nlohmann::json descriptor, EvalFn conjugate)
    : dim_(dim),
      eval_(std::move(eval)),
      grad_(std::move(grad)),
      hess_(std::move(hess)),
      conj_(std::move(conjugate)),
      flags_(flags),
      descriptor_(std::move(descriptor)) {
  if (dim_ <= 0) throw InvalidArgument("ConvexFunction: dimension must be positive");
  if (!eval_) throw InvalidArgument("ConvexFunction: missing evaluator");
}

ExtendedReal ConvexFunction::operator()(const Vec& x) const {
  if (x.size() != dim_) throw InvalidArgument("ConvexFunction: point has wrong dimension");
  return eval_(x);
}

Vec ConvexFunction::gradient(const Vec& x) const {
  if (!grad_) throw DomainError("ConvexFunction: no gradient for " + descriptor_.dump());
  return grad_(x);
}

Mat ConvexFunction::hessian(const Vec& x) const {
  if (!hess_) throw DomainError("ConvexFunction: no Hessian for " + descriptor_.dump());
  return hess_(x);
}

ExtendedReal ConvexFunction::closed_form_conjugate(const Vec& xi) const {
  if (!conj_) throw DomainError("ConvexFunction: no closed-form conjugate for " + descriptor_.dump());
  return conj_(xi);
}

// Smoothed absolute value ------------------------------------------------------
//
// g(u) = 3w/8 + 3u^2/(4w) - u^4/(8w^3) on |u| < w, |u| outside. Matches |u|
// to second order at |u| = w and g'' = (3/(2w))(1 - u^2/w^2) >= 0.

double smooth_abs(double u, double w) {
  const double a = std::abs(u);
  if (a >= w) return a;
  return 3.0 * w / 8.0 + 3.0 * u * u / (4.0 * w) - u * u * u * u / (8.0 * w * w * w);
}

double smooth_abs_d1(double u, double w) {
  if (std::abs(u) >= w) return u > 0 ? 1.0 : -1.0;
  return 3.0 * u / (2.0 * w) - u * u * u / (2.0 * w * w * w);
}

double smooth_abs_d2(double u, double w) {
  if (std::abs(u) >= w) return 0.0;
  return 1.5 / w * (1.0 - u * u / (w * w));
}

// Families -------------------------------------------------------------------

namespace {

double signum(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

FunctionFlags flags_of(bool even, Smoothness s, GrowthClass g) {
  FunctionFlags f;
  f.is_even = even;
  f.smoothness = s;
  f.growth.kind = g;
  return f;
}

nlohmann::json json_from_eigen(const Mat& m) {
  auto j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

}  // namespace

ConvexFunction make_quadratic(const Mat& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("quadratic: matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()))
    throw ConstructionError(ConstructionError::Kind::kNotPositiveDefinite, "quadratic: matrix is not symmetric");
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success)
    throw ConstructionError(ConstructionError::Kind::kNotPositiveDefinite, "quadratic: matrix is not positive definite");
  const Mat inv = llt.solve(Mat::Identity(a.rows(), a.cols()));
  const int n = static_cast<int>(a.rows());
  auto flags = flags_of(true, Smoothness::kSmooth, GrowthClass::kSuperlinear);
  if (a.isIdentity(0.0)) flags.growth = {GrowthClass::kQuadraticAtInfinity, 0.0, 0.0};
  return ConvexFunction(
      n, [a](const Vec& x) { return ExtendedReal(0.5 * x.dot(a * x)); }, [a](const Vec& x) -> Vec { return a * x; },
      [a](const Vec&) -> Mat { return a; }, flags, {{"family", "quadratic"}, {"A", json_from_eigen(a)}},
      [inv](const Vec& xi) { return ExtendedReal(0.5 * xi.dot(inv * xi)); });
}

ConvexFunction make_ppower(int n, double p) {
  if (n <= 0) throw InvalidArgument("ppower: dimension must be positive");
  if (!(p > 1.0)) throw ConstructionError(ConstructionError::Kind::kExponentTooSmall, "ppower: exponent must exceed 1");
  const double q = p / (p - 1.0);
  const Smoothness s = p >= 2.0 ? Smoothness::kSmooth : Smoothness::kC1;
  ConvexFunction::HessFn hess;
  if (p >= 2.0) {
    hess = [p](const Vec& x) -> Mat {
      Vec d(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) d[i] = (p - 1.0) * std::pow(std::abs(x[i]), p - 2.0);
      return d.asDiagonal();
    };
  }
  return ConvexFunction(
      n,
      [p](const Vec& x) {
        double s = 0;
        for (double v : x) s += std::pow(std::abs(v), p) / p;
        return ExtendedReal(s);
      },
      [p](const Vec& x) -> Vec {
        Vec g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = signum(x[i]) * std::pow(std::abs(x[i]), p - 1.0);
        return g;
      },
      hess, flags_of(true, s, GrowthClass::kSuperlinear), {{"family", "ppower"}, {"n", n}, {"p", p}},
      [q](const Vec& xi) {
        double s = 0;
        for (double v : xi) s += std::pow(std::abs(v), q) / q;
        return ExtendedReal(s);
      });
}

ConvexFunction make_max_affine(const Mat& slopes, const Vec& offsets) {
  if (slopes.rows() != offsets.size() || slopes.rows() == 0)
    throw InvalidArgument("maxaffine: need one offset per slope row");
  const int n = static_cast<int>(slopes.cols());
  Eigen::FullPivLU<Mat> lu(slopes);
  if (lu.rank() < n)
    throw ConstructionError(ConstructionError::Kind::kDegenerate, "maxaffine: slopes do not span, growth is not linear");
  auto active = [slopes, offsets](const Vec& x) {
    Eigen::Index best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < slopes.rows(); ++i) {
      const double v = std::abs(slopes.row(i).dot(x)) + offsets[i];
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    return std::pair{best, best_v};
  };
  return ConvexFunction(
      n, [active](const Vec& x) { return ExtendedReal(active(x).second); },
      [active, slopes](const Vec& x) -> Vec {
        const auto i = active(x).first;
        const double d = slopes.row(i).dot(x);
        return signum(d) * slopes.row(i).transpose();
      },
      {}, flags_of(true, Smoothness::kPiecewiseLinear, GrowthClass::kLinear),
      {{"family", "maxaffine"}, {"a", json_from_eigen(slopes)}, {"b", std::vector<double>(offsets.begin(), offsets.end())}});
}

ConvexFunction make_polytope_gauge(const Mat& facet_normals, const Mat& polar_facet_normals) {
  const int n = static_cast<int>(facet_normals.cols());
  auto eval = [facet_normals](const Vec& x) { return (facet_normals * x).cwiseAbs().maxCoeff(); };
  return ConvexFunction(
      n, [eval](const Vec& x) { return ExtendedReal(eval(x)); },
      [facet_normals](const Vec& x) -> Vec {
        const Vec v = facet_normals * x;
        Eigen::Index i;
        v.cwiseAbs().maxCoeff(&i);
        return signum(v[i]) * facet_normals.row(i).transpose();
      },
      {}, flags_of(true, Smoothness::kPiecewiseLinear, GrowthClass::kLinear),
      {{"family", "gauge"}, {"facets", json_from_eigen(facet_normals)}},
      [polar_facet_normals](const Vec& xi) {
        const double g = (polar_facet_normals * xi).cwiseAbs().maxCoeff();
        return g <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
      });
}

ConvexFunction make_polytope_indicator(const Mat& facet_normals) {
  const int n = static_cast<int>(facet_normals.cols());
  return ConvexFunction(
      n,
      [facet_normals](const Vec& x) {
        return (facet_normals * x).cwiseAbs().maxCoeff() <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
      },
      {}, {}, flags_of(true, Smoothness::kPiecewiseLinear, GrowthClass::kGeneral),
      {{"family", "indicator"}, {"facets", json_from_eigen(facet_normals)}});
}

ConvexFunction make_softabs(int n, double scale) {
  if (!(scale > 0)) throw InvalidArgument("softabs: scale must be positive");
  return ConvexFunction(
      n, [scale](const Vec& x) { return ExtendedReal(scale * (std::sqrt(1.0 + x.squaredNorm()) - 1.0)); },
      [scale](const Vec& x) -> Vec { return scale * x / std::sqrt(1.0 + x.squaredNorm()); },
      [scale](const Vec& x) -> Mat {
        const double r2 = 1.0 + x.squaredNorm();
        const double r = std::sqrt(r2);
        return scale * (Mat::Identity(x.size(), x.size()) / r - x * x.transpose() / (r2 * r));
      },
      flags_of(true, Smoothness::kSmooth, GrowthClass::kLinear), {{"family", "softabs"}, {"n", n}, {"a", scale}});
}

ConvexFunction make_logcosh(int n, double scale) {
  if (!(scale > 0)) throw InvalidArgument("logcosh: scale must be positive");
  auto lc = [](double v) {
    const double a = std::abs(v);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  };
  return ConvexFunction(
      n,
      [scale, lc](const Vec& x) {
        double s = 0;
        for (double v : x) s += lc(v);
        return ExtendedReal(scale * s);
      },
      [scale](const Vec& x) -> Vec { return scale * x.array().tanh().matrix(); },
      [scale](const Vec& x) -> Mat {
        Vec d = (1.0 - x.array().tanh().square()).matrix() * scale;
        return d.asDiagonal();
      },
      flags_of(true, Smoothness::kSmooth, GrowthClass::kLinear), {{"family", "logcosh"}, {"n", n}, {"a", scale}});
}

ConvexFunction make_cosh(int n) {
  return ConvexFunction(
      n,
      [](const Vec& x) { return ExtendedReal(x.array().cosh().sum()); },
      [](const Vec& x) -> Vec { return x.array().sinh().matrix(); },
      [](const Vec& x) -> Mat {
        Vec d = x.array().cosh().matrix();
        return d.asDiagonal();
      },
      flags_of(true, Smoothness::kSmooth, GrowthClass::kSuperlinear), {{"family", "cosh"}, {"n", n}},
      [](const Vec& xi) {
        double s = 0;
        for (double v : xi) s += v * std::asinh(v) - std::sqrt(1.0 + v * v);
        return ExtendedReal(s);
      });
}

ConvexFunction make_lp_gauge(int n, double p) {
  if (!(p > 1.0)) throw ConstructionError(ConstructionError::Kind::kExponentTooSmall, "lp gauge: p must exceed 1");
  auto norm = [p](const Vec& x) {
    double s = 0;
    for (double v : x) s += std::pow(std::abs(v), p);
    return std::pow(s, 1.0 / p);
  };
  const double q = p / (p - 1.0);
  return ConvexFunction(
      n, [norm](const Vec& x) { return ExtendedReal(norm(x)); },
      [norm, p](const Vec& x) -> Vec {
        const double mu = norm(x);
        Vec g = Vec::Zero(x.size());
        if (mu == 0.0) return g;
        for (Eigen::Index i = 0; i < x.size(); ++i)
          g[i] = signum(x[i]) * std::pow(std::abs(x[i]) / mu, p - 1.0);
        return g;
      },
      [norm, p](const Vec& x) -> Mat {
        const double mu = norm(x);
        const auto m = x.size();
        if (mu == 0.0) throw DomainError("lp gauge: Hessian undefined at the origin");
        Vec w(m), d(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          w[i] = signum(x[i]) * std::pow(std::abs(x[i]), p - 1.0);
          d[i] = (p - 1.0) * std::pow(std::abs(x[i]), p - 2.0) * std::pow(mu, 1.0 - p);
        }
        Mat h = d.asDiagonal();
        h += (1.0 - p) * std::pow(mu, 1.0 - 2.0 * p) * w * w.transpose();
        return h;
      },
      flags_of(true, p >= 2.0 ? Smoothness::kSmooth : Smoothness::kC1, GrowthClass::kLinear),
      {{"family", "lpgauge"}, {"n", n}, {"p", p}},
      [q](const Vec& xi) {
        double s = 0;
        for (double v : xi) s += std::pow(std::abs(v), q);
        return std::pow(s, 1.0 / q) <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
      });
}

ConvexFunction make_ellipsoid_gauge(const Vec& semi_axes) {
  if (semi_axes.size() == 0 || (semi_axes.array() <= 0).any())
    throw InvalidArgument("ellipsoid: semi-axes must be positive");
  const Vec d = semi_axes.array().square().inverse().matrix();
  const Vec dinv = semi_axes.array().square().matrix();
  const int n = static_cast<int>(semi_axes.size());
  return ConvexFunction(
      n, [d](const Vec& x) { return ExtendedReal(std::sqrt(x.dot(d.asDiagonal() * x))); },
      [d](const Vec& x) -> Vec {
        const double mu = std::sqrt(x.dot(d.asDiagonal() * x));
        if (mu == 0.0) return Vec::Zero(x.size());
        return (d.asDiagonal() * x) / mu;
      },
      [d](const Vec& x) -> Mat {
        const double mu = std::sqrt(x.dot(d.asDiagonal() * x));
        if (mu == 0.0) throw DomainError("ellipsoid gauge: Hessian undefined at the origin");
        const Vec dx = d.asDiagonal() * x;
        Mat h = Mat(d.asDiagonal()) / mu;
        h -= dx * dx.transpose() / (mu * mu * mu);
        return h;
      },
      flags_of(true, Smoothness::kSmooth, GrowthClass::kLinear),
      {{"family", "ellipsoid"}, {"axes", std::vector<double>(semi_axes.begin(), semi_axes.end())}},
      [dinv](const Vec& xi) {
        return xi.dot(dinv.asDiagonal() * xi) <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
      });
}

ConvexFunction make_boundary_matched(const ConvexFunction& gauge, double r0) {
  if (!(r0 > 0 && r0 < 1)) throw InvalidArgument("boundary-matched potential: r0 must lie in (0, 1)");
  if (!gauge.has_gradient() || !gauge.has_hessian())
    throw InvalidArgument("boundary-matched potential: gauge needs gradient and Hessian");
  // psi(r) = smooth_abs(r, r0): equals r beyond r0, C^2, convex, nondecreasing on r >= 0.
  auto flags = gauge.flags();
  flags.smoothness = Smoothness::kSmooth;
  return ConvexFunction(
      gauge.dim(), [gauge, r0](const Vec& x) { return ExtendedReal(smooth_abs(gauge.value(x), r0)); },
      [gauge, r0](const Vec& x) -> Vec { return smooth_abs_d1(gauge.value(x), r0) * gauge.gradient(x); },
      [gauge, r0](const Vec& x) -> Mat {
        const double mu = gauge.value(x);
        if (mu == 0.0) throw DomainError("boundary-matched potential: Hessian undefined at the origin");
        const Vec g = gauge.gradient(x);
        return smooth_abs_d2(mu, r0) * g * g.transpose() + smooth_abs_d1(mu, r0) * gauge.hessian(x);
      },
      flags, {{"family", "boundary_matched"}, {"gauge", gauge.descriptor()}, {"r0", r0}});
}

ConvexFunction make_sum(const std::vector<ConvexFunction>& terms, const std::vector<double>& weights, double constant) {
  if (terms.empty() || terms.size() != weights.size()) throw InvalidArgument("sum: need one weight per term");
  const int n = terms.front().dim();
  FunctionFlags flags;
  flags.is_even = true;
  flags.smoothness = Smoothness::kSmooth;
  bool grad = true, hess = true;
  bool any_super = false, all_linear = true;
  auto rank = [](Smoothness s) {
    switch (s) {
      case Smoothness::kSmooth: return 0;
      case Smoothness::kC1: return 1;
      case Smoothness::kPiecewiseLinear: return 2;
      case Smoothness::kGridSampled: return 3;
    }
    return 3;
  };
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    if (t.dim() != n) throw InvalidArgument("sum: dimension mismatch");
    if (weights[k] < 0) throw InvalidArgument("sum: weights must be non-negative");
    if (weights[k] == 0) continue;
    flags.is_even = flags.is_even && t.flags().is_even;
    if (rank(t.flags().smoothness) > rank(flags.smoothness)) flags.smoothness = t.flags().smoothness;
    grad = grad && t.has_gradient();
    hess = hess && t.has_hessian();
    const auto g = t.flags().growth.kind;
    any_super = any_super || g == GrowthClass::kSuperlinear || g == GrowthClass::kQuadraticAtInfinity;
    all_linear = all_linear && g == GrowthClass::kLinear;
  }
  flags.growth.kind = any_super ? GrowthClass::kSuperlinear : (all_linear ? GrowthClass::kLinear : GrowthClass::kGeneral);
  // A convex combination of quadratic-at-infinity functions stays in the class.
  {
    double wsum = 0, csum = constant, rmax = 0;
    bool all_qai = true;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (weights[k] == 0) continue;
      const auto& g = terms[k].flags().growth;
      if (g.kind != GrowthClass::kQuadraticAtInfinity) all_qai = false;
      wsum += weights[k];
      csum += weights[k] * g.constant;
      rmax = std::max(rmax, g.radius);
    }
    if (all_qai && std::abs(wsum - 1.0) < 1e-14) flags.growth = {GrowthClass::kQuadraticAtInfinity, rmax, csum};
  }
  nlohmann::json desc = {{"family", "sum"}, {"weights", weights}, {"constant", constant}};
  for (const auto& t : terms) desc["terms"].push_back(t.descriptor());
  ConvexFunction::GradFn g;
  ConvexFunction::HessFn h;
  if (grad) {
    g = [terms, weights](const Vec& x) -> Vec {
      Vec out = Vec::Zero(x.size());
      for (std::size_t k = 0; k < terms.size(); ++k)
        if (weights[k] != 0) out += weights[k] * terms[k].gradient(x);
      return out;
    };
  }
  if (hess) {
    h = [terms, weights](const Vec& x) -> Mat {
      Mat out = Mat::Zero(x.size(), x.size());
      for (std::size_t k = 0; k < terms.size(); ++k)
        if (weights[k] != 0) out += weights[k] * terms[k].hessian(x);
      return out;
    };
  }
  return ConvexFunction(
      n,
      [terms, weights, constant](const Vec& x) {
        ExtendedReal acc(constant);
        for (std::size_t k = 0; k < terms.size(); ++k) {
          if (weights[k] == 0) continue;
          const ExtendedReal v = terms[k](x);
          if (v.is_infinite()) return ExtendedReal::infinity();
          acc = acc + ExtendedReal(weights[k] * v.value());
        }
        return acc;
      },
      g, h, flags, desc);
}

ConvexFunction make_linear_composition(const ConvexFunction& f, const Mat& t) {
  if (t.rows() != f.dim() || t.cols() != f.dim()) throw InvalidArgument("composition: matrix has wrong shape");
  ConvexFunction::GradFn g;
  ConvexFunction::HessFn h;
  if (f.has_gradient()) g = [f, t](const Vec& x) -> Vec { return t.transpose() * f.gradient(t * x); };
  if (f.has_hessian()) h = [f, t](const Vec& x) -> Mat { return t.transpose() * f.hessian(t * x) * t; };
  ConvexFunction::EvalFn conj;
  if (f.has_closed_form_conjugate()) {
    const Mat tinv_t = t.inverse().transpose();
    conj = [f, tinv_t](const Vec& xi) { return f.closed_form_conjugate(tinv_t * xi); };
  }
  auto flags = f.flags();
  if (flags.growth.kind == GrowthClass::kQuadraticAtInfinity) flags.growth.kind = GrowthClass::kSuperlinear;
  return ConvexFunction(
      f.dim(), [f, t](const Vec& x) { return f(t * x); }, g, h, flags,
      {{"family", "linear"}, {"T", json_from_eigen(t)}, {"inner", f.descriptor()}}, conj);
}

// Splice ------------------------------------------------------------------------

namespace {

/// Deterministic, roughly uniform directions on the unit sphere.
std::vector<Vec> sphere_directions(int n, int count) {
  std::vector<Vec> dirs;
  if (n == 1) return {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2 * kPi * k / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
    return dirs;
  }
  // Fibonacci lattice on the first three coordinates, axes for the rest.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    Vec v = Vec::Zero(n);
    v[0] = r * std::cos(golden * k);
    v[1] = r * std::sin(golden * k);
    v[2] = z;
    dirs.push_back(v);
  }
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  return dirs;
}

}  // namespace

ConvexFunction make_splice(const ConvexFunction& core, const SpliceOptions& opts) {
  const int n = core.dim();
  const double w = opts.width;
  const double radius = opts.radius;
  if (!(radius > 0) || !(w > 0)) throw InvalidArgument("splice: radius and width must be positive");
  const auto dirs = sphere_directions(n, n == 2 ? 256 : 600);

  // core - |x|^2/2 along rays beyond the radius.
  double c = 0;
  if (opts.constant) {
    c = *opts.constant;
  } else {
    double sup = -std::numeric_limits<double>::infinity();
    const int steps = 400;
    const double outer = 8.0 * radius + 20.0;
    double last_ring = 0, prev_ring = 0;
    for (int k = 0; k <= steps; ++k) {
      const double r = radius + (outer - radius) * k / steps;
      double ring = -std::numeric_limits<double>::infinity();
      for (const auto& d : dirs) {
        const ExtendedReal v = core(Vec(r * d));
        if (v.is_infinite())
          throw ConstructionError(ConstructionError::Kind::kSpliceNotQuadratic, "splice: core is +inf outside radius");
        ring = std::max(ring, v.value() - 0.5 * r * r);
      }
      sup = std::max(sup, ring);
      prev_ring = last_ring;
      last_ring = ring;
    }
    if (last_ring >= prev_ring)
      throw ConstructionError(ConstructionError::Kind::kSpliceNotQuadratic,
                              "splice: core grows at least as fast as |x|^2/2, no quadratic tail exists");
    c = sup + 2.0 * w;
  }

  auto quad = [c](const Vec& x) { return 0.5 * x.squaredNorm() + c; };
  auto eval = [core, quad, w](const Vec& x) {
    const double a = core.value(x), b = quad(x);
    return 0.5 * (a + b) + smooth_abs(0.5 * (a - b), w);
  };
  ConvexFunction::GradFn grad;
  ConvexFunction::HessFn hess;
  if (core.has_gradient()) {
    grad = [core, quad, w](const Vec& x) -> Vec {
      const double u = 0.5 * (core.value(x) - quad(x));
      const Vec ga = core.gradient(x);
      const Vec gb = x;
      return 0.5 * (ga + gb) + 0.5 * smooth_abs_d1(u, w) * (ga - gb);
    };
  }
  if (core.has_gradient() && core.has_hessian()) {
    hess = [core, quad, w](const Vec& x) -> Mat {
      const double u = 0.5 * (core.value(x) - quad(x));
      const Vec dg = core.gradient(x) - x;
      const Mat ha = core.hessian(x);
      const Mat hb = Mat::Identity(x.size(), x.size());
      return 0.5 * (ha + hb) + 0.5 * smooth_abs_d1(u, w) * (ha - hb) + 0.25 * smooth_abs_d2(u, w) * dg * dg.transpose();
    };
  }
  FunctionFlags flags;
  flags.is_even = core.flags().is_even;
  flags.smoothness = core.flags().smoothness == Smoothness::kSmooth ? Smoothness::kSmooth : Smoothness::kC1;
  flags.growth = {GrowthClass::kQuadraticAtInfinity, radius, c};
  ConvexFunction out(n, [eval](const Vec& x) { return ExtendedReal(eval(x)); }, grad, hess, flags,
                     {{"family", "splice"}, {"core", core.descriptor()}, {"R", radius}, {"C", c}, {"width", w}});

  // Convexity by midpoint second differences along random-but-fixed chords.
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    for (int m = 0; m <= 40; ++m) {
      const double r = 1.5 * radius * m / 40.0;
      const Vec& d = dirs[k];
      const Vec& e = dirs[(k * 7 + 3) % dirs.size()];
      const Vec center = r * d;
      for (double h : {0.05, 0.3}) {
        const double dd = out.value(Vec(center + h * e)) + out.value(Vec(center - h * e)) - 2.0 * out.value(center);
        if (dd < -1e-9 * (1.0 + std::abs(out.value(center))))
          throw ConstructionError(ConstructionError::Kind::kNonConvexSplice, "splice: convexity violated by the core");
      }
    }
  }
  // The quadratic tail must be exact beyond the radius.
  for (const auto& d : dirs) {
    for (double r : {radius * 1.0000001, radius * 1.5, radius * 3.0}) {
      const Vec x = r * d;
      if (std::abs(out.value(x) - quad(x)) > 1e-12 * (1.0 + std::abs(quad(x))))
        throw ConstructionError(ConstructionError::Kind::kSpliceNotQuadratic,
                                "splice: function differs from |x|^2/2 + C outside the radius");
    }
  }
  return out;
}

// Grids ------------------------------------------------------------------------

double GridAxis::node(std::size_t i) const {
  // measured from the nearer end so symmetric axes have mirrored nodes
  if (2 * i < count - 1) return min + step() * static_cast<double>(i);
  if (2 * i == count - 1) return 0.5 * (min + max);
  return max - step() * static_cast<double>(count - 1 - i);
}

std::size_t node_count(const std::vector<GridAxis>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.count;
  return total;
}

std::vector<GridAxis> symmetric_axes(int n, double half_width, std::size_t count) {
  return std::vector<GridAxis>(static_cast<std::size_t>(n), GridAxis{-half_width, half_width, count});
}

GridFunction::GridFunction(std::vector<GridAxis> axes, std::vector<ExtendedReal> values, bool even,
                           Smoothness smoothness)
    : axes_(std::move(axes)), values_(std::move(values)), even_(even), smoothness_(smoothness) {
  if (axes_.empty()) throw InvalidArgument("GridFunction: need at least one axis");
  for (const auto& a : axes_) {
    if (a.count < 2) throw InvalidArgument("GridFunction: at least 2 nodes per axis");
    if (!(a.max > a.min)) throw InvalidArgument("GridFunction: empty axis range");
    if (even_ && std::abs(a.min + a.max) > 1e-12 * (std::abs(a.min) + std::abs(a.max)))
      throw InvalidArgument("GridFunction: even grid must be symmetric about the origin");
  }
  if (values_.size() != node_count(axes_)) throw InvalidArgument("GridFunction: value count does not match axes");
}

std::vector<std::size_t> GridFunction::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(axes_.size());
  for (std::size_t d = axes_.size(); d-- > 0;) {
    idx[d] = flat % axes_[d].count;
    flat /= axes_[d].count;
  }
  return idx;
}

std::size_t GridFunction::flat_index(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes_.size(); ++d) flat = flat * axes_[d].count + idx[d];
  return flat;
}

Vec GridFunction::node(std::size_t flat) const {
  const auto idx = multi_index(flat);
  Vec x(dim());
  for (std::size_t d = 0; d < axes_.size(); ++d) x[static_cast<Eigen::Index>(d)] = axes_[d].node(idx[d]);
  return x;
}

GridFunction GridFunction::subsample() const {
  std::vector<GridAxis> coarse;
  for (const auto& a : axes_) {
    if (a.count % 2 == 0 || a.count < 5) throw InvalidArgument("subsample: node counts must be odd and >= 5");
    coarse.push_back({a.min, a.max, (a.count + 1) / 2});
  }
  std::vector<ExtendedReal> vals(node_count(coarse));
  std::vector<std::size_t> idx(axes_.size());
  GridFunction shape(coarse, std::vector<ExtendedReal>(vals.size()), even_, smoothness_);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    auto ci = shape.multi_index(k);
    for (auto& v : ci) v *= 2;
    vals[k] = at(ci);
  }
  return GridFunction(std::move(coarse), std::move(vals), even_, smoothness_);
}

double GridFunction::convexity_defect() const {
  double worst = 0;
  const int n = dim();
  // direction set: axes plus (for n >= 2) the main diagonals of each axis pair
  std::vector<std::vector<int>> dirs;
  for (int a = 0; a < n; ++a) {
    std::vector<int> d(n, 0);
    d[a] = 1;
    dirs.push_back(d);
    for (int b = a + 1; b < n; ++b) {
      std::vector<int> p(n, 0), m(n, 0);
      p[a] = p[b] = 1;
      m[a] = 1;
      m[b] = -1;
      dirs.push_back(p);
      dirs.push_back(m);
    }
  }
  std::vector<std::size_t> lo(n), hi(n);
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (values_[k].is_infinite()) continue;
    const auto idx = multi_index(k);
    for (const auto& d : dirs) {
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const long l = static_cast<long>(idx[i]) - d[i];
        const long h = static_cast<long>(idx[i]) + d[i];
        if (l < 0 || h < 0 || l >= static_cast<long>(axes_[i].count) || h >= static_cast<long>(axes_[i].count)) ok = false;
        else {
          lo[i] = static_cast<std::size_t>(l);
          hi[i] = static_cast<std::size_t>(h);
        }
      }
      if (!ok) continue;
      const auto& a = at(lo);
      const auto& b = at(hi);
      if (a.is_infinite() || b.is_infinite()) continue;
      worst = std::max(worst, -(a.value() + b.value() - 2.0 * values_[k].value()));
    }
  }
  return worst;
}

GridFunction sample_to_grid(const ConvexFunction& f, const std::vector<GridAxis>& axes) {
  if (static_cast<int>(axes.size()) != f.dim()) throw InvalidArgument("sample_to_grid: axis count != dimension");
  if (f(Vec::Zero(f.dim())).is_infinite()) throw DomainError("sample_to_grid: function is +inf at the origin");
  bool symmetric = true;
  for (const auto& a : axes) symmetric = symmetric && std::abs(a.min + a.max) <= 1e-12 * (a.max - a.min);
  std::vector<ExtendedReal> vals(node_count(axes));
  GridFunction shape(axes, std::vector<ExtendedReal>(vals.size()), false);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = f(shape.node(k));
  return GridFunction(axes, std::move(vals), symmetric && f.flags().is_even,
                      f.flags().smoothness == Smoothness::kSmooth ? Smoothness::kSmooth : Smoothness::kGridSampled);
}

Vec gradient_fd(const ConvexFunction& f, const Vec& x, double step) {
  const int n = f.dim();
  Vec g(n);
  for (int i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const auto fp = f(p), fm = f(m);
    if (fp.is_infinite() || fm.is_infinite()) throw DomainError("gradient_fd: stencil reaches +inf");
    g[i] = (fp.value() - fm.value()) / (2 * h);
  }
  return g;
}

Mat hessian_fd(const ConvexFunction& f, const Vec& x, double step) {
  if (!(step > 0)) throw InvalidArgument("hessian_fd: step must be positive");
  const int n = f.dim();
  Mat h(n, n);
  auto val = [&](const Vec& p) {
    const auto v = f(p);
    if (v.is_infinite()) throw DomainError("hessian_fd: stencil reaches +inf");
    return v.value();
  };
  const double f0 = val(x);
  std::vector<double> hs(n);
  for (int i = 0; i < n; ++i) hs[i] = step * std::max(1.0, std::abs(x[i]));
  for (int i = 0; i < n; ++i) {
    Vec p = x, m = x;
    p[i] += hs[i];
    m[i] -= hs[i];
    h(i, i) = (val(p) - 2 * f0 + val(m)) / (hs[i] * hs[i]);
    for (int j = i + 1; j < n; ++j) {
      Vec pp = x, pm = x, mp = x, mm = x;
      pp[i] += hs[i], pp[j] += hs[j];
      pm[i] += hs[i], pm[j] -= hs[j];
      mp[i] -= hs[i], mp[j] += hs[j];
      mm[i] -= hs[i], mm[j] -= hs[j];
      const double v = (val(pp) - val(pm) - val(mp) + val(mm)) / (4 * hs[i] * hs[j]);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

// Grid file --------------------------------------------------------------------

nlohmann::json grid_to_json(const GridFunction& g) {
  nlohmann::json j;
  j["dims"] = g.dim();
  for (const auto& a : g.axes()) j["axes"].push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
  auto vals = nlohmann::json::array();
  for (const auto& v : g.values()) {
    if (v.is_infinite()) vals.push_back("inf");
    else vals.push_back(v.value());
  }
  j["values"] = std::move(vals);
  j["even"] = g.is_even();
  return j;
}

GridFunction grid_from_json(const nlohmann::json& j) {
  try {
    const int dims = j.at("dims").get<int>();
    std::vector<GridAxis> axes;
    for (const auto& a : j.at("axes"))
      axes.push_back({a.at("min").get<double>(), a.at("max").get<double>(), a.at("count").get<std::size_t>()});
    if (static_cast<int>(axes.size()) != dims) throw ParseError("grid file: dims does not match axes");
    std::vector<ExtendedReal> vals;
    vals.reserve(j.at("values").size());
    for (const auto& v : j.at("values")) {
      if (v.is_string()) {
        if (v.get<std::string>() != "inf") throw ParseError("grid file: only \"inf\" is allowed as a string value");
        vals.push_back(ExtendedReal::infinity());
      } else {
        vals.emplace_back(v.get<double>());
      }
    }
    return GridFunction(std::move(axes), std::move(vals), j.value("even", false));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grid file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("grid file: ") + e.what());
  }
}

}  // namespace bmk
