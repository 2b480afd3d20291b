#include "bmk/lagrangian.hpp"

#include <algorithm>
#include <cmath>

#include "bmk/error.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

namespace {

const Complex kI{0.0, 1.0};

Vec grad_of(const ConvexFunction& phi, const Vec& x) {
  if (phi.has_gradient()) return phi.gradient(x);
  if (phi.flags().smoothness != Smoothness::kSmooth) throw DomainError("lift: no gradient for a non-smooth function");
  return gradient_fd(phi, x, 1e-6);
}

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void require_superlinear(const ConvexFunction& phi) {
  const GrowthClass g = phi.flags().growth.kind;
  if (g != GrowthClass::kSuperlinear && g != GrowthClass::kQuadraticAtInfinity) {
    throw DomainError("invert_pi: phi must be flagged superlinear or quadratic at infinity");
  }
  if (phi.flags().smoothness != Smoothness::kSmooth) throw DomainError("invert_pi: phi must be smooth");
}

}  // namespace

Mat hessian_of(const ConvexFunction& phi, const Vec& x, double fd_step) {
  if (phi.has_hessian()) return phi.hessian(x);
  const int n = phi.dim();
  Mat h(n, n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = fd_step * std::max(1.0, std::abs(x(k)));
    h.col(k) = (grad_of(phi, x + e) - grad_of(phi, x - e)) / (2.0 * e(k));
  }
  return h;
}

LambdaPoint lift(const ConvexFunction& phi, const Vec& x, const Vec& y) {
  if (x.size() != phi.dim() || y.size() != phi.dim()) throw InvalidArgument("lift: dimension mismatch");
  return {x, y, grad_of(phi, x), grad_of(phi, y)};
}

LambdaPoint invert_pi(const ConvexFunction& phi, const Vec& t, const Vec& s, const InvertOptions& opts,
                      InvertStats* stats) {
  require_superlinear(phi);
  const int n = phi.dim();
  if (t.size() != n || s.size() != n) throw InvalidArgument("invert_pi: dimension mismatch");
  auto residual = [&](const Vec& x) -> Vec { return grad_of(phi, x) - grad_of(phi, 2.0 * t - x) - 2.0 * s; };
  const double tol = opts.tolerance * std::max(1.0, 2.0 * s.norm());
  Vec x = opts.start ? *opts.start : Vec(t);
  Vec r = residual(x);
  double r2 = r.squaredNorm();
  int it = 0;
  for (; it < opts.max_iterations && std::sqrt(r2) > tol; ++it) {
    const Mat j = hessian_of(phi, x) + hessian_of(phi, 2.0 * t - x);
    Vec d = -Eigen::LLT<Mat>(0.5 * (j + j.transpose())).solve(r);
    if (!d.allFinite()) d = -r;
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec xn = x + step * d;
      const Vec rn = residual(xn);
      const double rn2 = rn.squaredNorm();
      if (std::isfinite(rn2) && rn2 <= (1.0 - 1e-4 * step) * r2) {
        x = xn;
        r = rn;
        r2 = rn2;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = std::sqrt(r2);
  }
  if (!(std::sqrt(r2) <= tol)) {
    throw NumericError("invert_pi: Newton did not converge after " + std::to_string(it) +
                       " iterations, residual " + std::to_string(std::sqrt(r2)));
  }
  return lift(phi, x, 2.0 * t - x);
}

TwoForm omega_on_lambda(const ConvexFunction& phi, const LambdaPoint& p) {
  const int n = phi.dim();
  const Mat c = 0.5 * (hessian_of(phi, p.x) + hessian_of(phi, p.y));
  CMat m = CMat::Zero(2 * n, 2 * n);
  m.block(0, n, n, n) = c.cast<Complex>();
  m.block(n, 0, n, n) = -c.transpose().cast<Complex>();
  return {m};
}

TwoForm ambient_omega_pullback(const Mat& dxi_dx, const Mat& deta_dy) {
  const Eigen::Index n = dxi_dx.rows();
  // rows of dz and conj(dzeta) composed with the chart Jacobian
  CMat z(n, 2 * n), zb(n, 2 * n);
  z << CMat::Identity(n, n), kI * CMat::Identity(n, n);
  zb << dxi_dx.cast<Complex>(), -kI * deta_dy.cast<Complex>();
  return {(0.5 * kI) * (z.transpose() * zb - zb.transpose() * z)};
}

TwoForm tau_pullback(const Mat& hx, const Mat& hy) {
  const Eigen::Index n = hx.rows();
  Mat jt(n, 2 * n), js(n, 2 * n);
  jt << 0.5 * Mat::Identity(n, n), 0.5 * Mat::Identity(n, n);
  js << 0.5 * hx, -0.5 * hy;
  const Mat m = jt.transpose() * js - js.transpose() * jt;
  return {m.cast<Complex>()};
}

PullbackReport pullback_check(const ConvexFunction& phi, const LambdaPoint& p, double tolerance,
                              double imag_tolerance, double fd_step) {
  const int n = phi.dim();
  // difference Jacobians of the gradient map, never symmetrized
  auto fd_jac = [&](const Vec& x) {
    Mat j(n, n);
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e(k) = fd_step * std::max(1.0, std::abs(x(k)));
      j.col(k) = (grad_of(phi, x + e) - grad_of(phi, x - e)) / (2.0 * e(k));
    }
    return j;
  };
  const Mat jx = fd_jac(p.x), jy = fd_jac(p.y);
  PullbackReport r;
  const double scale = std::max({1.0, jx.cwiseAbs().maxCoeff(), jy.cwiseAbs().maxCoeff()});
  r.hessian_asymmetry = std::max((jx - jx.transpose()).cwiseAbs().maxCoeff(), (jy - jy.transpose()).cwiseAbs().maxCoeff());
  if (r.hessian_asymmetry > 1e-4 * scale) {
    throw NumericError("pullback_check: difference Hessian asymmetric by " + std::to_string(r.hessian_asymmetry) +
                       "; bad difference step");
  }
  const TwoForm omega = ambient_omega_pullback(hessian_of(phi, p.x), hessian_of(phi, p.y));
  const TwoForm tau = tau_pullback(jx, jy);
  r.max_deviation = max_abs(tau.m + 0.5 * omega.m);
  r.max_imaginary = omega.m.imag().cwiseAbs().maxCoeff();
  r.chart_deviation = max_abs(omega_on_lambda(phi, p).m - omega.m);
  r.pass = r.max_deviation <= tolerance && r.max_imaginary <= imag_tolerance;
  return r;
}

RotationReport rotated_coordinates_check(const ConvexFunction& phi, const LambdaPoint& p, std::uint64_t seed,
                                         int pairs, double tolerance) {
  const int n = phi.dim();
  const Complex a(0.5, -0.5), b(0.5, 0.5);
  RotationReport r;
  const CVec z = p.x.cast<Complex>() + kI * p.y.cast<Complex>();
  const CVec zeta = p.xi.cast<Complex>() + kI * p.eta.cast<Complex>();
  const CVec zp = a * z, zetap = b * zeta;
  r.t_deviation = (zp.real() - p.t()).cwiseAbs().maxCoeff();
  r.s_deviation = (zetap.real() - p.s()).cwiseAbs().maxCoeff();
  const Mat hx = hessian_of(phi, p.x), hy = hessian_of(phi, p.y);
  Rng rng(seed);
  for (int k = 0; k < pairs; ++k) {
    Vec u(2 * n), v(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      u(i) = standard_normal(rng);
      v(i) = standard_normal(rng);
    }
    // differentials of z and conj(zeta) along a tangent vector of Lambda
    auto dz = [&](const Vec& w) -> CVec { return w.head(n).cast<Complex>() + kI * w.tail(n).cast<Complex>(); };
    auto dzetab = [&](const Vec& w) -> CVec {
      return (hx * w.head(n)).cast<Complex>() - kI * (hy * w.tail(n)).cast<Complex>();
    };
    auto form = [&](Complex ca, Complex cb) {
      const CVec zu = ca * dz(u), zv = ca * dz(v), eu = cb * dzetab(u), ev = cb * dzetab(v);
      return 0.5 * kI * ((zu.array() * ev.array()).sum() - (zv.array() * eu.array()).sum());
    };
    const Complex w = form(1.0, 1.0);
    const Complex wp = form(a, std::conj(b));
    r.form_deviation = std::max(r.form_deviation, std::abs(wp + 0.5 * kI * w) / std::max(1.0, std::abs(w)));
  }
  r.pass = r.t_deviation == 0.0 && r.s_deviation == 0.0 && r.form_deviation <= tolerance;
  return r;
}

std::pair<double, double> determinant_identity(const ConvexFunction& phi, const LambdaPoint& p) {
  const int n = phi.dim();
  const Mat hx = hessian_of(phi, p.x), hy = hessian_of(phi, p.y);
  Mat d(2 * n, 2 * n);
  d << 0.5 * Mat::Identity(n, n), 0.5 * Mat::Identity(n, n), 0.5 * hx, -0.5 * hy;
  const double lhs = std::abs(d.determinant());
  const double rhs = std::pow(2.0, -n) * (0.5 * (hx + hy)).determinant();
  return {lhs, rhs};
}

LambdaCheckReport lambda_check(const ConvexFunction& phi, const LambdaCheckOptions& opts) {
  require_superlinear(phi);
  const int n = phi.dim();
  LambdaCheckReport rep;
  rep.phi = phi.descriptor();
  rep.n = n;
  rep.points = opts.points;
  struct Local {
    double pull = 0, imag = 0, chart = 0, asym = 0, xy = 0, ts = 0, inj = 0, det = 0, rot = 0;
    std::size_t failures = 0, attempts = 0;
    int iters = 0;
  };
  std::vector<Local> locals(opts.points);
  parallel_chunks(opts.points, std::min<std::size_t>(opts.points, 64), opts.workers,
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      Local& l = locals[i];
      Rng rng(derive_seed(opts.seed, i));
      auto draw = [&] {
        Vec v(n);
        for (int k = 0; k < n; ++k) v(k) = opts.box * (2.0 * uniform01(rng) - 1.0);
        return v;
      };
      const Vec x = draw(), y = draw(), t = draw(), s = draw();
      const LambdaPoint p = lift(phi, x, y);
      const PullbackReport pb = pullback_check(phi, p, opts.pullback_tolerance, opts.imag_tolerance);
      l.pull = pb.max_deviation;
      l.imag = pb.max_imaginary;
      l.chart = pb.chart_deviation;
      l.asym = pb.hessian_asymmetry;
      const auto [lhs, rhs] = determinant_identity(phi, p);
      l.det = std::abs(lhs - rhs) / std::max(rhs, 1e-300);
      l.rot = rotated_coordinates_check(phi, p, derive_seed(opts.seed ^ 0x9e37u, i)).form_deviation;
      auto attempt = [&](const Vec& tt, const Vec& ss, std::optional<Vec> start) -> std::optional<LambdaPoint> {
        ++l.attempts;
        InvertOptions io;
        io.start = std::move(start);
        InvertStats st;
        try {
          LambdaPoint q = invert_pi(phi, tt, ss, io, &st);
          l.iters = std::max(l.iters, st.iterations);
          return q;
        } catch (const NumericError&) {
          ++l.failures;
          return std::nullopt;
        }
      };
      if (auto q = attempt(p.t(), p.s(), std::nullopt)) {
        l.xy = std::max((q->x - x).cwiseAbs().maxCoeff(), (q->y - y).cwiseAbs().maxCoeff());
      } else {
        l.xy = INFINITY;
      }
      auto q1 = attempt(t, s, std::nullopt);
      auto q2 = attempt(t, s, Vec(t + draw()));
      if (q1 && q2) {
        l.ts = std::max((q1->t() - t).cwiseAbs().maxCoeff(), (q1->s() - s).cwiseAbs().maxCoeff());
        l.inj = (q1->x - q2->x).cwiseAbs().maxCoeff();
      } else {
        l.ts = INFINITY;
      }
    }
  });
  for (const Local& l : locals) {
    rep.max_pullback = std::max(rep.max_pullback, l.pull);
    rep.max_imaginary = std::max(rep.max_imaginary, l.imag);
    rep.max_chart = std::max(rep.max_chart, l.chart);
    rep.max_asymmetry = std::max(rep.max_asymmetry, l.asym);
    rep.max_roundtrip_xy = std::max(rep.max_roundtrip_xy, l.xy);
    rep.max_roundtrip_ts = std::max(rep.max_roundtrip_ts, l.ts);
    rep.max_injectivity = std::max(rep.max_injectivity, l.inj);
    rep.max_determinant = std::max(rep.max_determinant, l.det);
    rep.max_rotation = std::max(rep.max_rotation, l.rot);
    rep.newton_failures += l.failures;
    rep.newton_attempts += l.attempts;
    rep.max_newton_iterations = std::max(rep.max_newton_iterations, l.iters);
  }
  rep.pullback_pass = rep.max_pullback <= opts.pullback_tolerance && rep.max_imaginary <= opts.imag_tolerance;
  rep.roundtrip_pass = rep.newton_failures == 0 && rep.max_roundtrip_xy <= opts.roundtrip_tolerance &&
                       rep.max_roundtrip_ts <= opts.roundtrip_tolerance;
  rep.pass = rep.pullback_pass && rep.roundtrip_pass && rep.max_injectivity <= opts.roundtrip_tolerance &&
             rep.max_determinant <= 1e-8 && rep.max_rotation <= 1e-10;
  return rep;
}

nlohmann::json to_json(const LambdaCheckReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
  return {{"phi", r.phi},
          {"n", r.n},
          {"points", r.points},
          {"max_pullback_deviation", num(r.max_pullback)},
          {"max_imaginary", num(r.max_imaginary)},
          {"max_chart_deviation", num(r.max_chart)},
          {"max_hessian_asymmetry", num(r.max_asymmetry)},
          {"max_roundtrip_xy", num(r.max_roundtrip_xy)},
          {"max_roundtrip_ts", num(r.max_roundtrip_ts)},
          {"max_injectivity", num(r.max_injectivity)},
          {"max_determinant_identity", num(r.max_determinant)},
          {"max_rotation", num(r.max_rotation)},
          {"newton_attempts", r.newton_attempts},
          {"newton_failures", r.newton_failures},
          {"newton_success_rate",
           r.newton_attempts ? 1.0 - static_cast<double>(r.newton_failures) / r.newton_attempts : 1.0},
          {"max_newton_iterations", r.max_newton_iterations},
          {"pullback_pass", r.pullback_pass},
          {"roundtrip_pass", r.roundtrip_pass},
          {"pass", r.pass}};
}

}  // namespace bmk
