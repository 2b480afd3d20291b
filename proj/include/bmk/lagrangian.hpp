#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bmk/convex_fn.hpp"

namespace bmk {

/// A point (x, y, xi, eta) of the graph Lambda of (grad phi, grad phi).
struct LambdaPoint {
  Vec x, y, xi, eta;
  Vec t() const { return 0.5 * (x + y); }
  Vec s() const { return 0.5 * (xi - eta); }
};

/// Antisymmetric 2n x 2n matrix M_ab = alpha(e_a, e_b) over the (x, y)
/// chart of Lambda.
struct TwoForm {
  CMat m;
  int n() const { return static_cast<int>(m.rows() / 2); }
};

/// Hessian, analytic when available, else a central difference of the
/// gradient (unsymmetrized, so asymmetry can be inspected).
Mat hessian_of(const ConvexFunction& phi, const Vec& x, double fd_step = 1e-5);

LambdaPoint lift(const ConvexFunction& phi, const Vec& x, const Vec& y);

struct InvertOptions {
  double tolerance = 1e-10;  // on |grad phi(x) - grad phi(2t - x) - 2s|, scaled by max(1, |2s|)
  int max_iterations = 200;
  std::optional<Vec> start;  // warm start for x
};

struct InvertStats {
  int iterations = 0;
  double residual = 0;
};

/// Damped Newton for x with grad phi(x) - grad phi(2t - x) = 2s, i.e. the
/// minimizer of phi(x) + phi(2t - x) - 2 x.s; y = 2t - x.
LambdaPoint invert_pi(const ConvexFunction& phi, const Vec& t, const Vec& s, const InvertOptions& opts = {},
                      InvertStats* stats = nullptr);

/// (1/2)(H(x) + H(y)) dx ^ dy, antisymmetrized.
TwoForm omega_on_lambda(const ConvexFunction& phi, const LambdaPoint& p);

/// Pullback of the ambient form (i/2) sum dz_j ^ conj(dzeta_j) through a
/// Jacobian d(x, y, xi, eta)/d(x, y) given as its xi and eta blocks.
TwoForm ambient_omega_pullback(const Mat& dxi_dx, const Mat& deta_dy);

/// Pullback of sum dt_j ^ ds_j through (x, y) -> (t, s).
TwoForm tau_pullback(const Mat& hx, const Mat& hy);

struct PullbackReport {
  double max_deviation = 0;      // entrywise |pi^* tau + omega/2|
  double max_imaginary = 0;      // entrywise |Im omega| on Lambda
  double chart_deviation = 0;    // |omega_on_lambda - ambient pullback|
  double hessian_asymmetry = 0;  // closedness proxy
  bool pass = false;
};

/// pi^* tau through a finite-difference Jacobian of (x, y) -> (t, s)
/// against the ambient form pulled back through the chart Jacobian
/// (analytic Hessians when available).
PullbackReport pullback_check(const ConvexFunction& phi, const LambdaPoint& p, double tolerance = 1e-6,
                              double imag_tolerance = 1e-8, double fd_step = 1e-5);

struct RotationReport {
  double t_deviation = 0;  // |Re z' - t|, expected exactly 0
  double s_deviation = 0;  // |Re zeta' - s|, expected exactly 0
  double form_deviation = 0;  // max |omega'(u, v) + (i/2) omega(u, v)| over sampled tangent pairs
  bool pass = false;
};

/// z' = ((1-i)/2) z, zeta' = ((1+i)/2) zeta with z = x + iy, zeta = xi + i eta.
RotationReport rotated_coordinates_check(const ConvexFunction& phi, const LambdaPoint& p, std::uint64_t seed,
                                         int pairs = 8, double tolerance = 1e-10);

/// |det D pi| on Lambda and 2^{-n} det((H(x) + H(y))/2).
std::pair<double, double> determinant_identity(const ConvexFunction& phi, const LambdaPoint& p);

struct LambdaCheckOptions {
  std::size_t points = 100;
  std::uint64_t seed = 1;
  double box = 1.5;  // x, y, t, s drawn uniformly from [-box, box]^n
  double pullback_tolerance = 1e-6;
  double imag_tolerance = 1e-8;
  double roundtrip_tolerance = 1e-8;
  int workers = 1;
};

struct LambdaCheckReport {
  nlohmann::json phi;
  int n = 0;
  std::size_t points = 0;
  double max_pullback = 0;
  double max_imaginary = 0;
  double max_chart = 0;
  double max_asymmetry = 0;
  double max_roundtrip_xy = 0;   // invert_pi(pi(p)) vs (x, y)
  double max_roundtrip_ts = 0;   // pi(invert_pi(t, s)) vs (t, s)
  double max_injectivity = 0;    // two Newton starts, same (t, s)
  double max_determinant = 0;    // relative, determinant identity
  double max_rotation = 0;
  std::size_t newton_failures = 0;
  std::size_t newton_attempts = 0;
  int max_newton_iterations = 0;
  bool pullback_pass = false;
  bool roundtrip_pass = false;
  bool pass = false;
};

LambdaCheckReport lambda_check(const ConvexFunction& phi, const LambdaCheckOptions& opts = {});
nlohmann::json to_json(const LambdaCheckReport& r);

}  // namespace bmk
