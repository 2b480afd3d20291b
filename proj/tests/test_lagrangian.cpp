#include <doctest.h>

#include <cmath>

#include "bmk/lagrangian.hpp"
#include "bmk/quadrature.hpp"

using namespace bmk;
using nlohmann::json;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

Mat spd3() {
  Mat a(3, 3);
  a << 2.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 0.7;
  return a;
}

ConvexFunction quartic_plus_quadratic(int n) {
  return make_sum({make_ppower(n, 4.0), make_quadratic(Mat::Identity(n, n))}, {1.0, 0.5});
}

}  // namespace

TEST_CASE("lift examples") {
  auto q = make_quadratic(Mat::Identity(2, 2));
  LambdaPoint p = lift(q, vec({1, 0}), vec({0, 1}));
  CHECK(p.xi == vec({1, 0}));
  CHECK(p.eta == vec({0, 1}));
  CHECK(p.t() == vec({0.5, 0.5}));
  CHECK(p.s() == vec({0.5, -0.5}));
  Mat a = spd3();
  LambdaPoint pa = lift(make_quadratic(a), vec({1, 2, 3}), vec({-1, 0, 1}));
  CHECK((pa.xi - a * vec({1, 2, 3})).norm() < 1e-14);
  CHECK(lift(make_ppower(2, 4.0), vec({1, 1}), vec({0, 0})).xi == vec({1, 1}));
  CHECK_THROWS_AS(lift(make_polytope_indicator(Mat::Identity(1, 1)), vec({0.2}), vec({0.1})), DomainError);
}

TEST_CASE("invert_pi examples") {
  auto q = make_quadratic(Mat::Identity(2, 2));
  LambdaPoint p = invert_pi(q, vec({0.3, -0.2}), vec({1.0, 0.5}));
  CHECK((p.x - vec({1.3, 0.3})).norm() < 1e-12);
  CHECK((p.y - vec({-0.7, -0.7})).norm() < 1e-12);
  Mat a = spd3();
  const Vec t = vec({0.1, 0.2, -0.4}), s = vec({1.0, -2.0, 0.5});
  LambdaPoint pa = invert_pi(make_quadratic(a), t, s);
  CHECK((pa.x - (t + a.ldlt().solve(s))).norm() < 1e-12);
  CHECK_THROWS_AS(invert_pi(make_softabs(1, 1.0), vec({0}), vec({0.5})), DomainError);
  InvertOptions tight;
  tight.max_iterations = 0;
  CHECK_THROWS_AS(invert_pi(quartic_plus_quadratic(1), vec({0.0}), vec({3.0}), tight), NumericError);
}

TEST_CASE("round trips on a quartic-plus-quadratic") {
  auto f = quartic_plus_quadratic(2);
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    Vec x(2), y(2);
    x << 4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2;
    y << 4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2;
    LambdaPoint p = lift(f, x, y);
    LambdaPoint q = invert_pi(f, p.t(), p.s());
    CHECK((q.x - x).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((q.y - y).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("forms on Lambda") {
  auto q = make_quadratic(Mat::Identity(2, 2));
  LambdaPoint p = lift(q, vec({0.3, 1}), vec({-2, 0.5}));
  TwoForm w = omega_on_lambda(q, p);
  CHECK(w.m.block(0, 2, 2, 2).real() == Mat::Identity(2, 2));
  CHECK(w.m.block(2, 0, 2, 2).real() == -Mat::Identity(2, 2));
  CHECK((w.m + w.m.transpose()).norm() == 0.0);
  Mat a = spd3();
  auto fa = make_quadratic(a);
  LambdaPoint pa = lift(fa, vec({1, 2, 3}), vec({0, -1, 1}));
  CHECK((omega_on_lambda(fa, pa).m.block(0, 3, 3, 3).real() - a).norm() == 0.0);
  // closed-form Jacobians: the identity is exact
  CHECK((tau_pullback(a, a).m + 0.5 * ambient_omega_pullback(a, a).m).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(ambient_omega_pullback(a, a).m.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pullback identity") {
  auto q = make_quadratic(Mat::Identity(2, 2));
  PullbackReport rq = pullback_check(q, lift(q, vec({0.1, 0.2}), vec({0.3, -1})));
  CHECK(rq.max_deviation < 1e-9);
  CHECK(rq.pass);
  auto sp = build_analytic({{"family", "splice"}, {"core", {{"family", "softabs"}, {"n", 2}}}, {"R", 2.5}});
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    Vec x(2), y(2);
    x << 6 * uniform01(rng) - 3, 6 * uniform01(rng) - 3;
    y << 6 * uniform01(rng) - 3, 6 * uniform01(rng) - 3;
    PullbackReport r = pullback_check(sp, lift(sp, x, y));
    CHECK(r.max_deviation <= 1e-6);
    CHECK(r.max_imaginary <= 1e-8);
    CHECK(r.chart_deviation <= 1e-6);
  }
}

TEST_CASE("rotated coordinates and the determinant identity") {
  Mat a = spd3();
  auto fa = make_quadratic(a);
  auto f = quartic_plus_quadratic(3);
  Rng rng(10);
  for (int k = 0; k < 100; ++k) {
    Vec x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x(i) = 4 * uniform01(rng) - 2;
      y(i) = 4 * uniform01(rng) - 2;
    }
    RotationReport r = rotated_coordinates_check(fa, lift(fa, x, y), k);
    CHECK(r.t_deviation == 0.0);
    CHECK(r.s_deviation == 0.0);
    CHECK(r.form_deviation <= 1e-10);
    auto [lhs, rhs] = determinant_identity(f, lift(f, x, y));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
  // calibration on the quadratic: |det D pi| = 2^{-2n} det(2A)
  auto [lhs, rhs] = determinant_identity(fa, lift(fa, vec({1, 0, 0}), vec({0, 1, 0})));
  CHECK(lhs == doctest::Approx(std::pow(2.0, -6) * (2 * a).determinant()).epsilon(1e-12));
  CHECK(rhs == doctest::Approx(lhs).epsilon(1e-12));
}

TEST_CASE("lambda_check summary") {
  LambdaCheckOptions o;
  o.points = 40;
  auto r = lambda_check(quartic_plus_quadratic(2), o);
  CHECK(r.pass);
  CHECK(r.newton_failures == 0);
  CHECK(r.max_injectivity < 1e-9);
  auto j = to_json(r);
  CHECK(j["newton_success_rate"] == 1.0);
  o.workers = 3;
  auto r3 = lambda_check(quartic_plus_quadratic(2), o);
  CHECK(r3.max_pullback == r.max_pullback);
}
