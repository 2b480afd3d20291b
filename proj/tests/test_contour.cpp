#include <doctest.h>

#include <cmath>

#include "bmk/contour.hpp"

using namespace bmk;
using nlohmann::json;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

ConvexFunction splice1(const char* core, double a, double radius, int n = 1) {
  return build_analytic({{"family", "splice"}, {"core", {{"family", core}, {"n", n}, {"a", a}}}, {"R", radius}});
}

}  // namespace

TEST_CASE("integrand examples") {
  const Vec v = vec({0.3, -1.2});
  CHECK(integrand({v, v, v, v}) == std::exp(Complex(-v.squaredNorm(), 0.0)));
  auto q = make_quadratic(Mat::Identity(2, 2));
  Complex a = integrand(lift(q, vec({1, 0}), vec({0, 0})));
  CHECK(a.real() == doctest::Approx(std::exp(-0.5)));
  CHECK(a.imag() == 0.0);
  Complex b = integrand({vec({1, 0}), vec({0, 1}), vec({1, 0}), vec({0, 1})});
  CHECK(b.real() == doctest::Approx(std::exp(-1.0)));
  CHECK(b.imag() == 0.0);
}

TEST_CASE("Gaussian calibration in both charts") {
  for (int n : {1, 2}) {
    for (auto m : {ContourMethod::kTs, ContourMethod::kXy}) {
      ContourOptions o;
      o.method = m;
      auto r = contour_integral(make_quadratic(Mat::Identity(n, n)), o);
      const double v = std::pow(2.0, -n) * std::abs(r.integral.value);
      CHECK(v == doctest::Approx(std::pow(kPi, n)).epsilon(1e-10));
      CHECK(r.integral.value.real() > 0);
      CHECK(std::abs(r.integral.value.imag()) <= 3 * r.integral.error + 1e-12);
    }
  }
}

TEST_CASE("Monte Carlo agrees within its error") {
  ContourOptions o;
  o.method = ContourMethod::kMonteCarlo;
  o.samples = 100'000;
  o.seed = 7;
  auto r = contour_integral(make_quadratic(Mat::Identity(1, 1)), o);
  CHECK(std::abs(r.integral.value - Complex(2 * kPi, 0)) <= 4 * r.integral.error);
  CHECK(r.integral.seed == 7u);
  o.workers = 3;
  auto r3 = contour_integral(make_quadratic(Mat::Identity(1, 1)), o);
  CHECK(r3.integral.value == r.integral.value);
}

TEST_CASE("charts agree on a splice") {
  auto phi = splice1("softabs", 2.5, 3.0);
  ContourOptions ts, xy;
  xy.method = ContourMethod::kXy;
  auto a = contour_integral(phi, ts), b = contour_integral(phi, xy);
  CHECK(std::abs(a.integral.value - b.integral.value) <= 3 * (a.integral.error + b.integral.error));
  CHECK(std::abs(a.integral.value - Complex(2 * kPi, 0)) <= 3 * a.integral.error + 1e-6);
}

TEST_CASE("deformation sweeps") {
  auto q = make_quadratic(Mat::Identity(1, 1));
  auto trivial = deformation_sweep(q, q, 5);
  CHECK(trivial.max_deviation < 1e-12);
  CHECK(trivial.pass);
  for (auto* core : {"softabs", "logcosh"}) {
    auto rep = deformation_sweep(q, splice1(core, 2.5, 4.0), 11);
    CHECK(rep.pass);
    CHECK(rep.max_deviation < 1e-3);
    CHECK(to_json(rep)["steps"].size() == 11);
  }
  Mat a(1, 1);
  a << 2.0;
  CHECK_THROWS_AS(deformation_sweep(make_quadratic(a), q, 3), DomainError);
}

TEST_CASE("inequality chain") {
  auto g = mahler_lower_bound_check(make_quadratic(Mat::Identity(1, 1)));
  CHECK(g.lhs == doctest::Approx(kPi).epsilon(1e-10));
  CHECK(g.middle == doctest::Approx(kPi).epsilon(1e-10));
  CHECK(g.rhs == doctest::Approx(2 * kPi).epsilon(1e-8));
  CHECK(g.pass);
  Mat a(1, 1);
  a << 2.0;
  auto an = mahler_lower_bound_check(make_quadratic(a));
  CHECK(an.pass);
  CHECK(an.middle < an.rhs);
  auto sp = mahler_lower_bound_check(splice1("softabs", 2.5, 3.0));
  CHECK(sp.pass);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(contour_integral(make_softabs(1, 1.0)), DomainError);
  CHECK_THROWS_AS(contour_integral(make_max_affine(Mat::Identity(1, 1), Vec::Zero(1))), DomainError);
  CHECK_THROWS_AS(contour_method_from_string("nope"), InvalidArgument);
  CHECK(contour_method_from_string("mc") == ContourMethod::kMonteCarlo);
}
