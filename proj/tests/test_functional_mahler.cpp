#include <doctest.h>

#include <cmath>

#include "bmk/functional_mahler.hpp"
#include "bmk/legendre.hpp"
#include "bmk/polytope.hpp"

using namespace bmk;
using nlohmann::json;

TEST_CASE("exp integrals") {
  auto g = exp_integral(make_quadratic(Mat::Identity(1, 1)), symmetric_axes(1, 8.0, 401));
  CHECK(g.real() == doctest::Approx(std::sqrt(2 * kPi)).epsilon(1e-10));
  CHECK(g.warnings.empty());
  std::vector<ExtendedReal> v;
  GridAxis a{-2, 2, 401};
  for (std::size_t i = 0; i < a.count; ++i) {
    v.push_back(std::abs(a.node(i)) <= 1.0 ? ExtendedReal(0.0) : ExtendedReal::infinity());
  }
  CHECK(std::abs(exp_integral(GridFunction({a}, v)).real() - 2.0) <= a.step() + 1e-12);
  auto ab = exp_integral(make_max_affine(Mat::Identity(1, 1), Vec::Zero(1)), symmetric_axes(1, 40.0, 8001));
  CHECK(ab.real() == doctest::Approx(2.0).epsilon(1e-4));
  auto small = exp_integral(make_quadratic(Mat::Identity(1, 1)), symmetric_axes(1, 2.0, 101));
  CHECK(!small.warnings.empty());
}

TEST_CASE("Gaussian product") {
  auto r = functional_mahler(make_quadratic(Mat::Identity(2, 2)));
  CHECK(r.product == doctest::Approx(std::pow(2 * kPi, 2)).epsilon(1e-8));
  CHECK(r.margin == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(r.warnings.empty());
  for (double s : {0.5, 2.0, 5.0}) {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = s;
    a(1, 1) = 1 / s;
    auto q = functional_mahler(make_quadratic(a));
    CHECK(q.product == doctest::Approx(std::pow(2 * kPi, 2)).epsilon(1e-6));
  }
}

TEST_CASE("cube gauge product") {
  auto f = build_analytic({{"family", "gauge"}, {"body", body_to_json(cube(2))}});
  auto r = functional_mahler(f);
  MESSAGE("cube gauge: primal " << r.primal.real() << " dual " << r.dual.real() << " err " << r.error);
  CHECK(std::abs(r.primal.real() - 8.0) <= 3 * r.primal.error);
  // the polar of the square is the cross-polytope, area 2
  CHECK(r.dual.real() == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std::abs(r.product - 16.0) <= 3 * r.error);
  CHECK(r.margin > 1.0);
}

TEST_CASE("shift invariance and linear invariance") {
  auto base = make_ppower(2, 3.0);
  auto shifted = make_sum({base}, {1.0}, 0.7);
  auto r0 = functional_mahler(base), r1 = functional_mahler(shifted);
  CHECK(r1.product == doctest::Approx(r0.product).epsilon(1e-6));
  Mat t(2, 2);
  t << 1.0, 0.4, -0.3, 1.5;
  Mat a(2, 2);
  a << 1.3, 0.2, 0.2, 0.8;
  auto q = make_quadratic(a);
  auto rq = functional_mahler(q), rt = functional_mahler(make_linear_composition(q, t));
  CHECK(rt.product == doctest::Approx(rq.product).epsilon(1e-6));
}

TEST_CASE("sweeps") {
  auto qs = theorem21_sweep("quadratic", 2, 4, 1);
  CHECK(qs.violations == 0);
  for (const auto& row : qs.rows) CHECK(row.result.margin == doctest::Approx(4.0).epsilon(1e-6));
  auto ps = theorem21_sweep("ppower", 1, 4, 1);
  CHECK(ps.violations == 0);
  for (const auto& row : ps.rows) CHECK(row.result.margin >= 1.0);
  auto ms = theorem21_sweep("maxaffine", 2, 3, 5);
  CHECK(ms.violations == 0);
  auto gs = theorem21_sweep("gauge", 2, 3, 5);
  CHECK(gs.violations == 0);
  auto ss = theorem21_sweep("splice", 1, 2, 5);
  CHECK(ss.violations == 0);
  CHECK(sweep_csv(ss).find("index,family") == 0);
  CHECK(to_json(ss)["rows"].size() == 2);
  CHECK_THROWS_AS(sweep_members("nope", 2, 1, 1), InvalidArgument);
}

TEST_CASE("gauge product matches n! |K| |K polar|") {
  auto k = random_polytope(2, 4, 9);
  auto f = build_analytic({{"family", "gauge"}, {"body", body_to_json(k)}});
  auto r = functional_mahler(f);
  const double expect = 2.0 * mahler(k).mahler;
  MESSAGE("random gauge: " << r.product << " vs " << expect << " err " << r.error);
  CHECK(std::abs(r.product - expect) <= 3 * r.error + 0.02 * expect);
}

TEST_CASE("increasing psi_j approach the limit") {
  // psi_j for |x|^2/2 is the Huber function; J(psi_j) increases to J
  auto q = make_quadratic(Mat::Identity(1, 1));
  const double limit = functional_mahler(q).product;
  double last = 0;
  for (double j : {1.0, 2.0, 4.0}) {
    auto psi = approx_sequences(q, j).second;
    auto r = functional_mahler(psi);
    MESSAGE("j=" << j << " J=" << r.product);
    CHECK(r.product <= limit + 1e-6);
    CHECK(r.product >= last - 1e-9);
    last = r.product;
  }
  CHECK(last == doctest::Approx(limit).epsilon(1e-3));
}

TEST_CASE("p-power products against the Gamma-function closed form") {
  auto one = [](double p) { return 2.0 * std::pow(p, 1.0 / p - 1.0) * std::tgamma(1.0 / p); };
  for (double p : {1.5, 3.0, 6.0}) {
    const double q = p / (p - 1);
    for (int n : {1, 2}) {
      const double expect = std::pow(one(p) * one(q), n);
      auto r = functional_mahler(make_ppower(n, p));
      CHECK(std::abs(r.product - expect) <= 3 * r.error + 1e-3 * expect);
    }
  }
}
