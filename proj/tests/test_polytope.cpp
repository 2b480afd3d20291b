#include <cmath>

#include "bmk/error.hpp"
#include "bmk/polytope.hpp"
#include "doctest.h"

using namespace bmk;

namespace {

Mat hexagon() {
  Mat g(3, 2);
  for (int k = 0; k < 3; ++k) g.row(k) << std::cos(k * kPi / 3), std::sin(k * kPi / 3);
  return g;
}

// Shoelace area of the polygon conv(+-v_i); vertices sorted by angle.
double shoelace(const Mat& gens) {
  std::vector<Vec> pts;
  for (Eigen::Index i = 0; i < gens.rows(); ++i) {
    pts.push_back(gens.row(i).transpose());
    pts.push_back(-gens.row(i).transpose());
  }
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]); });
  double a = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % pts.size()];
    a += p[0] * q[1] - p[1] * q[0];
  }
  return 0.5 * std::abs(a);
}

bool same_generators(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < b.rows() && !found; ++j)
      found = (a.row(i) - b.row(j)).cwiseAbs().maxCoeff() < tol || (a.row(i) + b.row(j)).cwiseAbs().maxCoeff() < tol;
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("polar swaps representation") {
  const auto c = cube(3);
  const auto p = polar(c);
  CHECK(p.rep() == Representation::kVertex);
  CHECK(p.generators().isApprox(Mat::Identity(3, 3)));
  CHECK(volume_exact(p) == doctest::Approx(8.0 / 6.0).epsilon(1e-12));

  const SymmetricPolytope seg(Representation::kHalfspace, Mat::Constant(1, 1, 1.0));
  CHECK(volume_exact(seg) == doctest::Approx(2.0));
  CHECK(volume_exact(polar(seg)) == doctest::Approx(2.0));
}

TEST_CASE("hexagon: bipolar and shoelace") {
  const SymmetricPolytope hex(Representation::kVertex, hexagon());
  const auto h = polar(hex);
  CHECK(h.rep() == Representation::kHalfspace);
  CHECK(same_generators(polar(h).generators(), hex.generators(), 1e-9));
  CHECK(volume_exact(hex) == doctest::Approx(3 * std::sqrt(3.0) / 2).epsilon(1e-12));
  CHECK(volume_exact(hex) == doctest::Approx(shoelace(hexagon())).epsilon(1e-12));
  // vertices of the H-rep hexagon are its facet normals' polars
  const auto fv = facet_normals(hex);
  CHECK(fv.rows() == 3);
}

TEST_CASE("cube and cross-polytope volumes") {
  for (int n = 1; n <= 6; ++n) {
    CAPTURE(n);
    CHECK(volume_exact(cube(n)) == doctest::Approx(std::pow(2.0, n)).epsilon(1e-12));
    CHECK(volume_exact(cross_polytope(n)) == doctest::Approx(std::pow(2.0, n) / factorial(n)).epsilon(1e-12));
  }
  CHECK(volume_exact_rational(cube(4)) == "16");
  CHECK(volume_exact_rational(cross_polytope(4)) == "2/3");
}

TEST_CASE("Monte-Carlo volume agrees within 3 sigma") {
  const auto sq = volume_mc(cube(2), 1'000'000, 7);
  CHECK(std::abs(sq.real() - 4.0) <= 3 * sq.error);
  const auto cr = volume_mc(cross_polytope(3), 200'000, 11);
  CHECK(std::abs(cr.real() - 8.0 / 6.0) <= 3 * cr.error);
  const auto hx = volume_mc(SymmetricPolytope(Representation::kVertex, hexagon()), 200'000, 3);
  CHECK(std::abs(hx.real() - 3 * std::sqrt(3.0) / 2) <= 3 * hx.error);
}

TEST_CASE("Mahler volume of the cube and the segment") {
  const auto r = mahler(cube(3), {.method = VolumeMethod::kRational});
  CHECK(r.mahler_rational == "32/3");
  CHECK(r.ratio_cube == doctest::Approx(1.0));
  const SymmetricPolytope seg(Representation::kVertex, Mat::Constant(1, 1, 1.0));
  CHECK(mahler(seg).mahler == doctest::Approx(4.0));
}

TEST_CASE("random 2D body: exact vs MC, bound") {
  const auto k = random_polytope(2, 8, 42);
  const auto ex = mahler(k);
  const auto mc = mahler(k, {.method = VolumeMethod::kMonteCarlo, .samples = 400'000, .seed = 5});
  CHECK(ex.mahler >= kPi * kPi / 2);
  CHECK(std::abs(ex.mahler - mc.mahler) <= 3 * mc.error);
  CHECK(volume_exact(k) == doctest::Approx(shoelace(vertices(k))).epsilon(1e-10));
}

TEST_CASE("linear invariance") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 3;
    const auto k = random_polytope(n, n + 3, 100 + trial);
    Mat t(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t(i, j) = standard_normal(rng);
    t += 2.0 * Mat::Identity(n, n);
    const auto tk = k.transformed(t);
    CHECK(volume_exact(tk) == doctest::Approx(std::abs(t.determinant()) * volume_exact(k)).epsilon(1e-8));
    CHECK(mahler(tk).mahler == doctest::Approx(mahler(k).mahler).epsilon(1e-6));
  }
}

TEST_CASE("polar reverses inclusion") {
  // K = cube scaled by 1/2 inside L = cube: L° inside K°
  const SymmetricPolytope k(Representation::kHalfspace, 2.0 * Mat::Identity(2, 2));
  const auto l = cube(2);
  Rng rng(9);
  for (int s = 0; s < 2000; ++s) {
    Vec x(2);
    x << 4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2;
    if (contains(k, x)) CHECK(contains(l, x));
    if (contains(polar(l), x)) CHECK(contains(polar(k), x));
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(SymmetricPolytope(Representation::kVertex, Mat::Zero(1, 2)), DomainError);
  Mat dup(3, 2);
  dup << 1, 0, -1, 0, 0, 1;
  CHECK_THROWS_AS(SymmetricPolytope(Representation::kVertex, dup), InvalidArgument);
  CHECK_THROWS_AS(volume_exact(cube(7)), ResourceError);
}

TEST_CASE("l1 program gauge") {
  const auto x = cross_polytope(3);
  Vec p(3);
  p << 0.2, -0.3, 0.1;
  CHECK(gauge(x, p) == doctest::Approx(0.6));
  CHECK(contains(x, p));
  p << 0.5, -0.6, 0.0;
  CHECK_FALSE(contains(x, p));
}
