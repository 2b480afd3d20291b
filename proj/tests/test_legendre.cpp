#include <doctest.h>

#include <cmath>
#include <random>

#include "bmk/legendre.hpp"
#include "bmk/quadrature.hpp"

using namespace bmk;

namespace {

GridFunction sample1d(double lo, double hi, std::size_t count, const std::function<double(double)>& f,
                      Smoothness s = Smoothness::kGridSampled) {
  GridAxis a{lo, hi, count};
  std::vector<ExtendedReal> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(f(a.node(i)));
  return GridFunction({a}, v, false, s);
}

double max_dev(const GridFunction& a, const GridFunction& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i].value() - b.values()[i].value()));
  return d;
}

GridFunction random_convex_1d(Rng& rng, std::size_t count) {
  // cumulative sums of sorted random slopes
  std::vector<double> slopes(count - 1);
  for (auto& s : slopes) s = 6.0 * uniform01(rng) - 3.0;
  std::sort(slopes.begin(), slopes.end());
  GridAxis a{-2.0, 2.0, count};
  std::vector<ExtendedReal> v;
  double y = uniform01(rng);
  v.push_back(y);
  for (double s : slopes) {
    y += s * a.step();
    v.push_back(y);
  }
  return GridFunction({a}, v);
}

}  // namespace

TEST_CASE("quadratic is self-dual on a fine grid") {
  GridFunction f = sample1d(-4, 4, 2001, [](double x) { return 0.5 * x * x; });
  GridAxis d{-2, 2, 401};
  GridFunction c = conjugate_bruteforce(f, {d});
  const double bound = conjugate_error_bound(f, {d});
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double xi = d.node(i);
    CHECK(std::abs(c.values()[i].value() - 0.5 * xi * xi) <= bound);
  }
}

TEST_CASE("norm conjugates to an indicator pattern") {
  GridFunction f = sample1d(-3, 3, 601, [](double x) { return std::abs(x); });
  GridAxis d{-2, 2, 41};
  GridFunction c = conjugate_bruteforce(f, {d});
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double xi = d.node(i);
    const double expect = std::abs(xi) <= 1 ? 0.0 : 3.0 * (std::abs(xi) - 1.0);
    CHECK(c.values()[i].value() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("cosh closed form") {
  GridFunction f = sample1d(-4, 4, 8001, [](double x) { return std::cosh(x); }, Smoothness::kSmooth);
  GridAxis d{-5, 5, 101};
  ConjugateOptions o;
  o.refine = true;
  GridFunction c = conjugate_nd(f, {d}, o);
  GridFunction raw = conjugate_bruteforce(f, {d});
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double xi = d.node(i);
    const double expect = xi * std::asinh(xi) - std::sqrt(1 + xi * xi);
    CHECK(std::abs(c.values()[i].value() - expect) < 1e-8);
    CHECK(std::abs(raw.values()[i].value() - expect) < 1e-4);
  }
}

TEST_CASE("fast 1D equals the oracle") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 5 + rng() % 2000;
    GridFunction f = random_convex_1d(rng, n);
    GridAxis d{-4, 4, 1 + rng() % 1500};
    CHECK(max_dev(conjugate_fast_1d(f, d), conjugate_bruteforce(f, {d})) <= 1e-12);
  }
  // non-convex input: the envelope has the same conjugate
  GridFunction w = sample1d(-2, 2, 401, [](double x) { return std::sin(5 * x) + x * x; });
  GridAxis d{-6, 6, 301};
  CHECK(max_dev(conjugate_fast_1d(w, d), conjugate_bruteforce(w, {d})) <= 1e-12);
}

TEST_CASE("fast 1D spec examples") {
  GridFunction f = sample1d(-3, 3, 601, [](double x) { return std::max(std::abs(x) - 1.0, 0.0); });
  GridAxis d{-1, 1, 21};
  GridFunction c = conjugate_fast_1d(f, d);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.values()[i].value() == doctest::Approx(std::abs(d.node(i))));
  GridFunction aff = sample1d(-1, 1, 11, [](double x) { return 2 * x; });
  GridAxis d2{-4, 4, 5};
  GridFunction c2 = conjugate_fast_1d(aff, d2);
  CHECK(c2.values()[3].value() == doctest::Approx(0.0));
  CHECK(c2.values()[0].value() > 5.0);
}

TEST_CASE("infinite values and identically infinite input") {
  GridAxis a{-2, 2, 5};
  std::vector<ExtendedReal> v = {ExtendedReal::infinity(), 1.0, 0.0, 1.0, ExtendedReal::infinity()};
  GridFunction f({a}, v);
  GridAxis d{-1, 1, 3};
  CHECK(max_dev(conjugate_fast_1d(f, d), conjugate_bruteforce(f, {d})) == 0.0);
  GridFunction e({a}, std::vector<ExtendedReal>(5, ExtendedReal::infinity()));
  CHECK_THROWS_AS(conjugate_fast_1d(e, d), DomainError);
  CHECK_THROWS_AS(conjugate_bruteforce(e, {d}), DomainError);
}

TEST_CASE("n-D transform matches the oracle") {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    Mat a(4, 2);
    Vec b(4);
    for (int i = 0; i < 4; ++i) {
      a(i, 0) = 2 * uniform01(rng) - 1;
      a(i, 1) = 2 * uniform01(rng) - 1;
      b(i) = uniform01(rng);
    }
    GridFunction f = sample_to_grid(make_max_affine(a, b), symmetric_axes(2, 2.0, 21));
    auto dual = symmetric_axes(2, 1.5, 21);
    CHECK(max_dev(conjugate_nd(f, dual), conjugate_bruteforce(f, dual)) <= 1e-10);
  }
  // with +inf entries: indicator of a square inside the box
  GridFunction ind = sample_to_grid(make_polytope_indicator(Mat::Identity(2, 2)), symmetric_axes(2, 2.0, 9));
  auto dual = symmetric_axes(2, 3.0, 7);
  CHECK(max_dev(conjugate_nd(ind, dual), conjugate_bruteforce(ind, dual)) <= 1e-12);
}

TEST_CASE("n-D quadratic and p-power") {
  GridFunction q = sample_to_grid(make_quadratic(Mat::Identity(2, 2)), symmetric_axes(2, 4.0, 201));
  auto dual = symmetric_axes(2, 2.0, 41);
  ConjugateOptions o;
  o.refine = true;
  GridFunction c = conjugate_nd(q, dual, o);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::abs(c.values()[i].value() - 0.5 * c.node(i).squaredNorm()) < 1e-12);
  }
  GridFunction p = sample_to_grid(make_ppower(2, 3.0), symmetric_axes(2, 3.0, 301));
  GridFunction cp = conjugate_nd(p, dual);
  const double bound = conjugate_error_bound(p, dual);
  for (std::size_t i = 0; i < cp.size(); ++i) {
    Vec xi = cp.node(i);
    double e = 0;
    for (double v : xi) e += std::pow(std::abs(v), 1.5) / 1.5;
    CHECK(std::abs(cp.values()[i].value() - e) <= bound);
  }
}

TEST_CASE("node cap") {
  GridFunction q = sample_to_grid(make_quadratic(Mat::Identity(2, 2)), symmetric_axes(2, 1.0, 11));
  ConjugateOptions o;
  o.node_cap = 100;
  CHECK_THROWS_AS(conjugate_nd(q, symmetric_axes(2, 1.0, 11), o), ResourceError);
}

TEST_CASE("worker count does not change the result") {
  GridFunction q = sample_to_grid(make_ppower(2, 1.5), symmetric_axes(2, 2.0, 41));
  auto dual = symmetric_axes(2, 2.0, 41);
  ConjugateOptions o1, o4;
  o4.workers = 4;
  CHECK(max_dev(conjugate_nd(q, dual, o1), conjugate_nd(q, dual, o4)) == 0.0);
}

TEST_CASE("biconjugation gives the convex envelope") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    GridFunction f = random_convex_1d(rng, 201);
    ConjugatePair p = conjugate_pair(f);
    const double bound = p.sup_error_bound + conjugate_error_bound(p.dual, f.axes());
    GridFunction bb = conjugate_nd(p.dual, f.axes());
    CHECK(max_dev(bb, f) <= 2 * bound);
  }
}

TEST_CASE("order reversal, evenness and Fenchel-Young") {
  auto axes = symmetric_axes(1, 3.0, 301);
  GridFunction f = sample_to_grid(make_quadratic(Mat::Identity(1, 1)), axes);
  GridFunction g = sample_to_grid(make_ppower(1, 4.0), axes);
  std::vector<ExtendedReal> mx;
  for (std::size_t i = 0; i < f.size(); ++i) mx.push_back(max(f.values()[i], g.values()[i]));
  GridFunction h(axes, mx, true);
  auto dual = symmetric_axes(1, 2.0, 101);
  GridFunction cf = conjugate_nd(f, dual), ch = conjugate_nd(h, dual);
  for (std::size_t i = 0; i < cf.size(); ++i) {
    CHECK(ch.values()[i] <= cf.values()[i]);
    CHECK(cf.values()[i] == cf.values()[cf.size() - 1 - i]);
  }
  ConvexFunction ch_fn = make_cosh(2);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Vec x(2);
    x << 2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1;
    const Vec xi = ch_fn.gradient(x);
    CHECK(std::abs(ch_fn.value(x) + conjugate_value(ch_fn, xi).value() - x.dot(xi)) < 1e-12);
  }
  Vec xi(2);
  xi << 0.3, -0.7;
  Vec arg;
  CHECK(conjugate_value(ch_fn, xi, &arg).value() == doctest::Approx(ch_fn.closed_form_conjugate(xi).value()));
  Vec far(1);
  far << 2.0;
  CHECK(conjugate_value(make_softabs(1, 1.0), far).is_infinite());
}

TEST_CASE("approximation sequences") {
  ConvexFunction absf = make_ppower(1, 1.0 + 1e-12);
  auto [phi, psi] = approx_sequences(make_max_affine(Mat::Identity(1, 1), Vec::Zero(1)), 10);
  Vec x(1);
  x << 1.0;
  CHECK(phi.value(x) == doctest::Approx(1.0));
  auto q = make_quadratic(Mat::Identity(1, 1));
  auto [qphi, qpsi] = approx_sequences(q, 2);
  CHECK(qpsi.value(x) == doctest::Approx(0.5));
  x << 5.0;
  // sup_{|xi|<2} 5 xi - xi^2/2 = 10 - 2
  CHECK(qpsi.value(x) == doctest::Approx(8.0).epsilon(1e-9));
  auto q2 = make_quadratic(Mat::Identity(2, 2));
  auto [p5a, p5] = approx_sequences(q2, 5);
  auto [p10a, p10] = approx_sequences(q2, 10);
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    Vec y(2);
    y << 30 * uniform01(rng) - 15, 30 * uniform01(rng) - 15;
    const double a = p5.value(y), b = p10.value(y), c = q2.value(y);
    CHECK(a <= b + 1e-9);
    CHECK(b <= c + 1e-9);
    if (y.norm() > 5) CHECK(a == doctest::Approx(5 * y.norm() - 12.5).epsilon(1e-6));
  }
  CHECK_THROWS_AS(approx_sequences(q, 0), InvalidArgument);
  (void)absf;
}

TEST_CASE("monotone conjugate families") {
  auto axes = symmetric_axes(1, 4.0, 161);
  auto dual = symmetric_axes(1, 1.5, 61);
  std::vector<GridFunction> fam;
  for (int j = 1; j <= 6; ++j) {
    std::vector<ExtendedReal> v;
    for (std::size_t i = 0; i < axes[0].count; ++i) {
      const double x = axes[0].node(i);
      v.push_back(0.5 * x * x + 1.0 / j);
    }
    fam.emplace_back(axes, v, true);
  }
  GridFunction lim = sample_to_grid(make_quadratic(Mat::Identity(1, 1)), axes);
  auto r = check_monotone_conjugates(fam, dual, lim, 0.2);
  CHECK(r.primal_direction == MonotoneFamilyReport::Direction::kDecreasing);
  CHECK(r.conjugates_monotone);
  CHECK(r.limit_deviation == doctest::Approx(1.0 / 6));
  std::vector<GridFunction> con(3, lim);
  auto rc = check_monotone_conjugates(con, dual);
  CHECK(rc.primal_direction == MonotoneFamilyReport::Direction::kConstant);
  CHECK(rc.pass);
  std::vector<GridFunction> bad = {fam[0], fam[2], fam[1]};
  CHECK_THROWS_AS(check_monotone_conjugates(bad, dual), InvalidArgument);
}
