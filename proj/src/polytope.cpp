#include "bmk/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "bmk/error.hpp"

namespace bmk {

using Rational = boost::multiprecision::cpp_rational;

double factorial(int n) {
  double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

SymmetricPolytope::SymmetricPolytope(Representation rep, Mat generators) : rep_(rep), generators_(std::move(generators)) {
  if (generators_.rows() == 0 || generators_.cols() == 0) throw InvalidArgument("polytope: empty generator list");
  if (!generators_.allFinite()) throw InvalidArgument("polytope: non-finite generator");
  Eigen::FullPivLU<Mat> lu(generators_);
  if (lu.rank() < generators_.cols()) throw DomainError("polytope: generators do not span R^n (degenerate body)");
  for (Eigen::Index i = 0; i < generators_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < generators_.rows(); ++j) {
      const double scale = 1e-12 * (1.0 + generators_.row(i).cwiseAbs().maxCoeff());
      if ((generators_.row(i) - generators_.row(j)).cwiseAbs().maxCoeff() <= scale ||
          (generators_.row(i) + generators_.row(j)).cwiseAbs().maxCoeff() <= scale)
        throw InvalidArgument("polytope: duplicate generator up to sign");
    }
  }
}

SymmetricPolytope SymmetricPolytope::transformed(const Mat& t) const {
  if (t.rows() != dim() || t.cols() != dim()) throw InvalidArgument("polytope: transform has wrong shape");
  if (rep_ == Representation::kVertex) return {rep_, generators_ * t.transpose()};
  return {rep_, generators_ * t.inverse()};
}

SymmetricPolytope polar(const SymmetricPolytope& k) {
  return {k.rep() == Representation::kVertex ? Representation::kHalfspace : Representation::kVertex, k.generators()};
}

namespace {

// Scalar traits: doubles compare with a tolerance, rationals exactly.
template <typename T>
struct Scalar;

template <>
struct Scalar<double> {
  static bool zero(double v, double tol) { return std::abs(v) <= tol; }
  static double abs(double v) { return std::abs(v); }
  static double from(double v) { return v; }
  static double to_double(double v) { return v; }
};

template <>
struct Scalar<Rational> {
  static bool zero(const Rational& v, double) { return v == 0; }
  static Rational abs(const Rational& v) { return v < 0 ? Rational(-v) : v; }
  static Rational from(double v) { return Rational(v); }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
};

template <typename T>
using Rows = std::vector<std::vector<T>>;

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Solves M w = rhs by Gaussian elimination; nullopt when singular.
template <typename T>
std::optional<std::vector<T>> solve(Rows<T> m, std::vector<T> rhs, double tol) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = n;
    T best = 0;
    for (std::size_t r = c; r < n; ++r) {
      const T a = Scalar<T>::abs(m[r][c]);
      if (!Scalar<T>::zero(a, tol) && (piv == n || a > best)) {
        piv = r;
        best = a;
      }
    }
    if (piv == n) return std::nullopt;
    std::swap(m[c], m[piv]);
    std::swap(rhs[c], rhs[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      if (m[r][c] == 0) continue;
      const T f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<T> x(n);
  for (std::size_t r = n; r-- > 0;) {
    T s = rhs[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= m[r][k] * x[k];
    x[r] = s / m[r][r];
  }
  return x;
}

template <typename T>
T determinant(Rows<T> m, double tol) {
  const std::size_t n = m.size();
  T det = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = n;
    T best = 0;
    for (std::size_t r = c; r < n; ++r) {
      const T a = Scalar<T>::abs(m[r][c]);
      if (piv == n || a > best) {
        piv = r;
        best = a;
      }
    }
    if (Scalar<T>::zero(best, tol * 1e-3)) return T(0);
    if (piv != c) {
      std::swap(m[c], m[piv]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const T f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

template <typename T>
int rank(Rows<T> m, double tol) {
  if (m.empty()) return 0;
  const std::size_t rows = m.size(), cols = m[0].size();
  int rk = 0;
  std::size_t r0 = 0;
  for (std::size_t c = 0; c < cols && r0 < rows; ++c) {
    std::size_t piv = rows;
    T best = 0;
    for (std::size_t r = r0; r < rows; ++r) {
      const T a = Scalar<T>::abs(m[r][c]);
      if (piv == rows || a > best) {
        piv = r;
        best = a;
      }
    }
    if (Scalar<T>::zero(best, tol)) continue;
    std::swap(m[r0], m[piv]);
    for (std::size_t r = r0 + 1; r < rows; ++r) {
      const T f = m[r][c] / m[r0][c];
      for (std::size_t k = c; k < cols; ++k) m[r][k] -= f * m[r0][k];
    }
    ++r0;
    ++rk;
  }
  return rk;
}

template <typename T>
Rows<T> to_rows(const Mat& m) {
  Rows<T> r(static_cast<std::size_t>(m.rows()), std::vector<T>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = Scalar<T>::from(m(i, j));
  return r;
}

Mat to_mat(const Rows<double>& r, int n) {
  Mat m(static_cast<Eigen::Index>(r.size()), n);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (int j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), j) = r[i][j];
  return m;
}

/// All w (one per +- pair) solving n of the equations g_i . w = +-1 while
/// satisfying |g_j . w| <= 1 for every j. For H-rep generators these are
/// the vertices; for V-rep generators the facet normals.
template <typename T>
Rows<T> dual_enumerate(const Rows<T>& gens, double tol) {
  const std::size_t m = gens.size();
  const std::size_t n = gens[0].size();
  if (m < n) throw DomainError("polytope: fewer generators than dimensions");
  Rows<T> out;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  auto same = [&](const std::vector<T>& a, const std::vector<T>& b, T sign) {
    for (std::size_t i = 0; i < n; ++i)
      if (!Scalar<T>::zero(a[i] - sign * b[i], tol * (1.0 + Scalar<T>::to_double(Scalar<T>::abs(a[i]))))) return false;
    return true;
  };
  while (true) {
    Rows<T> sub(n);
    for (std::size_t i = 0; i < n; ++i) sub[i] = gens[pick[i]];
    for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
      std::vector<T> rhs(n, T(1));
      for (std::size_t i = 1; i < n; ++i)
        if (mask & (std::size_t{1} << (i - 1))) rhs[i] = -1;
      auto w = solve<T>(sub, rhs, tol * 1e-3);
      if (!w) break;  // singular for every sign pattern
      bool feasible = true;
      for (const auto& g : gens) {
        const T v = Scalar<T>::abs(dot(g, *w));
        if (v > 1 && !Scalar<T>::zero(v - 1, tol)) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;
      bool dup = false;
      for (const auto& o : out)
        if (same(o, *w, T(1)) || same(o, *w, T(-1))) {
          dup = true;
          break;
        }
      if (!dup) out.push_back(*w);
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == i - 1 + m - n) --i;
    if (i == 0) return out;
    ++pick[i - 1];
    for (std::size_t k = i; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
}

/// Pulling triangulation over explicit point and halfspace sets (both
/// closed under negation); faces are identified by their incident points.
template <typename T>
class Triangulator {
 public:
  Triangulator(Rows<T> points, Rows<T> normals, double tol) : points_(std::move(points)), tol_(tol) {
    const std::size_t n = points_[0].size();
    dim_ = static_cast<int>(n);
    for (const auto& a : normals) {
      std::vector<int> on;
      for (std::size_t p = 0; p < points_.size(); ++p) {
        const T v = dot(a, points_[p]) - 1;
        if (Scalar<T>::zero(v, tol_)) on.push_back(static_cast<int>(p));
      }
      if (!on.empty()) incidence_.push_back(std::move(on));
    }
  }

  T volume() {
    std::vector<int> all(points_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const auto& simplices = triangulate(all, dim_);
    T vol = 0;
    for (const auto& s : simplices) {
      Rows<T> m(static_cast<std::size_t>(dim_), std::vector<T>(static_cast<std::size_t>(dim_)));
      for (int r = 0; r < dim_; ++r)
        for (int c = 0; c < dim_; ++c) m[r][c] = points_[s[r + 1]][c] - points_[s[0]][c];
      vol += Scalar<T>::abs(determinant<T>(m, tol_));
    }
    T fact = 1;
    for (int k = 2; k <= dim_; ++k) fact *= k;
    return vol / fact;
  }

 private:
  int affine_rank(const std::vector<int>& face) const {
    Rows<T> m;
    for (std::size_t i = 1; i < face.size(); ++i) {
      std::vector<T> row(points_[0].size());
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = points_[face[i]][c] - points_[face[0]][c];
      m.push_back(std::move(row));
    }
    return rank<T>(std::move(m), tol_);
  }

  const Rows<int>& triangulate(const std::vector<int>& face, int d) {
    auto it = memo_.find(face);
    if (it != memo_.end()) return it->second;
    Rows<int> out;
    if (d == 0) {
      out.push_back({face[0]});
    } else {
      const int apex = face[0];
      std::set<std::vector<int>> subfaces;
      for (const auto& on : incidence_) {
        std::vector<int> g;
        std::set_intersection(face.begin(), face.end(), on.begin(), on.end(), std::back_inserter(g));
        if (g.size() < static_cast<std::size_t>(d) || g.size() == face.size()) continue;
        if (std::binary_search(g.begin(), g.end(), apex)) continue;
        if (subfaces.count(g)) continue;
        if (affine_rank(g) != d - 1) continue;
        subfaces.insert(std::move(g));
      }
      for (const auto& g : subfaces) {
        for (auto s : triangulate(g, d - 1)) {
          s.insert(s.begin(), apex);
          out.push_back(std::move(s));
        }
      }
    }
    return memo_.emplace(face, std::move(out)).first->second;
  }

  Rows<T> points_;
  std::vector<std::vector<int>> incidence_;
  std::map<std::vector<int>, Rows<int>> memo_;
  double tol_;
  int dim_ = 0;
};

template <typename T>
Rows<T> with_negatives(const Rows<T>& r) {
  Rows<T> out = r;
  for (const auto& v : r) {
    auto neg = v;
    for (auto& x : neg) x = -x;
    out.push_back(std::move(neg));
  }
  return out;
}

template <typename T>
T volume_impl(const SymmetricPolytope& k, double tol) {
  if (k.dim() > 6) throw ResourceError("volume_exact: dimension cap is 6");
  const auto gens = to_rows<T>(k.generators());
  if (k.dim() == 1) {
    T best = 0;
    for (const auto& g : gens) best = std::max<T>(best, Scalar<T>::abs(g[0]));
    return k.rep() == Representation::kVertex ? T(2 * best) : T(T(2) / best);
  }
  Rows<T> dual = dual_enumerate<T>(gens, tol);
  if (k.rep() == Representation::kVertex) return Triangulator<T>(with_negatives(gens), with_negatives(dual), tol).volume();
  return Triangulator<T>(with_negatives(dual), with_negatives(gens), tol).volume();
}

/// Keeps the rows of `cand` whose incident rows of `other` (|c . o| = 1)
/// span an affine set of dimension n-1 after the signs are resolved.
Mat irredundant(const Rows<double>& cand, const Rows<double>& other, int n, double tol, int needed_rank) {
  Rows<double> keep;
  for (const auto& c : cand) {
    Rows<double> on;
    for (const auto& o : other) {
      const double v = dot(c, o);
      if (std::abs(v - 1) <= tol) on.push_back(o);
      if (std::abs(v + 1) <= tol) {
        auto neg = o;
        for (auto& x : neg) x = -x;
        on.push_back(neg);
      }
    }
    if (static_cast<int>(on.size()) < needed_rank) continue;
    if (rank<double>(on, tol) >= needed_rank) keep.push_back(c);
  }
  return to_mat(keep, n);
}

}  // namespace

Mat facet_normals(const SymmetricPolytope& k, double tol) {
  const auto gens = to_rows<double>(k.generators());
  if (k.rep() == Representation::kVertex) return to_mat(dual_enumerate<double>(gens, tol), k.dim());
  const auto verts = dual_enumerate<double>(gens, tol);
  return irredundant(gens, verts, k.dim(), tol, k.dim());
}

Mat vertices(const SymmetricPolytope& k, double tol) {
  const auto gens = to_rows<double>(k.generators());
  if (k.rep() == Representation::kHalfspace) return to_mat(dual_enumerate<double>(gens, tol), k.dim());
  const auto facets = dual_enumerate<double>(gens, tol);
  return irredundant(gens, facets, k.dim(), tol, k.dim());
}

double gauge(const SymmetricPolytope& k, const Vec& x) {
  if (k.rep() == Representation::kHalfspace) return (k.generators() * x).cwiseAbs().maxCoeff();
  Mat a(k.dim(), 2 * k.generators().rows());
  a << k.generators().transpose(), -k.generators().transpose();
  const auto g = lp_min_sum(a, x);
  if (!g) throw NumericError("gauge: l1 program infeasible for a spanning generator set");
  return *g;
}

bool contains(const SymmetricPolytope& k, const Vec& x, double tol) { return gauge(k, x) <= 1.0 + tol; }

double volume_exact(const SymmetricPolytope& k) { return volume_impl<double>(k, 1e-9); }

std::string volume_exact_rational(const SymmetricPolytope& k) { return volume_impl<Rational>(k, 0.0).str(); }

IntegralEstimate volume_mc(const SymmetricPolytope& k, std::uint64_t samples, std::uint64_t seed, int workers) {
  if (samples == 0) throw InvalidArgument("volume_mc: need at least one sample");
  const int n = k.dim();
  Vec half(n);
  if (k.rep() == Representation::kVertex) {
    half = k.generators().cwiseAbs().colwise().maxCoeff().transpose();
  } else {
    half = vertices(k).cwiseAbs().colwise().maxCoeff().transpose();
  }
  const double box = (2.0 * half).prod();
  constexpr std::size_t kShards = 64;
  std::vector<std::uint64_t> hits(kShards, 0);
  parallel_chunks(samples, kShards, workers, [&](std::size_t b, std::size_t e, std::size_t shard) {
    Rng rng(derive_seed(seed, shard));
    Vec x(n);
    std::uint64_t h = 0;
    for (std::size_t s = b; s < e; ++s) {
      for (int i = 0; i < n; ++i) x[i] = half[i] * (2.0 * uniform01(rng) - 1.0);
      if (contains(k, x)) ++h;
    }
    hits[shard] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  IntegralEstimate est;
  est.value = box * p;
  est.error = box * std::sqrt(std::max(p * (1 - p), 1.0 / static_cast<double>(samples)) / static_cast<double>(samples));
  est.count = samples;
  est.seed = seed;
  est.method = "monte-carlo";
  return est;
}

double inradius(const SymmetricPolytope& k) {
  const Mat f = facet_normals(k);
  return 1.0 / f.rowwise().norm().maxCoeff();
}

MahlerResult mahler(const SymmetricPolytope& k, const MahlerOptions& opts) {
  MahlerResult r;
  r.method = opts.method;
  const auto kp = polar(k);
  const int n = k.dim();
  switch (opts.method) {
    case VolumeMethod::kExact:
      r.volume_body = volume_exact(k);
      r.volume_polar = volume_exact(kp);
      r.error = 1e-12 * r.volume_body * r.volume_polar;
      break;
    case VolumeMethod::kRational: {
      const Rational a = volume_impl<Rational>(k, 0.0), b = volume_impl<Rational>(kp, 0.0);
      const Rational m = a * b;
      r.volume_body = a.convert_to<double>();
      r.volume_polar = b.convert_to<double>();
      r.mahler_rational = m.str();
      r.error = 0;
      break;
    }
    case VolumeMethod::kMonteCarlo: {
      const auto a = volume_mc(k, opts.samples, opts.seed, opts.workers);
      const auto b = volume_mc(kp, opts.samples, derive_seed(opts.seed, 0xFACE), opts.workers);
      r.volume_body = a.real();
      r.volume_polar = b.real();
      r.error = a.real() * b.error + b.real() * a.error;
      break;
    }
  }
  r.mahler = r.volume_body * r.volume_polar;
  r.ratio_pi = r.mahler / (std::pow(kPi, n) / factorial(n));
  r.ratio_cube = r.mahler / (std::pow(4.0, n) / factorial(n));
  const double rin = std::min(inradius(k), inradius(kp));
  if (rin < opts.interior_radius_warning)
    r.warnings.push_back("near-degenerate body: inradius " + std::to_string(rin));
  return r;
}

nlohmann::json to_json(const MahlerResult& r) {
  static const char* names[] = {"exact", "mc", "rational"};
  nlohmann::json j = {{"volume_body", r.volume_body}, {"volume_polar", r.volume_polar}, {"mahler", r.mahler},
                      {"method", names[static_cast<int>(r.method)]}, {"error", r.error},
                      {"ratio_pi_n_over_n_factorial", r.ratio_pi}, {"ratio_4_n_over_n_factorial", r.ratio_cube}};
  if (!r.mahler_rational.empty()) j["mahler_rational"] = r.mahler_rational;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

SymmetricPolytope random_polytope(int n, int m, std::uint64_t seed, Representation rep) {
  if (n <= 0 || m < n) throw InvalidArgument("random_polytope: need m >= n >= 1");
  Rng rng(seed);
  Mat g(m, n);
  for (int i = 0; i < m; ++i) {
    Vec d(n);
    do {
      for (int c = 0; c < n; ++c) d[c] = standard_normal(rng);
    } while (d.norm() < 1e-8);
    d.normalize();
    const double radius = 0.5 + 1.5 * uniform01(rng);
    g.row(i) = radius * d.transpose();
  }
  return {rep, g};
}

SymmetricPolytope cube(int n) { return {Representation::kHalfspace, Mat::Identity(n, n)}; }
SymmetricPolytope cross_polytope(int n) { return {Representation::kVertex, Mat::Identity(n, n)}; }

SymmetricPolytope body_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const std::string rep = j.at("rep").get<std::string>();
    if (rep != "V" && rep != "H") throw ParseError("body file: rep must be \"V\" or \"H\"");
    const auto& gens = j.at("generators");
    Mat g(static_cast<Eigen::Index>(gens.size()), n);
    for (std::size_t i = 0; i < gens.size(); ++i) {
      if (static_cast<int>(gens[i].size()) != n) throw ParseError("body file: generator has wrong length");
      for (int c = 0; c < n; ++c) g(static_cast<Eigen::Index>(i), c) = gens[i][c].get<double>();
    }
    return {rep == "V" ? Representation::kVertex : Representation::kHalfspace, g};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("body file: ") + e.what());
  }
}

nlohmann::json body_to_json(const SymmetricPolytope& k) {
  nlohmann::json gens = nlohmann::json::array();
  for (Eigen::Index i = 0; i < k.generators().rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < k.generators().cols(); ++c) row.push_back(k.generators()(i, c));
    gens.push_back(row);
  }
  return {{"n", k.dim()}, {"rep", k.rep() == Representation::kVertex ? "V" : "H"}, {"generators", gens}};
}

// Simplex ----------------------------------------------------------------------

std::optional<double> lp_min_sum(const Mat& a, const Vec& b) {
  const Eigen::Index m = a.rows(), nv = a.cols();
  const Eigen::Index cols = nv + m + 1;
  Mat t = Mat::Zero(m + 1, cols);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = b[i] < 0 ? -1.0 : 1.0;
    t.row(i).head(nv) = s * a.row(i);
    t(i, nv + i) = 1.0;
    t(i, cols - 1) = s * b[i];
    basis[i] = nv + i;
  }
  const double eps = 1e-12 * (1.0 + a.cwiseAbs().maxCoeff());
  auto pivot = [&](Eigen::Index r, Eigen::Index c) {
    t.row(r) /= t(r, c);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    basis[r] = c;
  };
  auto run = [&](Eigen::Index allowed) {
    for (int iter = 0; iter < 10000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (t(m, j) < -eps) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      Eigen::Index leave = -1;
      double best = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, enter) > eps) {
          const double ratio = t(i, cols - 1) / t(i, enter);
          if (leave < 0 || ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) throw NumericError("lp_min_sum: unbounded");
      pivot(leave, enter);
    }
    throw NumericError("lp_min_sum: iteration cap");
  };
  // phase 1
  for (Eigen::Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Eigen::Index i = 0; i < m; ++i) t(m, nv + i) = 0.0;
  run(nv + m);
  if (-t(m, cols - 1) > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) return std::nullopt;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[i] < nv) continue;
    for (Eigen::Index j = 0; j < nv; ++j)
      if (std::abs(t(i, j)) > eps) {
        pivot(i, j);
        break;
      }
  }
  // phase 2: unit costs on the structural variables
  t.row(m).setZero();
  t.row(m).head(nv).setOnes();
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < nv) t.row(m) -= t.row(i);
  run(nv);
  return -t(m, cols - 1);
}

}  // namespace bmk
