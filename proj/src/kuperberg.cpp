#include "bmk/kuperberg.hpp"

#include <algorithm>
#include <cmath>

#include "bmk/error.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

namespace {

unsigned mask_of(const std::vector<int>& s) {
  unsigned m = 0;
  for (int i : s) m |= 1u << i;
  return m;
}

double unit_ball_volume(int n, double p) {
  return std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), n) / std::tgamma(1.0 + n / p);
}

// A point of the parameter sphere with tangent vectors along the angular
// coordinates. `weight` carries orientation (n = 1) and quadrature weight;
// `area` is the unsigned surface element.
struct Direction {
  Vec omega;
  std::vector<Vec> tangents;
  double weight = 0;
  double area = 0;
};

int default_angular(int n, bool bridge) {
  if (n == 2) return bridge ? 256 : 2048;
  if (n == 3) return bridge ? 24 : 48;
  return 1;
}

// The radial integrands are polynomial for the quadratic graph.
int default_radial(double exponent) { return exponent == 2 ? 2 : 8; }

// s -> s + warp sin s, with its derivative
std::pair<double, double> warped(double s, double warp) { return {s + warp * std::sin(s), 1.0 + warp * std::cos(s)}; }

std::vector<Direction> directions(int n, int nodes, double warp) {
  std::vector<Direction> out;
  if (n == 1) {
    for (double sgn : {1.0, -1.0}) out.push_back({Vec::Constant(1, sgn), {}, sgn, 1.0});
    return out;
  }
  if (n == 2) {
    const double h = 2 * kPi / nodes;
    for (int j = 0; j < nodes; ++j) {
      auto [th, dth] = warped(h * (j + 0.5), warp);
      Vec w(2), t(2);
      w << std::cos(th), std::sin(th);
      t << -dth * std::sin(th), dth * std::cos(th);
      out.push_back({w, {t}, h, h * dth});
    }
    return out;
  }
  const GaussRule g = gauss_legendre(static_cast<std::size_t>(nodes), 0.0, kPi);
  const int m = 2 * nodes;
  const double h = 2 * kPi / m;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double th = g.nodes[i];
    for (int j = 0; j < m; ++j) {
      auto [ps, dps] = warped(h * (j + 0.5), warp);
      Vec w(3), tt(3), tp(3);
      w << std::sin(th) * std::cos(ps), std::sin(th) * std::sin(ps), std::cos(th);
      tt << std::cos(th) * std::cos(ps), std::cos(th) * std::sin(ps), -std::sin(th);
      tp << -dps * std::sin(th) * std::sin(ps), dps * std::sin(th) * std::cos(ps), 0.0;
      out.push_back({w, {tt, tp}, g.weights[i] * h, std::sin(th) * dps * g.weights[i] * h});
    }
  }
  return out;
}

void require_dim(int n) {
  if (n < 1 || n > 3) throw InvalidArgument("kuperberg: dimension must be 1, 2 or 3");
}

NVector directed_volume_at(const SmoothBody& k, int nodes, const DirectedVolumeOptions& o) {
  const int n = k.dim();
  const int radial = o.radial_nodes > 0 ? o.radial_nodes : default_radial(o.exponent);
  const GaussRule rad = gauss_legendre(static_cast<std::size_t>(radial), 0.0, 1.0);
  const double e = o.exponent;
  NVector out(n);
  Mat cols(2 * n, n), sub(n, n);
  for (const Direction& d : directions(n, nodes, o.warp)) {
    const double mu = k.gauge(d.omega);
    const Vec g = k.gradient(d.omega);
    const Mat hm = k.hessian(d.omega);
    const Vec u = d.omega / mu;
    std::vector<Vec> du, dg;
    for (const Vec& t : d.tangents) {
      du.push_back(t / mu - d.omega * (g.dot(t) / (mu * mu)));
      dg.push_back(hm * t);
    }
    for (std::size_t ri = 0; ri < rad.nodes.size(); ++ri) {
      const double r = rad.nodes[ri];
      cols.col(0) << u, (e - 1) * std::pow(r, e - 2) * g;
      for (std::size_t j = 0; j < du.size(); ++j) cols.col(static_cast<Eigen::Index>(j) + 1) << r * du[j], std::pow(r, e - 1) * dg[j];
      const double w = rad.weights[ri] * d.weight;
      for (std::size_t b = 0; b < out.size(); ++b) {
        const auto& rows = out.basis()[b];
        for (int m = 0; m < n; ++m) sub.row(m) = cols.row(rows[static_cast<std::size_t>(m)]);
        out[b] += w * sub.determinant();
      }
    }
  }
  return out;
}

double omega_integral_at(const SmoothBody& k, int nodes, int radial, double e) {
  const int n = k.dim();
  const GaussRule rad = gauss_legendre(static_cast<std::size_t>(radial > 0 ? radial : default_radial(e)), 0.0, 1.0);
  std::vector<double> w;
  std::vector<Mat> h;
  for (const Direction& d : directions(n, nodes, 0.0)) {
    const double mu = k.gauge(d.omega);
    const Vec g = k.gradient(d.omega);
    const Mat base = (e - 1) * g * g.transpose() + mu * k.hessian(d.omega);
    const double rho = 1.0 / mu;
    for (std::size_t ri = 0; ri < rad.nodes.size(); ++ri) {
      const double r = rad.nodes[ri];
      w.push_back(d.area * rad.weights[ri] * std::pow(r, n - 1) * std::pow(rho, n));
      h.push_back(std::pow(r, e - 2) * base);
    }
  }
  double total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double row = 0;
    for (std::size_t j = 0; j < w.size(); ++j) row += w[j] * (0.5 * (h[i] + h[j])).determinant();
    total += w[i] * row;
  }
  return total;
}

}  // namespace

double wedge_scale(int n) {
  // signed volume of the cone over the join of two cycles with cone
  // n-vectors a and b is (n!)^2 / (2n)! times a ^ b; the sign is the
  // orientation of the graph pair
  const double f = factorial(n);
  return (n % 2 ? -1.0 : 1.0) * f * f / factorial(2 * n);
}

double omega_scale(int n) { return std::pow(2.0, n) * std::abs(wedge_scale(n)); }

NVector::NVector(int n) : n_(n) {
  if (n < 1 || n > 8) throw InvalidArgument("NVector: dimension must be in 1..8");
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i;
  while (true) {
    basis_.push_back(s);
    int i = n - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == 2 * n - n + i) --i;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j) - 1] + 1;
  }
  coef_.assign(basis_.size(), 0.0);
}

double NVector::coefficient(const std::vector<int>& indices) const {
  const unsigned m = mask_of(indices);
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    if (mask_of(basis_[i]) == m) return coef_[i];
  }
  throw InvalidArgument("NVector: not a basis index set");
}

std::string NVector::label(std::size_t i) const {
  std::string s;
  for (int b : basis_[i]) {
    if (!s.empty()) s += "^";
    s += b < n_ ? "e" + std::to_string(b + 1) : "f" + std::to_string(b - n_ + 1);
  }
  return s;
}

NVector NVector::reflected() const {
  NVector out = *this;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const auto fs = std::count_if(basis_[i].begin(), basis_[i].end(), [&](int b) { return b >= n_; });
    if (fs % 2 == 1) out.coef_[i] = -out.coef_[i];
  }
  return out;
}

NVector& NVector::operator+=(const NVector& o) {
  if (o.n_ != n_) throw InvalidArgument("NVector: dimension mismatch");
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
  return *this;
}

NVector NVector::operator-(const NVector& o) const {
  if (o.n_ != n_) throw InvalidArgument("NVector: dimension mismatch");
  NVector out = *this;
  for (std::size_t i = 0; i < coef_.size(); ++i) out.coef_[i] -= o.coef_[i];
  return out;
}

double NVector::max_abs() const {
  double m = 0;
  for (double c : coef_) m = std::max(m, std::abs(c));
  return m;
}

double wedge_top(const NVector& a, const NVector& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("wedge: dimension mismatch");
  const int n = a.dim();
  const unsigned full = (1u << (2 * n)) - 1;
  double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& s = a.basis()[i];
    const unsigned comp = full & ~mask_of(s);
    std::size_t j = 0;
    while (mask_of(b.basis()[j]) != comp) ++j;
    int inversions = 0;
    for (int x : s) {
      for (int y : b.basis()[j]) inversions += x > y;
    }
    total += (inversions % 2 ? -1.0 : 1.0) * a[i] * b[j];
  }
  return total;
}

nlohmann::json to_json(const NVector& v) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < v.size(); ++i) j[v.label(i)] = v[i];
  return j;
}

double SmoothBody::gauge(const Vec& x) const {
  const Vec y = a * x;
  const double m = y.cwiseAbs().maxCoeff();
  if (m == 0) return 0;
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += std::pow(std::abs(y(i)) / m, p);
  return m * std::pow(s, 1.0 / p);
}

Vec SmoothBody::gradient(const Vec& x) const {
  const double mu = gauge(x);
  if (mu == 0) return Vec::Zero(dim());
  const Vec y = a * x / mu;
  Vec w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) w(i) = std::copysign(std::pow(std::abs(y(i)), p - 1), y(i));
  return a.transpose() * w;
}

Mat SmoothBody::hessian(const Vec& x) const {
  const double mu = gauge(x);
  if (mu == 0) throw DomainError("gauge Hessian is singular at the origin");
  const Vec y = a * x / mu;
  Vec w(y.size()), dg(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    w(i) = std::copysign(std::pow(std::abs(y(i)), p - 1), y(i));
    dg(i) = std::pow(std::abs(y(i)), p - 2);
  }
  const Mat hy = (p - 1) / mu * (Mat(dg.asDiagonal()) - w * w.transpose());
  return a.transpose() * hy * a;
}

SmoothBody SmoothBody::transformed(const Mat& t) const {
  if (t.rows() != dim() || t.cols() != dim()) throw InvalidArgument("transform: shape mismatch");
  Eigen::FullPivLU<Mat> lu(t);
  if (!lu.isInvertible()) throw InvalidArgument("transform: singular matrix");
  return {kind, a * lu.inverse(), p};
}

SmoothBody lp_ball(int n, double p) {
  if (n < 1) throw InvalidArgument("lp ball: n must be positive");
  if (!(p > 1) || !std::isfinite(p)) throw InvalidArgument("lp ball: p must lie in (1, inf)");
  return {"lp", Mat::Identity(n, n), p};
}

SmoothBody ellipsoid(const Vec& semi_axes) {
  if (semi_axes.size() < 1 || (semi_axes.array() <= 0).any()) throw InvalidArgument("ellipsoid: axes must be positive");
  return {"ellipsoid", Mat(semi_axes.cwiseInverse().asDiagonal()), 2.0};
}

SmoothBody smoothed_polytope(const SymmetricPolytope& k, double q) {
  if (!(q > 1) || !std::isfinite(q)) throw InvalidArgument("smoothed polytope: q must lie in (1, inf)");
  return {"polytope", facet_normals(k), q};
}

nlohmann::json to_json(const SmoothBody& b) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < b.a.rows(); ++i) {
    std::vector<double> r;
    for (Eigen::Index j = 0; j < b.a.cols(); ++j) r.push_back(b.a(i, j));
    rows.push_back(r);
  }
  return {{"kind", b.kind}, {"n", b.dim()}, {"p", b.p}, {"matrix", rows}};
}

DirectedVolume directed_volume(const SmoothBody& k, const DirectedVolumeOptions& opts) {
  const int n = k.dim();
  require_dim(n);
  if (!(opts.exponent >= 2)) throw InvalidArgument("directed volume: exponent must be at least 2");
  if (!(std::abs(opts.warp) < 1)) throw InvalidArgument("directed volume: |warp| must be below 1");
  if (opts.radial_nodes < 0) throw InvalidArgument("directed volume: radial_nodes must be non-negative");
  const int nodes = opts.angular_nodes > 0 ? opts.angular_nodes : default_angular(n, false);
  DirectedVolume out{directed_volume_at(k, nodes, opts), 0.0};
  if (n > 1) out.error = (out.value - directed_volume_at(k, std::max(2, nodes / 2), opts)).max_abs();
  for (std::size_t i = 0; i < out.value.size(); ++i) {
    if (!std::isfinite(out.value[i])) throw NumericError("directed volume: non-finite minor integral");
  }
  return out;
}

BodyMahler smooth_body_mahler(const SmoothBody& k, const DirectedVolume& dv) {
  const int n = k.dim();
  if (k.a.rows() == k.a.cols()) {
    return {unit_ball_volume(n, k.p) * unit_ball_volume(n, k.p / (k.p - 1)), 0.0, "closed-form"};
  }
  const double vk = dv.value[0], vp = dv.value[dv.value.size() - 1];
  return {vk * vp, dv.error * (std::abs(vk) + std::abs(vp) + dv.error), "directed-volume"};
}

KuperbergResult kuperberg_v(const SmoothBody& k, const DirectedVolumeOptions& opts) {
  const int n = k.dim();
  const DirectedVolume dv = directed_volume(k, opts);
  KuperbergResult r;
  r.plus = dv.value;
  r.minus = dv.value.reflected();
  r.raw = wedge_top(r.plus, r.minus);
  const double scale = wedge_scale(n);
  r.v = scale * r.raw;
  if (n > 1) {
    const int nodes = opts.angular_nodes > 0 ? opts.angular_nodes : default_angular(n, false);
    const NVector half = directed_volume_at(k, std::max(2, nodes / 2), opts);
    r.error = std::abs(r.v - scale * wedge_top(half, half.reflected()));
  }
  r.mahler = smooth_body_mahler(k, dv);
  r.lower = std::pow(kPi, n) / factorial(n);
  // rounding floor so that V = M (ellipsoids) is not flagged
  const double eps = std::max(r.error + r.mahler.error, 1e-12 * r.mahler.value);
  r.sandwich = r.v >= r.lower - 3 * eps && r.v <= r.mahler.value + 3 * eps;
  return r;
}

nlohmann::json to_json(const KuperbergResult& r) {
  return {{"V", r.v},
          {"raw_wedge", r.raw},
          {"error", r.error},
          {"directed_volume_plus", to_json(r.plus)},
          {"directed_volume_minus", to_json(r.minus)},
          {"mahler", r.mahler.value},
          {"mahler_error", r.mahler.error},
          {"mahler_method", r.mahler.method},
          {"lower_bound", r.lower},
          {"sandwich", r.sandwich}};
}

BridgeReport bridge_check(const SmoothBody& k, const BridgeOptions& bopts, const DirectedVolumeOptions& opts) {
  const int n = k.dim();
  BridgeReport b;
  b.kuperberg = kuperberg_v(k, opts);
  const int nodes = bopts.angular_nodes > 0 ? bopts.angular_nodes : default_angular(n, true);
  b.omega_integral = omega_integral_at(k, nodes, bopts.radial_nodes, opts.exponent);
  if (n > 1) {
    b.omega_error = std::abs(b.omega_integral - omega_integral_at(k, std::max(2, nodes / 2), bopts.radial_nodes, opts.exponent));
  }
  const double scale = std::pow(2.0, -n);
  const double v = b.kuperberg.v;
  b.rhs = scale * b.omega_integral;
  b.deviation = std::abs(v - b.rhs) / std::abs(v);
  b.calibrated_deviation = std::abs(v - omega_scale(n) * b.omega_integral) / std::abs(v);
  b.tolerance = bopts.tolerance;
  const double err = 3 * (b.kuperberg.error + scale * b.omega_error);
  b.pass = std::abs(v - b.rhs) <= std::max(bopts.tolerance * std::abs(v), err);
  return b;
}

nlohmann::json to_json(const BridgeReport& r) {
  return {{"kuperberg", to_json(r.kuperberg)},
          {"omega_integral", r.omega_integral},
          {"omega_error", r.omega_error},
          {"rhs", r.rhs},
          {"deviation", r.deviation},
          {"calibrated_deviation", r.calibrated_deviation},
          {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

SmoothedPolytopeReport kuperberg_smoothed_polytope(const SymmetricPolytope& k, const std::vector<double>& q,
                                                   const DirectedVolumeOptions& opts) {
  if (q.empty()) throw DomainError("polytope gauge is not smooth: supply smoothing exponents q");
  SmoothedPolytopeReport r;
  r.q = q;
  for (double qi : q) r.results.push_back(kuperberg_v(smoothed_polytope(k, qi), opts));
  if (q.size() == 1) {
    r.extrapolated = r.results[0].v;
  } else {
    Mat x(static_cast<Eigen::Index>(q.size()), 2);
    Vec y(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) << 1.0, 1.0 / q[i];
      y(static_cast<Eigen::Index>(i)) = r.results[i].v;
    }
    r.extrapolated = x.colPivHouseholderQr().solve(y)(0);
  }
  r.polytope_mahler = mahler(k);
  return r;
}

nlohmann::json to_json(const SmoothedPolytopeReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.q.size(); ++i) {
    nlohmann::json row = to_json(r.results[i]);
    row["q"] = r.q[i];
    rows.push_back(row);
  }
  return {{"smoothings", rows}, {"extrapolated_V", r.extrapolated}, {"polytope_mahler", to_json(r.polytope_mahler)}};
}

SmoothBody smooth_body_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) throw ParseError("body: expected an object with \"type\"");
  const std::string type = j.at("type").get<std::string>();
  SmoothBody b;
  if (type == "lp") {
    b = lp_ball(j.at("n").get<int>(), j.at("p").get<double>());
  } else if (type == "ellipsoid") {
    const auto axes = j.at("axes").get<std::vector<double>>();
    b = ellipsoid(Eigen::Map<const Vec>(axes.data(), static_cast<Eigen::Index>(axes.size())));
  } else if (type == "polytope") {
    if (!j.contains("q")) throw DomainError("polytope gauge is not smooth: supply a smoothing exponent q");
    b = smoothed_polytope(body_from_json(j.at("body")), j.at("q").get<double>());
  } else {
    throw ParseError("body: unknown type \"" + type + "\"");
  }
  if (j.contains("transform")) {
    const auto rows = j.at("transform").get<std::vector<std::vector<double>>>();
    Mat t(static_cast<Eigen::Index>(rows.size()), b.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != b.dim()) throw ParseError("body: transform row length mismatch");
      for (int c = 0; c < b.dim(); ++c) t(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
    b = b.transformed(t);
  }
  return b;
}

}  // namespace bmk
