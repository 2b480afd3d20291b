#include "bmk/contour.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmk/error.hpp"
#include "bmk/functional_mahler.hpp"
#include "bmk/legendre.hpp"

namespace bmk {

namespace {

constexpr std::size_t kChunks = 64;

struct Sums {
  Complex fine{0, 0}, coarse{0, 0};
  double fine_abs = 0, coarse_abs = 0;
  double boundary = 0;  // largest |value| on the box boundary
  std::size_t count = 0, failures = 0;
};

// Node value, or nothing when the point could not be evaluated. `warm` is a
// per-chunk hint carried along the last axis.
using NodeFn = std::function<std::optional<Complex>(const Vec&, std::optional<Vec>&)>;

Sums tensor_sums(const std::vector<GridAxis>& axes, const NodeFn& f, int workers) {
  const std::size_t d = axes.size();
  std::vector<std::vector<double>> wf(d), wc(d);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t c = axes[k].count, cc = (c + 1) / 2;
    for (std::size_t i = 0; i < c; ++i) {
      wf[k].push_back(trapezoid_weight(i, c, axes[k].step()));
      wc[k].push_back(i % 2 == 0 ? trapezoid_weight(i / 2, cc, 2.0 * axes[k].step()) : 0.0);
    }
  }
  const std::size_t total = node_count(axes);
  std::vector<Sums> part(kChunks);
  parallel_chunks(total, kChunks, workers, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    Sums& s = part[chunk];
    std::vector<std::size_t> idx(d);
    std::size_t rest = begin;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rest % axes[k].count;
      rest /= axes[k].count;
    }
    std::optional<Vec> warm;
    Vec point(d);
    for (std::size_t flat = begin; flat < end; ++flat) {
      double w = 1, c = 1;
      bool boundary = false;
      for (std::size_t k = 0; k < d; ++k) {
        point(k) = axes[k].node(idx[k]);
        w *= wf[k][idx[k]];
        c *= wc[k][idx[k]];
        boundary = boundary || idx[k] == 0 || idx[k] + 1 == axes[k].count;
      }
      if (idx[d - 1] == 0) warm.reset();
      ++s.count;
      if (auto v = f(point, warm)) {
        s.fine += w * *v;
        s.coarse += c * *v;
        s.fine_abs += w * std::abs(*v);
        s.coarse_abs += c * std::abs(*v);
        if (boundary) s.boundary = std::max(s.boundary, std::abs(*v));
      } else {
        ++s.failures;
      }
      for (std::size_t k = d; k-- > 0;) {
        if (++idx[k] < axes[k].count) break;
        idx[k] = 0;
      }
    }
  });
  Sums out;
  for (const Sums& s : part) {
    out.fine += s.fine;
    out.coarse += s.coarse;
    out.fine_abs += s.fine_abs;
    out.coarse_abs += s.coarse_abs;
    out.boundary = std::max(out.boundary, s.boundary);
    out.count += s.count;
    out.failures += s.failures;
  }
  return out;
}

std::vector<Vec> probes(int d) {
  std::vector<Vec> dirs;
  for (int i = 0; i < d; ++i) dirs.push_back(Vec::Unit(d, i));
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (double sgn : {1.0, -1.0}) {
        Vec u = Vec::Zero(d);
        u(i) = 1;
        u(j) = sgn;
        dirs.push_back(u.normalized());
      }
    }
  }
  Rng rng(2024);
  for (int k = 0; k < 32 * d; ++k) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u(i) = standard_normal(rng);
    dirs.push_back(u.normalized());
  }
  return dirs;
}

// Per-axis half-widths of the region where `decay` (>= 0, 0 at the origin)
// stays below `rise`, probed along rays.
std::vector<double> decay_box(int d, double rise, const std::function<double(const Vec&)>& decay) {
  std::vector<double> half(d, 0.0);
  for (const Vec& u : probes(d)) {
    double hi = 0.5;
    while (decay(hi * u) < rise) {
      hi *= 2;
      if (hi > 1e4) throw DomainError("contour: integrand does not decay along a ray");
    }
    double lo = 0;
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (lo + hi);
      (decay(mid * u) < rise ? lo : hi) = mid;
    }
    for (int k = 0; k < d; ++k) half[k] = std::max(half[k], hi * std::abs(u(k)));
  }
  return half;
}

void require_admissible(const ConvexFunction& phi, bool deformable) {
  if (phi.flags().smoothness != Smoothness::kSmooth) throw DomainError("contour: phi must be smooth");
  const GrowthClass g = phi.flags().growth.kind;
  if (deformable && g != GrowthClass::kQuadraticAtInfinity) {
    throw DomainError("contour: deformation endpoints must be quadratic at infinity");
  }
  if (g != GrowthClass::kQuadraticAtInfinity && g != GrowthClass::kSuperlinear) {
    throw DomainError("contour: phi must be superlinear");
  }
}

std::optional<LambdaPoint> try_invert(const ConvexFunction& phi, const Vec& t, const Vec& s, std::optional<Vec>& warm) {
  InvertOptions io;
  io.start = warm;
  try {
    LambdaPoint p = invert_pi(phi, t, s, io);
    warm = p.x;
    return p;
  } catch (const NumericError&) {
  }
  if (warm) {
    io.start.reset();
    try {
      LambdaPoint p = invert_pi(phi, t, s, io);
      warm = p.x;
      return p;
    } catch (const NumericError&) {
    }
  }
  warm.reset();
  return std::nullopt;
}

// Piecewise-constant density on a 1D grid, sampled through its CDF.
struct AxisSampler {
  GridAxis axis;
  std::vector<double> cdf;   // cumulative cell masses, normalized
  std::vector<double> dens;  // density per cell

  AxisSampler(const GridAxis& a, const std::vector<double>& profile) : axis(a) {
    const double h = a.step();
    double total = 0;
    std::vector<double> mass(a.count - 1);
    for (std::size_t i = 0; i + 1 < a.count; ++i) {
      mass[i] = 0.5 * h * (profile[i] + profile[i + 1]);
      total += mass[i];
    }
    double run = 0;
    for (std::size_t i = 0; i + 1 < a.count; ++i) {
      run += mass[i] / total;
      cdf.push_back(run);
      dens.push_back(mass[i] / (total * h));
    }
    cdf.back() = 1.0;
  }

  // Returns the coordinate and its density.
  std::pair<double, double> draw(Rng& rng) const {
    const double u = uniform01(rng);
    const std::size_t cell = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
    const double x = axis.node(cell) + uniform01(rng) * axis.step();
    return {x, dens[cell]};
  }
};

IntegralEstimate estimate_from(Complex fine, Complex coarse, std::size_t count, const std::string& method) {
  IntegralEstimate e;
  e.value = fine;
  e.error = std::abs(fine - coarse);
  e.count = count;
  e.method = method;
  return e;
}

}  // namespace

Complex integrand(const LambdaPoint& p) {
  const double re = p.x.dot(p.xi) + p.y.dot(p.eta);
  const double im = p.y.dot(p.xi) - p.x.dot(p.eta);
  return std::exp(Complex(-0.5 * re, -0.5 * im));
}

ContourMethod contour_method_from_string(const std::string& s) {
  if (s == "ts") return ContourMethod::kTs;
  if (s == "xy") return ContourMethod::kXy;
  if (s == "mc" || s == "monte-carlo") return ContourMethod::kMonteCarlo;
  throw InvalidArgument("contour: unknown method '" + s + "' (ts, xy, mc)");
}

std::string to_string(ContourMethod m) {
  switch (m) {
    case ContourMethod::kTs: return "ts";
    case ContourMethod::kXy: return "xy";
    case ContourMethod::kMonteCarlo: return "mc";
  }
  return "?";
}

std::size_t default_contour_nodes(int n, ContourMethod m) {
  switch (n) {
    case 1: return 161;
    case 2: return m == ContourMethod::kTs ? 31 : 35;
    case 3: return 15;
    default: return 9;
  }
}

ContourResult contour_integral(const ConvexFunction& phi, const ContourOptions& opts) {
  require_admissible(phi, false);
  const int n = phi.dim();
  const double scale = std::pow(2.0, n);
  ContourResult r;
  r.phi = phi.descriptor();
  std::size_t nodes = opts.nodes ? opts.nodes : default_contour_nodes(n, opts.method);
  if (nodes % 2 == 0) ++nodes;
  if (nodes < 5) throw InvalidArgument("contour: need at least 5 nodes per axis");

  if (opts.method == ContourMethod::kXy) {
    // the modulus factorizes: exp(-x.xi/2) exp(-y.eta/2)
    const std::vector<double> hx =
        decay_box(n, opts.rise, [&](const Vec& x) { return 0.5 * x.dot(phi.gradient(x)); });
    std::vector<GridAxis> axes;
    for (int rep = 0; rep < 2; ++rep)
      for (double h : hx) axes.push_back({-h, h, nodes});
    for (const auto& a : axes) r.box.push_back(a.max);
    const NodeFn f = [&](const Vec& pt, std::optional<Vec>&) -> std::optional<Complex> {
      const LambdaPoint p = lift(phi, pt.head(n), pt.tail(n));
      const double det = (0.5 * (hessian_of(phi, p.x) + hessian_of(phi, p.y))).determinant();
      return integrand(p) * det;
    };
    const Sums s = tensor_sums(axes, f, opts.workers);
    r.integral = estimate_from(s.fine, s.coarse, s.count, "xy-trapezoid");
    r.modulus = estimate_from(s.fine_abs, s.coarse_abs, s.count, "xy-trapezoid");
    if (s.boundary > 1e-12 * std::abs(s.fine)) {
      std::ostringstream os;
      os << "truncation: boundary integrand " << s.boundary;
      r.integral.warnings.push_back(os.str());
    }
    return r;
  }

  // (t, s) box from the modulus of the integrand itself
  auto decay_ts = [&](const Vec& ts) {
    std::optional<Vec> warm;
    auto p = try_invert(phi, ts.head(n), ts.tail(n), warm);
    if (!p) return opts.rise + 1.0;
    return 0.5 * (p->x.dot(p->xi) + p->y.dot(p->eta));
  };
  const std::vector<double> half = decay_box(2 * n, opts.rise, decay_ts);
  r.box = half;

  if (opts.method == ContourMethod::kTs) {
    std::vector<GridAxis> axes;
    for (double h : half) axes.push_back({-h, h, nodes});
    const NodeFn f = [&](const Vec& pt, std::optional<Vec>& warm) -> std::optional<Complex> {
      auto p = try_invert(phi, pt.head(n), pt.tail(n), warm);
      if (!p) return std::nullopt;
      return scale * integrand(*p);
    };
    const Sums s = tensor_sums(axes, f, opts.workers);
    r.inversion_failures = s.failures;
    if (static_cast<double>(s.failures) > opts.failure_abort * static_cast<double>(s.count)) {
      throw NumericError("contour: " + std::to_string(s.failures) + " of " + std::to_string(s.count) +
                         " inversions failed");
    }
    r.integral = estimate_from(s.fine, s.coarse, s.count, "ts-trapezoid");
    r.modulus = estimate_from(s.fine_abs, s.coarse_abs, s.count, "ts-trapezoid");
    if (s.failures) r.integral.warnings.push_back(std::to_string(s.failures) + " inversions failed and were skipped");
    if (s.boundary > 1e-12 * std::abs(s.fine)) {
      std::ostringstream os;
      os << "truncation: boundary integrand " << s.boundary;
      r.integral.warnings.push_back(os.str());
    }
    return r;
  }

  // Monte Carlo with a product density from the envelope exp(-(phi(t) + phi*(s)))
  const std::size_t profile_nodes = 801;
  std::vector<AxisSampler> samplers;
  const double f0 = phi.value(Vec::Zero(n));
  const double c0 = conjugate_value(phi, Vec::Zero(n)).value();
  for (int k = 0; k < 2 * n; ++k) {
    const GridAxis a{-1.5 * half[k], 1.5 * half[k], profile_nodes};
    std::vector<double> prof;
    for (std::size_t i = 0; i < a.count; ++i) {
      const Vec e = a.node(i) * Vec::Unit(n, k % n);
      const double v = k < n ? phi.value(e) - f0 : conjugate_value(phi, e).value() - c0;
      prof.push_back(std::exp(-v));
    }
    samplers.emplace_back(a, prof);
  }
  const std::uint64_t per_shard = (opts.samples + kChunks - 1) / kChunks;
  struct Shard {
    Complex sum{0, 0};
    double sum2 = 0, abs_sum = 0, abs_sum2 = 0;
    std::size_t failures = 0;
  };
  std::vector<Shard> shards(kChunks);
  parallel_chunks(kChunks, kChunks, opts.workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t sh = b; sh < e; ++sh) {
      Rng rng(derive_seed(opts.seed, sh));
      Shard& acc = shards[sh];
      Vec t(n), s(n);
      for (std::uint64_t i = 0; i < per_shard; ++i) {
        double q = 1;
        for (int k = 0; k < 2 * n; ++k) {
          auto [x, dens] = samplers[k].draw(rng);
          (k < n ? t(k) : s(k - n)) = x;
          q *= dens;
        }
        std::optional<Vec> warm;
        auto p = try_invert(phi, t, s, warm);
        if (!p) {
          ++acc.failures;
          continue;
        }
        const Complex v = scale * integrand(*p) / q;
        acc.sum += v;
        acc.sum2 += std::norm(v);
        acc.abs_sum += std::abs(v);
        acc.abs_sum2 += std::norm(v);
      }
    }
  });
  Shard tot;
  for (const auto& s : shards) {
    tot.sum += s.sum;
    tot.sum2 += s.sum2;
    tot.abs_sum += s.abs_sum;
    tot.abs_sum2 += s.abs_sum2;
    tot.failures += s.failures;
  }
  const double count = static_cast<double>(per_shard * kChunks);
  r.inversion_failures = tot.failures;
  if (static_cast<double>(tot.failures) > opts.failure_abort * count) {
    throw NumericError("contour: " + std::to_string(tot.failures) + " inversions failed");
  }
  const Complex mean = tot.sum / count;
  const double amean = tot.abs_sum / count;
  auto fill = [&](IntegralEstimate& e, Complex m, double second) {
    e.value = m;
    e.error = std::sqrt(std::max(0.0, second / count - std::norm(m)) / count);
    e.count = static_cast<std::uint64_t>(count);
    e.seed = opts.seed;
    e.method = "importance-mc";
  };
  fill(r.integral, mean, tot.sum2);
  fill(r.modulus, amean, tot.abs_sum2);
  return r;
}

nlohmann::json to_json(const ContourResult& r) {
  const int n = static_cast<int>(r.box.size() / 2);
  const double scale = std::pow(2.0, -n);
  return {{"integral", to_json(r.integral)},
          {"modulus", to_json(r.modulus)},
          {"normalized_abs", scale * std::abs(r.integral.value)},
          {"box", r.box},
          {"inversion_failures", r.inversion_failures},
          {"phi", r.phi}};
}

DeformationReport deformation_sweep(const ConvexFunction& phi0, const ConvexFunction& phi1, int steps,
                                    const ContourOptions& opts) {
  if (steps < 2) throw InvalidArgument("deformation: need at least two steps");
  if (phi0.dim() != phi1.dim()) throw InvalidArgument("deformation: dimension mismatch");
  require_admissible(phi0, true);
  require_admissible(phi1, true);
  const ConvexFunction p1 = make_sum({phi1}, {1.0}, -phi1.value(Vec::Zero(phi1.dim())));
  DeformationReport rep;
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / (steps - 1);
    rep.ts.push_back(t);
    rep.results.push_back(contour_integral(make_sum({phi0, p1}, {1.0 - t, t}), opts));
  }
  Complex mean{0, 0};
  for (const auto& r : rep.results) {
    mean += r.integral.value;
    rep.mean_error += r.integral.error;
  }
  const double m = static_cast<double>(rep.results.size());
  mean /= m;
  rep.mean_error /= m;
  double var = 0;
  for (const auto& a : rep.results) {
    var += std::norm(a.integral.value - mean);
    for (const auto& b : rep.results) rep.max_deviation = std::max(rep.max_deviation, std::abs(a.integral.value - b.integral.value));
  }
  rep.stdev = std::sqrt(var / m);
  rep.pass = rep.stdev <= 3.0 * rep.mean_error;
  return rep;
}

nlohmann::json to_json(const DeformationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < r.ts.size(); ++k) {
    rows.push_back({{"t", r.ts[k]},
                    {"re", r.results[k].integral.value.real()},
                    {"im", r.results[k].integral.value.imag()},
                    {"error", r.results[k].integral.error}});
  }
  return {{"steps", rows},
          {"max_deviation", r.max_deviation},
          {"stdev", r.stdev},
          {"mean_error", r.mean_error},
          {"pass", r.pass}};
}

InequalityChain mahler_lower_bound_check(const ConvexFunction& phi, const ContourOptions& opts) {
  const int n = phi.dim();
  const double scale = std::pow(2.0, -n);
  const ContourResult c = contour_integral(phi, opts);
  const FunctionalMahlerResult j = functional_mahler(phi);
  InequalityChain ch;
  ch.lhs = scale * std::abs(c.integral.value);
  ch.lhs_error = scale * c.integral.error;
  ch.middle = scale * c.modulus.real();
  ch.middle_error = scale * c.modulus.error;
  ch.rhs = j.product;
  ch.rhs_error = j.error;
  ch.pass = ch.lhs <= ch.middle + 3.0 * (ch.lhs_error + ch.middle_error) &&
            ch.middle <= ch.rhs + 3.0 * (ch.middle_error + ch.rhs_error);
  return ch;
}

nlohmann::json to_json(const InequalityChain& c) {
  return {{"lhs", c.lhs},           {"lhs_error", c.lhs_error},       {"middle", c.middle},
          {"middle_error", c.middle_error}, {"rhs", c.rhs}, {"rhs_error", c.rhs_error},
          {"pass", c.pass}};
}

}  // namespace bmk
