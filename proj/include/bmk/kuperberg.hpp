#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/polytope.hpp"
#include "bmk/types.hpp"

namespace bmk {

/// Element of the n-th exterior power of R^n + R^n. Basis vectors are
/// indexed 0..n-1 for e_1..e_n and n..2n-1 for f_1..f_n; basis n-vectors are
/// the sorted index sets in lexicographic order.
class NVector {
 public:
  explicit NVector(int n);

  int dim() const { return n_; }
  std::size_t size() const { return coef_.size(); }
  const std::vector<std::vector<int>>& basis() const { return basis_; }
  double& operator[](std::size_t i) { return coef_[i]; }
  double operator[](std::size_t i) const { return coef_[i]; }
  double coefficient(const std::vector<int>& indices) const;
  std::string label(std::size_t i) const;  // e.g. "e1^f2"

  /// Image under f -> -f.
  NVector reflected() const;
  NVector& operator+=(const NVector& o);
  NVector operator-(const NVector& o) const;
  double max_abs() const;

 private:
  int n_;
  std::vector<std::vector<int>> basis_;
  std::vector<double> coef_;
};

/// Coefficient of a ^ b on e_1^..^e_n^f_1^..^f_n.
double wedge_top(const NVector& a, const NVector& b);

nlohmann::json to_json(const NVector& v);

/// Origin-symmetric body with smooth gauge mu(x) = ||A x||_p, A of full
/// column rank and 1 < p < inf. Covers l_p balls, ellipsoids and l_q
/// smoothings of polytopes.
struct SmoothBody {
  std::string kind;
  Mat a;
  double p = 2;

  int dim() const { return static_cast<int>(a.cols()); }
  double gauge(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  /// T K, with gauge mu(T^{-1} x).
  SmoothBody transformed(const Mat& t) const;
};

SmoothBody lp_ball(int n, double p);
SmoothBody ellipsoid(const Vec& semi_axes);
/// {x : sum_i |a_i . x|^q <= 1} over the facet normals of K; tends to K as
/// q grows.
SmoothBody smoothed_polytope(const SymmetricPolytope& k, double q);

nlohmann::json to_json(const SmoothBody& b);

struct DirectedVolumeOptions {
  int angular_nodes = 0;  // 0: per-dimension default
  int radial_nodes = 0;   // 0: exact for the quadratic graph
  /// lambda is the graph of the gradient of mu^k / k, which equals the
  /// gradient of the gauge on the boundary.
  double exponent = 2;
  /// Reparametrisation strength of the angular coordinate, |warp| < 1.
  double warp = 0;
};

struct DirectedVolume {
  NVector value;
  double error = 0;  // max coefficient change at half resolution
};

/// Directed volume of lambda = {(x, grad phi(x)) : x in K}, integrating the
/// Jacobian minors over a radial product grid. Dimensions 1..3.
DirectedVolume directed_volume(const SmoothBody& k, const DirectedVolumeOptions& opts = {});

struct BodyMahler {
  double value = 0;
  double error = 0;
  std::string method;  // "closed-form" or "directed-volume"
};

/// M(K) in closed form when A is square, otherwise from the pure e and f
/// coefficients of the directed volume (|K| and |K polar|).
BodyMahler smooth_body_mahler(const SmoothBody& k, const DirectedVolume& dv);

struct KuperbergResult {
  double v = 0;
  double raw = 0;  // wedge coefficient before normalisation
  double error = 0;
  NVector plus{1};
  NVector minus{1};
  BodyMahler mahler;
  double lower = 0;  // pi^n / n!
  bool sandwich = false;
};

/// Scalar normalisation of the top wedge: V = wedge_scale(n) * (a ^ b) is
/// the volume of the cone over the join of K+ and K-. Equals -1/2 at n = 1.
double wedge_scale(int n);
/// V / int Omega over lambda x lambda, 2^n (n!)^2 / (2n)!.
double omega_scale(int n);

/// V from the directed volumes of K+ and K-, with the sandwich
/// pi^n/n! <= V <= M(K) checked within three combined errors.
KuperbergResult kuperberg_v(const SmoothBody& k, const DirectedVolumeOptions& opts = {});
nlohmann::json to_json(const KuperbergResult& r);

struct BridgeOptions {
  int angular_nodes = 0;
  int radial_nodes = 0;
  double tolerance = 1e-3;
};

struct BridgeReport {
  KuperbergResult kuperberg;
  double omega_integral = 0;  // integral of Omega over lambda x lambda
  double omega_error = 0;
  double rhs = 0;             // 2^{-n} omega_integral
  double deviation = 0;       // |V - rhs| / V
  double calibrated_deviation = 0;  // |V - omega_scale(n) omega_integral| / V
  double tolerance = 0;
  bool pass = false;
};

/// Both sides of V = 2^{-n} int Omega, the right side from the mixed
/// Monge-Ampere density det((H(x) + H(y)) / 2) over K x K.
BridgeReport bridge_check(const SmoothBody& k, const BridgeOptions& bopts = {},
                          const DirectedVolumeOptions& opts = {});
nlohmann::json to_json(const BridgeReport& r);

struct SmoothedPolytopeReport {
  std::vector<double> q;
  std::vector<KuperbergResult> results;
  double extrapolated = 0;  // least-squares line in 1/q evaluated at 0
  MahlerResult polytope_mahler;
};

SmoothedPolytopeReport kuperberg_smoothed_polytope(const SymmetricPolytope& k, const std::vector<double>& q,
                                                   const DirectedVolumeOptions& opts = {});
nlohmann::json to_json(const SmoothedPolytopeReport& r);

/// {"type": "lp", "n", "p"} | {"type": "ellipsoid", "axes"} |
/// {"type": "polytope", "body", "q"}, with an optional "transform" matrix.
SmoothBody smooth_body_from_json(const nlohmann::json& j);

}  // namespace bmk
