#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/quadrature.hpp"
#include "bmk/types.hpp"

namespace bmk {

enum class Representation { kVertex, kHalfspace };

/// Origin-symmetric polytope.
///
/// V-rep: the body is conv(+-v_i) for the generator rows v_i.
/// H-rep: the body is {x : |a_i . x| <= 1 for all i} for generator rows a_i.
/// Generators are listed without their negatives and must span R^n.
class SymmetricPolytope {
 public:
  SymmetricPolytope(Representation rep, Mat generators);

  int dim() const { return static_cast<int>(generators_.cols()); }
  Representation rep() const { return rep_; }
  const Mat& generators() const { return generators_; }

  /// Image under x -> T x (V-rep generators map by T, H-rep by T^{-T}).
  SymmetricPolytope transformed(const Mat& t) const;

 private:
  Representation rep_;
  Mat generators_;
};

SymmetricPolytope polar(const SymmetricPolytope& k);

/// Irredundant facet normals a (one per +- pair) with K = {|a . x| <= 1}.
Mat facet_normals(const SymmetricPolytope& k, double tol = 1e-9);
/// Vertices of K, one per +- pair.
Mat vertices(const SymmetricPolytope& k, double tol = 1e-9);

/// Gauge max_j |a_j . x| over the facet normals.
double gauge(const SymmetricPolytope& k, const Vec& x);
/// Membership: direct for H-rep, a small l1 linear program for V-rep.
bool contains(const SymmetricPolytope& k, const Vec& x, double tol = 0.0);

/// Exact-up-to-rounding volume by a pulling triangulation of the face
/// lattice (dimension cap 6).
double volume_exact(const SymmetricPolytope& k);
/// The same algorithm in exact rational arithmetic; returns "p/q".
std::string volume_exact_rational(const SymmetricPolytope& k);

/// Hit-or-miss volume over the bounding box.
IntegralEstimate volume_mc(const SymmetricPolytope& k, std::uint64_t samples, std::uint64_t seed, int workers = 1);

enum class VolumeMethod { kExact, kMonteCarlo, kRational };

struct MahlerResult {
  double volume_body = 0;
  double volume_polar = 0;
  double mahler = 0;
  VolumeMethod method = VolumeMethod::kExact;
  double error = 0;
  std::string mahler_rational;  // rational mode only
  double ratio_pi = 0;    // M / (pi^n / n!)
  double ratio_cube = 0;  // M / (4^n / n!)
  std::vector<std::string> warnings;
};

struct MahlerOptions {
  VolumeMethod method = VolumeMethod::kExact;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  int workers = 1;
  double interior_radius_warning = 1e-3;
};

MahlerResult mahler(const SymmetricPolytope& k, const MahlerOptions& opts = {});
nlohmann::json to_json(const MahlerResult& r);

/// m generator directions uniform on the sphere with radii in [0.5, 2].
SymmetricPolytope random_polytope(int n, int m, std::uint64_t seed, Representation rep = Representation::kVertex);

SymmetricPolytope cube(int n);
SymmetricPolytope cross_polytope(int n);

/// Largest r with the Euclidean r-ball inside K.
double inradius(const SymmetricPolytope& k);

SymmetricPolytope body_from_json(const nlohmann::json& j);
nlohmann::json body_to_json(const SymmetricPolytope& k);

double factorial(int n);

/// Minimises sum(z) subject to A z = b, z >= 0 (dense two-phase simplex,
/// Bland's rule). Returns nullopt when infeasible.
std::optional<double> lp_min_sum(const Mat& a, const Vec& b);

}  // namespace bmk
