#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/convex_fn.hpp"
#include "bmk/lagrangian.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

/// exp(-(1/2) z . conj(zeta)) at a point of Lambda.
Complex integrand(const LambdaPoint& p);

enum class ContourMethod { kTs, kXy, kMonteCarlo };

ContourMethod contour_method_from_string(const std::string& s);
std::string to_string(ContourMethod m);

struct ContourOptions {
  ContourMethod method = ContourMethod::kTs;
  std::size_t nodes = 0;          // per axis of the 2n-dimensional grid, odd; 0 picks a default
  std::uint64_t samples = 200'000;  // Monte Carlo
  std::uint64_t seed = 1;
  double rise = 30.0;             // box edge where the modulus has dropped by exp(-rise)
  double failure_abort = 1e-3;    // fraction of failed inversions that aborts
  int workers = 1;
};

struct ContourResult {
  IntegralEstimate integral;     // I, calibrated so the Gaussian gives +(2 pi)^n
  IntegralEstimate modulus;      // the same quadrature of |integrand| |Omega|
  std::vector<double> box;       // per-axis half-widths, 2n entries
  std::size_t inversion_failures = 0;
  nlohmann::json phi;
};

std::size_t default_contour_nodes(int n, ContourMethod m);

ContourResult contour_integral(const ConvexFunction& phi, const ContourOptions& opts = {});
nlohmann::json to_json(const ContourResult& r);

struct DeformationReport {
  std::vector<double> ts;
  std::vector<ContourResult> results;
  double max_deviation = 0;  // max pairwise |I_a - I_b|
  double stdev = 0;          // of the complex values
  double mean_error = 0;
  bool pass = false;
};

/// I along phi_t = (1-t) phi0 + t (phi1 - phi1(0)), t = 0, 1/(steps-1), ..., 1.
DeformationReport deformation_sweep(const ConvexFunction& phi0, const ConvexFunction& phi1, int steps,
                                    const ContourOptions& opts = {});
nlohmann::json to_json(const DeformationReport& r);

struct InequalityChain {
  double lhs = 0;     // 2^{-n} |I|
  double middle = 0;  // 2^{-n} of the modulus integral
  double rhs = 0;     // int e^{-phi} int e^{-phi*}
  double lhs_error = 0, middle_error = 0, rhs_error = 0;
  bool pass = false;
};

InequalityChain mahler_lower_bound_check(const ConvexFunction& phi, const ContourOptions& opts = {});
nlohmann::json to_json(const InequalityChain& c);

}  // namespace bmk
