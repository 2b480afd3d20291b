#pragma once

#include <json.hpp>

#include <string>

namespace bmk {

inline constexpr const char* kVersion = "0.3.0";

/// Every numeric tolerance and default budget used across the toolkit.
///
/// Reports echo the resolved record so a run can be reproduced exactly.
/// Values may be overridden per run from a JSON object with the same keys.
struct Tolerances {
  // convex_fn
  double fd_step = 1e-4;           // relative to coordinate scale
  double eval_tol = 1e-10;         // evenness / convexity sampling slack
  double splice_width = 0.05;      // smoothing half-width of the spliced max
  // legendre
  double oracle_equivalence = 1e-12;
  std::size_t node_cap = 20'000'000;
  // quadrature
  double truncation = 1e-12;       // boundary integrand / integral
  // lagrangian
  double newton_tol = 1e-10;
  int newton_cap = 200;
  double pullback_tol = 1e-6;
  double lagrangian_imag_tol = 1e-8;
  double gradient_fd_step = 1e-5;
  double roundtrip_tol = 1e-8;
  // polytope
  double facet_tol = 1e-9;
  double interior_radius_warning = 1e-3;
  // contour
  double invert_failure_abort = 1e-3;
  // acceptance multipliers
  double sigma_multiplier = 3.0;
};

Tolerances& default_tolerances();
Tolerances resolve_tolerances(const nlohmann::json& overrides);
nlohmann::json to_json(const Tolerances& t);

}  // namespace bmk
