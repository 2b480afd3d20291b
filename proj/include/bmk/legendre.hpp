#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bmk/convex_fn.hpp"

namespace bmk {

struct ConjugateOptions {
  /// Parabolic refinement of each discrete argmax. Only applied to grids
  /// flagged smooth; off for the exact-equivalence contract with the oracle.
  bool refine = false;
  std::size_t node_cap = 20'000'000;
  int workers = 1;
};

/// phi*(xi) = max over primal nodes of x . xi - f(x). The reference oracle.
GridFunction conjugate_bruteforce(const GridFunction& f, const std::vector<GridAxis>& dual);

/// Linear-time 1D transform: lower convex hull of the finite nodes, then a
/// monotone argmax sweep over the (ascending) dual nodes. Ties keep the
/// smallest primal index.
GridFunction conjugate_fast_1d(const GridFunction& f, const GridAxis& dual, const ConjugateOptions& opts = {});

/// n-D transform as iterated 1D transforms, one axis at a time.
GridFunction conjugate_nd(const GridFunction& f, const std::vector<GridAxis>& dual, const ConjugateOptions& opts = {});

/// Dual box [-L, L] per axis, L the largest finite boundary slope of f along
/// that axis; same node counts as the primal grid.
std::vector<GridAxis> default_dual_axes(const GridFunction& f);

/// Bound on conjugate-vs-sampled-conjugate error from the grid spacing.
double conjugate_error_bound(const GridFunction& f, const std::vector<GridAxis>& dual);

struct ConjugatePair {
  GridFunction primal;
  GridFunction dual;
  std::vector<GridAxis> dual_axes;
  double sup_error_bound = 0;
};

ConjugatePair conjugate_pair(const GridFunction& f, const std::optional<std::vector<GridAxis>>& dual = std::nullopt,
                             const ConjugateOptions& opts = {});

/// Pointwise conjugate of an analytic function: the closed form when the
/// family has one, otherwise Newton on grad f(x) = xi (smooth, superlinear).
ExtendedReal conjugate_value(const ConvexFunction& f, const Vec& xi, Vec* argmax = nullptr);

/// phi_j = max(f, |x|^2/2 - j) and psi_j = sup_{|xi| < j} x . xi - f*(xi),
/// the latter evaluated as the inf-convolution min_y f(y) + j |x - y|.
std::pair<ConvexFunction, ConvexFunction> approx_sequences(const ConvexFunction& f, double j);

struct MonotoneFamilyReport {
  enum class Direction { kDecreasing, kIncreasing, kConstant };
  Direction primal_direction = Direction::kConstant;
  bool conjugates_monotone = false;   // in the reverse direction, exact comparisons
  std::size_t violations = 0;         // dual nodes breaking monotonicity
  double limit_deviation = 0;         // max |conj_last - conj_limit| over finite nodes
  std::vector<double> deviations;     // per member, vs the limit
  bool pass = false;
};

/// Monotone primal family -> reversed monotone conjugates converging to the
/// conjugate of the limit (which may be omitted).
MonotoneFamilyReport check_monotone_conjugates(const std::vector<GridFunction>& family,
                                               const std::vector<GridAxis>& dual,
                                               const std::optional<GridFunction>& limit = std::nullopt,
                                               double tolerance = 1e-9);

nlohmann::json to_json(const MonotoneFamilyReport& r);

}  // namespace bmk
