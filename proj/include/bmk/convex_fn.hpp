#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/extended_real.hpp"
#include "bmk/types.hpp"

namespace bmk {

enum class Smoothness { kSmooth, kPiecewiseLinear, kGridSampled, kC1 };

enum class GrowthClass { kLinear, kQuadraticAtInfinity, kSuperlinear, kGeneral };

struct Growth {
  GrowthClass kind = GrowthClass::kGeneral;
  double radius = 0.0;    // quadratic-at-infinity only
  double constant = 0.0;  // f(x) = |x|^2/2 + constant for |x| > radius
};

struct FunctionFlags {
  bool is_even = false;
  Smoothness smoothness = Smoothness::kSmooth;
  Growth growth;
};

/// An extended-real convex function on R^n.
///
/// Immutable after construction; all members are pure and safe to call from
/// several threads. Gradient and Hessian are optional and only present where
/// the family admits them (a.e. gradients are supplied for piecewise-linear
/// families so the graph of the gradient map can still be sampled).
class ConvexFunction {
 public:
  using EvalFn = std::function<ExtendedReal(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  ConvexFunction(int dim, EvalFn eval, GradFn grad, HessFn hess, FunctionFlags flags, nlohmann::json descriptor,
                 EvalFn conjugate = {});

  int dim() const { return dim_; }
  ExtendedReal operator()(const Vec& x) const;
  /// Finite value at x; throws DomainError where the function is +inf.
  double value(const Vec& x) const { return (*this)(x).value(); }

  bool has_gradient() const { return static_cast<bool>(grad_); }
  bool has_hessian() const { return static_cast<bool>(hess_); }
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  /// Closed-form conjugate when the family has one (quadratic, p-power,
  /// gauge). Used as an oracle, never by the grid transforms.
  bool has_closed_form_conjugate() const { return static_cast<bool>(conj_); }
  ExtendedReal closed_form_conjugate(const Vec& xi) const;

  const FunctionFlags& flags() const { return flags_; }
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  int dim_;
  EvalFn eval_;
  GradFn grad_;
  HessFn hess_;
  EvalFn conj_;
  FunctionFlags flags_;
  nlohmann::json descriptor_;
};

// Families -------------------------------------------------------------------

ConvexFunction make_quadratic(const Mat& a);
ConvexFunction make_ppower(int n, double p);
/// max_i (|a_i . x| + b_i), the even symmetrization of max_i (a_i . x + b_i).
ConvexFunction make_max_affine(const Mat& slopes, const Vec& offsets);
/// x -> max_j |a_j . x| for facet normals a_j (rows), with the ball-indicator
/// of the polar as closed-form conjugate given its vertex list.
ConvexFunction make_polytope_gauge(const Mat& facet_normals, const Mat& polar_facet_normals);
/// 0 on {|a_j . x| <= 1}, +inf elsewhere.
ConvexFunction make_polytope_indicator(const Mat& facet_normals);
ConvexFunction make_softabs(int n, double scale);
ConvexFunction make_logcosh(int n, double scale);
ConvexFunction make_cosh(int n);
/// Gauge of the l_p ball, p > 1.
ConvexFunction make_lp_gauge(int n, double p);
ConvexFunction make_ellipsoid_gauge(const Vec& semi_axes);
/// psi(mu(x)) with psi(r) = r for r >= r0 and a C^2 even quartic below r0.
ConvexFunction make_boundary_matched(const ConvexFunction& gauge, double r0);
/// Non-negative combination sum_k w_k f_k plus a constant.
ConvexFunction make_sum(const std::vector<ConvexFunction>& terms, const std::vector<double>& weights,
                        double constant = 0.0);
/// x -> f(T x).
ConvexFunction make_linear_composition(const ConvexFunction& f, const Mat& t);

struct SpliceOptions {
  double radius = 2.0;
  std::optional<double> constant;  // computed when absent
  double width = 0.05;              // half-width of the C^2 smoothed max
};
/// Smoothed max of `core` and |x|^2/2 + C, equal to the quadratic outside
/// the given radius. The core must grow slower than |x|^2/2.
ConvexFunction make_splice(const ConvexFunction& core, const SpliceOptions& opts);

/// C^2 even majorant of |u| equal to |u| for |u| >= w.
double smooth_abs(double u, double w);
double smooth_abs_d1(double u, double w);
double smooth_abs_d2(double u, double w);

/// Build from the JSON function description
/// {"family": "quadratic"|"ppower"|"maxaffine"|"gauge"|"splice"|..., ...}.
ConvexFunction build_analytic(const nlohmann::json& spec);

// Grids ----------------------------------------------------------------------

struct GridAxis {
  double min = -1.0;
  double max = 1.0;
  std::size_t count = 2;
  double step() const { return (max - min) / static_cast<double>(count - 1); }
  double node(std::size_t i) const;
};

/// Values of a function on a tensor grid, row-major (last axis fastest).
/// Outside its box a GridFunction is +inf.
class GridFunction {
 public:
  GridFunction(std::vector<GridAxis> axes, std::vector<ExtendedReal> values, bool even = false,
               Smoothness smoothness = Smoothness::kGridSampled);

  int dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<GridAxis>& axes() const { return axes_; }
  const std::vector<ExtendedReal>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool is_even() const { return even_; }
  Smoothness smoothness() const { return smoothness_; }

  std::vector<std::size_t> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const std::size_t> idx) const;
  Vec node(std::size_t flat) const;
  const ExtendedReal& at(std::span<const std::size_t> idx) const { return values_[flat_index(idx)]; }

  /// Every other node along every axis; all counts must be odd.
  GridFunction subsample() const;

  /// Largest negative second difference along axis-parallel and diagonal
  /// directions (0 when discretely convex).
  double convexity_defect() const;

 private:
  std::vector<GridAxis> axes_;
  std::vector<ExtendedReal> values_;
  bool even_;
  Smoothness smoothness_;
};

std::size_t node_count(const std::vector<GridAxis>& axes);
std::vector<GridAxis> symmetric_axes(int n, double half_width, std::size_t count);

GridFunction sample_to_grid(const ConvexFunction& f, const std::vector<GridAxis>& axes);

/// Central-difference Hessian, symmetrized.
Mat hessian_fd(const ConvexFunction& f, const Vec& x, double step);
/// Central-difference gradient.
Vec gradient_fd(const ConvexFunction& f, const Vec& x, double step);

nlohmann::json grid_to_json(const GridFunction& g);
GridFunction grid_from_json(const nlohmann::json& j);

}  // namespace bmk
