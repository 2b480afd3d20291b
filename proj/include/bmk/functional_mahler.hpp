#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmk/convex_fn.hpp"
#include "bmk/quadrature.hpp"

namespace bmk {

/// Trapezoid integral of exp(-g) over the grid box (+inf nodes contribute
/// 0), with a Richardson error estimate against every-other-node.
/// Warns when the boundary integrand exceeds `boundary_ratio` times the
/// integral.
IntegralEstimate exp_integral(const GridFunction& g, double boundary_ratio = 1e-12);
IntegralEstimate exp_integral(const ConvexFunction& f, const std::vector<GridAxis>& axes,
                              double boundary_ratio = 1e-12);

/// Largest exp(-g) over boundary nodes.
double boundary_integrand(const GridFunction& g);

struct FunctionalMahlerOptions {
  std::size_t nodes = 0;               // per axis, odd; 0 picks a default by dimension
  std::optional<double> half_width;    // initial primal box; sublevel-set search when absent
  double boundary_ratio = 1e-12;
  int max_expansions = 12;
  double expansion = 1.5;
  bool refine = true;                  // parabolic argmax refinement for smooth f
  int workers = 1;
  std::size_t node_cap = 20'000'000;
};

struct FunctionalMahlerResult {
  IntegralEstimate primal;
  IntegralEstimate dual;
  double product = 0;
  double error = 0;
  double margin = 0;  // product / pi^n
  std::vector<GridAxis> primal_axes;
  std::vector<GridAxis> dual_axes;
  std::size_t nodes = 0;
  std::vector<std::string> warnings;
};

std::size_t default_nodes(int n);

FunctionalMahlerResult functional_mahler(const ConvexFunction& f, const FunctionalMahlerOptions& opts = {});
nlohmann::json to_json(const FunctionalMahlerResult& r);

struct SweepRow {
  nlohmann::json params;
  FunctionalMahlerResult result;
  bool violation = false;
};

struct SweepReport {
  std::string family;
  int n = 0;
  std::vector<SweepRow> rows;
  double min_margin = 0;
  std::size_t min_index = 0;
  std::size_t violations = 0;
};

/// Function specs for a sweep: "quadratic" (random SPD), "ppower" (p cycling
/// through 1.5, 2, 3, 6), "maxaffine", "gauge" (random symmetric polytopes),
/// "splice" (softabs / logcosh cores).
std::vector<nlohmann::json> sweep_members(const std::string& family, int n, std::size_t count, std::uint64_t seed);

SweepReport theorem21_sweep(const std::string& family, int n, std::size_t count, std::uint64_t seed,
                            const FunctionalMahlerOptions& opts = {});
SweepReport theorem21_sweep(const std::string& family, int n, const std::vector<nlohmann::json>& members,
                            const FunctionalMahlerOptions& opts = {});

nlohmann::json to_json(const SweepReport& r);
/// One line per member: index,family,n,primal,dual,product,margin,error,violation.
std::string sweep_csv(const SweepReport& r);

}  // namespace bmk
