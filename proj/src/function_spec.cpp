#include <cmath>

#include "bmk/convex_fn.hpp"
#include "bmk/error.hpp"
#include "bmk/polytope.hpp"

namespace bmk {

namespace {

Mat matrix_field(const nlohmann::json& j, const char* key) {
  const auto& m = j.at(key);
  if (!m.is_array() || m.empty() || !m[0].is_array()) throw ParseError(std::string("'") + key + "' must be a matrix");
  Mat out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != m[0].size()) throw ParseError(std::string("'") + key + "' is ragged");
    for (std::size_t c = 0; c < m[r].size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c].get<double>();
  }
  return out;
}

Vec vector_field(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ConvexFunction build_analytic(const nlohmann::json& spec) {
  try {
    const std::string family = spec.at("family").get<std::string>();
    if (family == "quadratic") {
      if (spec.contains("A")) return make_quadratic(matrix_field(spec, "A"));
      const int n = spec.at("n").get<int>();
      return make_quadratic(Mat::Identity(n, n) * spec.value("scale", 1.0));
    }
    if (family == "ppower") return make_ppower(spec.at("n").get<int>(), spec.at("p").get<double>());
    if (family == "maxaffine") return make_max_affine(matrix_field(spec, "a"), vector_field(spec, "b"));
    if (family == "gauge" || family == "indicator") {
      const auto body = body_from_json(spec.at("body"));
      const Mat facets = facet_normals(body);
      if (family == "indicator") return make_polytope_indicator(facets);
      return make_polytope_gauge(facets, vertices(body));
    }
    if (family == "softabs") return make_softabs(spec.at("n").get<int>(), spec.value("a", 1.0));
    if (family == "logcosh") return make_logcosh(spec.at("n").get<int>(), spec.value("a", 1.0));
    if (family == "cosh") return make_cosh(spec.at("n").get<int>());
    if (family == "lpgauge") return make_lp_gauge(spec.at("n").get<int>(), spec.at("p").get<double>());
    if (family == "ellipsoid") return make_ellipsoid_gauge(vector_field(spec, "axes"));
    if (family == "boundary_matched")
      return make_boundary_matched(build_analytic(spec.at("gauge")), spec.value("r0", 0.5));
    if (family == "sum") {
      std::vector<ConvexFunction> terms;
      for (const auto& t : spec.at("terms")) terms.push_back(build_analytic(t));
      std::vector<double> w = spec.contains("weights") ? spec.at("weights").get<std::vector<double>>()
                                                       : std::vector<double>(terms.size(), 1.0);
      return make_sum(terms, w, spec.value("constant", 0.0));
    }
    if (family == "linear") return make_linear_composition(build_analytic(spec.at("inner")), matrix_field(spec, "T"));
    if (family == "splice") {
      SpliceOptions opts;
      opts.radius = spec.value("R", 2.0);
      opts.width = spec.value("width", 0.05);
      if (spec.contains("C")) opts.constant = spec.at("C").get<double>();
      return make_splice(build_analytic(spec.at("core")), opts);
    }
    throw ConstructionError(ConstructionError::Kind::kUnknownFamily, "unknown function family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("function spec: ") + e.what());
  }
}

}  // namespace bmk
