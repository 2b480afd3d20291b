#include "bmk/config.hpp"

#include "bmk/error.hpp"

namespace bmk {

namespace {

template <typename F>
void visit_fields(Tolerances& t, F&& f) {
  f("fd_step", t.fd_step);
  f("eval_tol", t.eval_tol);
  f("splice_width", t.splice_width);
  f("oracle_equivalence", t.oracle_equivalence);
  f("node_cap", t.node_cap);
  f("truncation", t.truncation);
  f("newton_tol", t.newton_tol);
  f("newton_cap", t.newton_cap);
  f("pullback_tol", t.pullback_tol);
  f("lagrangian_imag_tol", t.lagrangian_imag_tol);
  f("gradient_fd_step", t.gradient_fd_step);
  f("roundtrip_tol", t.roundtrip_tol);
  f("facet_tol", t.facet_tol);
  f("interior_radius_warning", t.interior_radius_warning);
  f("invert_failure_abort", t.invert_failure_abort);
  f("sigma_multiplier", t.sigma_multiplier);
}

}  // namespace

Tolerances& default_tolerances() {
  static Tolerances t;
  return t;
}

Tolerances resolve_tolerances(const nlohmann::json& overrides) {
  Tolerances t = default_tolerances();
  if (overrides.is_null()) return t;
  if (!overrides.is_object()) throw ParseError("tolerance overrides must be a JSON object");
  for (const auto& [key, _] : overrides.items()) {
    bool known = false;
    visit_fields(t, [&](const char* name, auto&) { known = known || key == name; });
    if (!known) throw ParseError("unknown tolerance key '" + key + "'");
  }
  visit_fields(t, [&](const char* name, auto& field) {
    if (overrides.contains(name)) field = overrides.at(name).get<std::decay_t<decltype(field)>>();
  });
  return t;
}

nlohmann::json to_json(const Tolerances& t) {
  nlohmann::json j = nlohmann::json::object();
  auto copy = t;
  visit_fields(copy, [&](const char* name, auto& field) { j[name] = field; });
  return j;
}

}  // namespace bmk
