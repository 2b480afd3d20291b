#include "bmk/bmk.h"

#include <map>
#include <optional>
#include <string>

#include "bmk/acceptance.hpp"
#include "bmk/config.hpp"
#include "bmk/driver.hpp"
#include "bmk/error.hpp"

struct bmk_report {
  std::optional<bmk::Report> report;
  std::string json;
  bool pass = false;
  std::map<std::string, std::string> views;
};

namespace {

thread_local std::string last_error;

bmk_status fail(bmk_status s, const char* kind, const std::string& message) {
  last_error = nlohmann::json{{"status", static_cast<int>(s)}, {"kind", kind}, {"message", message}}.dump();
  return s;
}

template <class F>
bmk_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const bmk::ParseError& e) {
    return fail(BMK_PARSE_ERROR, "parse", e.what());
  } catch (const bmk::NumericError& e) {
    return fail(BMK_NUMERIC_ERROR, "numeric", e.what());
  } catch (const bmk::InvalidArgument& e) {
    return fail(BMK_INVALID_ARGUMENT, "invalid-argument", e.what());
  } catch (const bmk::DomainError& e) {
    return fail(BMK_DOMAIN_ERROR, "domain", e.what());
  } catch (const bmk::ResourceError& e) {
    return fail(BMK_RESOURCE_ERROR, "resource", e.what());
  } catch (const bmk::ConstructionError& e) {
    return fail(BMK_CONSTRUCTION_ERROR, "construction", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(BMK_PARSE_ERROR, "parse", e.what());
  } catch (const std::exception& e) {
    return fail(BMK_INTERNAL_ERROR, "internal", e.what());
  }
}

}  // namespace

extern "C" {

const char* bmk_version(void) { return bmk::kVersion; }

bmk_status bmk_run(const char* subcommand, const char* config_json, bmk_report** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    if (!subcommand || !out) throw bmk::InvalidArgument("bmk_run: null argument");
    const nlohmann::json config = config_json && *config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    auto* h = new bmk_report;
    h->report = bmk::run(subcommand, config);
    h->pass = h->report->pass();
    h->json = bmk::to_json(*h->report).dump(2);
    *out = h;
    return h->pass ? BMK_OK : BMK_CHECK_FAILED;
  });
}

bmk_status bmk_criterion(int id, const char* profile, int workers, uint64_t seed, bmk_report** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    if (!out) throw bmk::InvalidArgument("bmk_criterion: null argument");
    if (workers < 1) throw bmk::InvalidArgument("bmk_criterion: workers must be positive");
    const auto p = bmk::profile_from_string(profile ? profile : "full");
    const bmk::CriterionResult c = bmk::run_criterion(id, p, workers, seed);
    auto* h = new bmk_report;
    h->pass = c.pass;
    h->json = bmk::to_json(c).dump(2);
    *out = h;
    return h->pass ? BMK_OK : BMK_CHECK_FAILED;
  });
}

int bmk_criterion_count(void) { return bmk::kCriterionCount; }

int bmk_report_pass(const bmk_report* r) { return r && r->pass ? 1 : 0; }

const char* bmk_report_json(const bmk_report* r) { return r ? r->json.c_str() : ""; }

const char* bmk_report_render(bmk_report* r, const char* format) {
  if (!r || !format) return nullptr;
  const std::string f = format;
  if (f == "json") return r->json.c_str();
  if (!r->report) return nullptr;
  const char* result = nullptr;
  guarded([&] {
    auto& v = r->views[f];
    v = bmk::render(*r->report, f);
    result = v.c_str();
    return BMK_OK;
  });
  return result;
}

void bmk_report_free(bmk_report* r) { delete r; }

const char* bmk_last_error(void) { return last_error.c_str(); }

bmk_status bmk_write_file(const char* path, const char* content) {
  return guarded([&] {
    if (!path || !content) throw bmk::InvalidArgument("bmk_write_file: null argument");
    bmk::write_file_atomic(path, content);
    return BMK_OK;
  });
}

}  // extern "C"
