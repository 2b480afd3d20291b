#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bmk/bmk.h"

using nlohmann::json;

namespace {

json last_error() { return json::parse(bmk_last_error()); }

}  // namespace

TEST_CASE("version and criterion count") {
  CHECK(std::string(bmk_version()).size() > 0);
  CHECK(bmk_criterion_count() == 11);
}

TEST_CASE("run returns a report handle") {
  bmk_report* r = nullptr;
  const char* cfg = R"({"input": {"n": 2, "rep": "V", "generators": [[1, 1], [1, -1]]}})";
  REQUIRE(bmk_run("mahler-body", cfg, &r) == BMK_OK);
  REQUIRE(r != nullptr);
  CHECK(bmk_report_pass(r) == 1);
  const json j = json::parse(bmk_report_json(r));
  CHECK(j["subcommand"] == "mahler-body");
  CHECK(j["result"]["mahler"].get<double>() == doctest::Approx(8.0));
  CHECK(j["config"].contains("tolerances"));
  const std::string csv = bmk_report_render(r, "csv");
  CHECK(csv.rfind("name,value,reference", 0) == 0);
  CHECK(bmk_report_render(r, "plot-data") != nullptr);
  CHECK(bmk_report_render(r, "yaml") == nullptr);
  CHECK(last_error()["kind"] == "parse");
  bmk_report_free(r);
}

TEST_CASE("failed check is a report, not an error") {
  bmk_report* r = nullptr;
  const char* cfg = R"({"phi": {"family": "quadratic", "n": 1}, "points": 5, "tolerances": {"pullback_tol": 1e-300}})";
  REQUIRE(bmk_run("lambda-check", cfg, &r) == BMK_CHECK_FAILED);
  REQUIRE(r != nullptr);
  CHECK(bmk_report_pass(r) == 0);
  bmk_report_free(r);
}

TEST_CASE("error statuses") {
  bmk_report* r = reinterpret_cast<bmk_report*>(1);
  CHECK(bmk_run("no-such-command", "{}", &r) == BMK_PARSE_ERROR);
  CHECK(r == nullptr);
  CHECK(last_error()["status"] == BMK_PARSE_ERROR);

  CHECK(bmk_run("mahler-body", "{not json", &r) == BMK_PARSE_ERROR);
  CHECK(bmk_run("mahler-body", R"({"bogus": 1})", &r) == BMK_PARSE_ERROR);
  CHECK(std::string(last_error()["message"]).find("bogus") != std::string::npos);
  CHECK(bmk_run("mahler-body", R"({"input": {"n": 2, "rep": "V", "generators": [[1, 0]]}})", &r) != BMK_OK);
  CHECK(r == nullptr);
  CHECK(bmk_run(nullptr, "{}", &r) == BMK_INVALID_ARGUMENT);
  CHECK(bmk_criterion(0, "quick", 1, 1, &r) == BMK_INVALID_ARGUMENT);
  CHECK(bmk_criterion(1, "medium", 1, 1, &r) == BMK_PARSE_ERROR);
  CHECK(bmk_criterion(1, "quick", 0, 1, &r) == BMK_INVALID_ARGUMENT);

  // success clears the record
  REQUIRE(bmk_run("mahler-body", R"({"input": {"n": 1, "rep": "V", "generators": [[2]]}})", &r) == BMK_OK);
  CHECK(std::string(bmk_last_error()).empty());
  bmk_report_free(r);
}

TEST_CASE("criterion through the C interface") {
  bmk_report* r = nullptr;
  REQUIRE(bmk_criterion(1, "quick", 1, 1, &r) == BMK_OK);
  const json j = json::parse(bmk_report_json(r));
  CHECK(j["id"] == 1);
  CHECK(j["pass"] == true);
  CHECK(bmk_report_render(r, "csv") == nullptr);
  bmk_report_free(r);
}

TEST_CASE("atomic file write") {
  const std::string path = "capi_write_test.txt";
  REQUIRE(bmk_write_file(path.c_str(), "first\n") == BMK_OK);
  REQUIRE(bmk_write_file(path.c_str(), "second\n") == BMK_OK);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "second\n");
  std::remove(path.c_str());
  CHECK(bmk_write_file("/nonexistent-dir/x.txt", "x") != BMK_OK);
  CHECK(bmk_write_file(nullptr, "x") == BMK_INVALID_ARGUMENT);
}
