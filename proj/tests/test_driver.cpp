#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <algorithm>

#include "bmk/driver.hpp"
#include "bmk/error.hpp"

using namespace bmk;
using nlohmann::json;

namespace {

// report without the wall clock
json stable(const Report& r) {
  json j = to_json(r);
  j.erase("wall_seconds");
  return j;
}

const json kSquare = {{"n", 2}, {"rep", "V"}, {"generators", {{1, 1}, {1, -1}}}};

}  // namespace

TEST_CASE("every subcommand runs on a small config") {
  const json quad1 = {{"family", "quadratic"}, {"n", 1}};
  const std::vector<std::pair<std::string, json>> runs = {
      {"legendre", {{"function", {{"family", "ppower"}, {"n", 1}, {"p", 3}}}, {"nodes", 41}}},
      {"mahler-body", {{"input", kSquare}}},
      {"theorem21", {{"family", "quadratic"}, {"n", 1}, {"count", 3}}},
      {"lambda-check", {{"phi", {{"family", "quadratic"}, {"n", 2}}}, {"points", 10}}},
      {"contour", {{"phi", quad1}, {"nodes", 401}}},
      {"kuperberg", {{"body", {{"type", "lp"}, {"n", 1}, {"p", 2}}}}},
      {"suite", {{"profile", "quick"}}},
  };
  CHECK(subcommands().size() == runs.size());
  for (const auto& [name, cfg] : runs) {
    if (name == "suite") continue;  // the battery has its own tests
    CAPTURE(name);
    const Report r = run(name, cfg);
    CHECK(r.subcommand == name);
    CHECK(!r.checks.empty());
    CHECK(r.pass());
    CHECK(r.config.contains("workers"));
    CHECK(r.config.contains("tolerances"));
    for (const auto& c : r.checks) CHECK(!c.reference_kind.empty());
  }
}

TEST_CASE("resolved config echoes defaults and overrides") {
  const Report r = run("mahler-body", {{"input", kSquare}, {"tolerances", {{"sigma_multiplier", 4.0}}}});
  CHECK(r.config["method"] == "exact");
  CHECK(r.config["tolerances"]["sigma_multiplier"] == 4.0);
  CHECK(r.result["mahler"].get<double>() == doctest::Approx(8.0));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(run("nope", json::object()), ParseError);
  CHECK_THROWS_AS(run("mahler-body", {{"input", kSquare}, {"bogus", 1}}), ParseError);
  CHECK_THROWS_AS(run("mahler-body", {{"input", kSquare}, {"tolerances", {{"bogus", 1}}}}), ParseError);
  CHECK_THROWS_AS(run("mahler-body", {{"input", kSquare}, {"method", "guess"}}), ParseError);
  CHECK_THROWS_AS(run("mahler-body", json::object()), ParseError);
  CHECK_THROWS_AS(run("mahler-body", json::array()), ParseError);
  CHECK_THROWS_AS(run("mahler-body", {{"input", "/no/such/file.json"}}), ParseError);
  CHECK_THROWS_AS(run("mahler-body", {{"input", kSquare}, {"workers", 0}}), InvalidArgument);
  CHECK_THROWS_AS(run("mahler-body", {{"input", kSquare}, {"samples", "many"}}), ParseError);
}

TEST_CASE("same seed gives the same report") {
  const json cfg = {{"input", kSquare}, {"method", "mc"}, {"samples", 20000}, {"seed", 7}};
  CHECK(stable(run("mahler-body", cfg)) == stable(run("mahler-body", cfg)));
  const json th = {{"family", "maxaffine"}, {"n", 2}, {"count", 2}, {"seed", 3}};
  CHECK(stable(run("theorem21", th)) == stable(run("theorem21", th)));
}

TEST_CASE("renderings") {
  const Report r = run("theorem21", {{"family", "quadratic"}, {"n", 1}, {"count", 2}});
  CHECK(json::parse(render(r, "json"))["pass"] == true);
  const std::string csv = render(r, "csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(render(r, "plot-data").rfind("#", 0) == 0);
  CHECK_THROWS_AS(render(r, "xml"), ParseError);
}

TEST_CASE("files") {
  const std::string path = "driver_test_out.json";
  write_file_atomic(path, "{\"a\": 1}");
  CHECK(read_json_file(path)["a"] == 1);
  const Report r = run("legendre", {{"function", {{"family", "quadratic"}, {"n", 1}}}, {"nodes", 21}, {"output", path}});
  const json grid = read_json_file(path);
  CHECK(grid["axes"].size() == 1);
  CHECK(!r.result.contains("conjugate"));
  std::remove(path.c_str());
  write_file_atomic(path, "not json");
  CHECK_THROWS_AS(read_json_file(path), ParseError);
  std::remove(path.c_str());
  CHECK_THROWS(write_file_atomic("/no/such/dir/x", "x"));
}
