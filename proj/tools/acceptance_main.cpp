// Acceptance battery: one line per criterion, exit 0 iff every selected
// criterion passes.
#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmk/bmk.h"

int main(int argc, char** argv) {
  CLI::App app{"Runs the acceptance criteria through the bmk library."};
  std::string profile = "full";
  std::vector<int> only;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string json_path;
  app.add_option("--profile", profile, "quick | full")->check(CLI::IsMember({"quick", "full"}));
  app.add_option("--only", only, "Criterion ids to run (default: all)")->check(CLI::Range(1, bmk_criterion_count()));
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--workers", workers, "Worker threads")->envname("BMK_WORKERS")->check(CLI::PositiveNumber);
  app.add_option("--json", json_path, "Also write all results as a JSON array");
  CLI11_PARSE(app, argc, argv);

  std::set<int> ids(only.begin(), only.end());
  if (ids.empty())
    for (int i = 1; i <= bmk_criterion_count(); ++i) ids.insert(i);

  nlohmann::json all = nlohmann::json::array();
  int failed = 0;
  for (int id : ids) {
    bmk_report* rep = nullptr;
    const bmk_status s = bmk_criterion(id, profile.c_str(), workers, seed, &rep);
    char line[64];
    if (!rep) {
      std::snprintf(line, sizeof line, "criterion %2d: FAIL  ", id);
      std::cout << line << "error " << bmk_last_error() << std::endl;
      ++failed;
      continue;
    }
    const auto j = nlohmann::json::parse(bmk_report_json(rep));
    bmk_report_free(rep);
    if (s != BMK_OK) ++failed;
    std::snprintf(line, sizeof line, "criterion %2d: %s  ", id, s == BMK_OK ? "PASS" : "FAIL");
    char time[64];
    std::snprintf(time, sizeof time, " (%.1fs of %.0fs)", j.value("seconds", 0.0), j.value("budget_seconds", 0.0));
    std::cout << line << j.value("title", "") << ": " << j.value("summary", "") << time << std::endl;
    all.push_back(j);
  }
  std::cout << (ids.size() - failed) << "/" << ids.size() << " criteria passed" << std::endl;
  if (!json_path.empty() && bmk_write_file(json_path.c_str(), (all.dump(2) + "\n").c_str()) != BMK_OK) {
    std::cerr << bmk_last_error() << "\n";
    return 3;
  }
  return failed == 0 ? 0 : 1;
}
