#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace bmk {

enum class Profile { kQuick, kFull };

Profile profile_from_string(const std::string& s);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string summary;  // the worst observed quantity against its limit
  double seconds = 0;
  double budget_seconds = 0;
  nlohmann::json details;
};

inline constexpr int kCriterionCount = 11;

/// Runs acceptance criterion `id` (1-based). The quick profile keeps n <= 2
/// and shrinks the batches; pass also requires the wall-clock budget.
CriterionResult run_criterion(int id, Profile profile, int workers = 1, std::uint64_t seed = 1);

nlohmann::json to_json(const CriterionResult& r);

}  // namespace bmk
