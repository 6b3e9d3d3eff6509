#pragma once

// Self-contained verification suite: each criterion runs a scaled-down
// numerical experiment and compares against a fixed threshold.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sglab {

struct CriterionResult {
  int id = 0;
  std::string name;
  /// "PASS", "FAIL" or "SKIP".
  std::string status;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct AcceptanceOptions {
  /// Skip the long time-integration criteria (3, 4, 9).
  bool quick = false;
  std::uint64_t seed = 1;
  /// Restrict to these ids; empty runs all.
  std::vector<int> only;
  /// Called after each criterion.
  std::function<void(const CriterionResult&)> on_result;
};

inline constexpr int kCriterionCount = 11;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// One line per criterion: "PASS  [ 3] name (12.3 s) detail".
std::string format_result(const CriterionResult& r);

}  // namespace sglab
