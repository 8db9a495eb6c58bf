#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spikenet/core.hpp"

namespace spikenet {

inline constexpr int kCriterionCount = 14;

const char* criterion_name(int id);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::string metrics_json;  // JSON object with the measured quantities
};

struct ValidationOptions {
  /// Criterion ids to run; empty runs all.
  std::vector<int> only;
  unsigned workers = 1;
  /// Replacement for the reproduction number everywhere the suite labels a
  /// regime or checks theta. Used for fault injection.
  std::function<double(const ModelParams&)> theta;
  /// Scratch space for the determinism runs; a temporary directory if empty.
  std::filesystem::path scratch_dir;
  /// Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

struct ValidationReport {
  std::vector<CriterionResult> results;
  bool all_passed() const noexcept;
  std::string to_json() const;
};

/// Runs the acceptance criteria with their pinned configurations.
ValidationReport validate(const ValidationOptions& options = {});

}  // namespace spikenet
