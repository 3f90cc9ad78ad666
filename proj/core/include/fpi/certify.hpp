#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fpi {

/// Outcome of one numbered certification check run at its pinned
/// configuration and tolerance.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;      // headline measurement
  double threshold = 0.0;  // pinned bound the measurement is compared against
  double seconds = 0.0;
  std::string detail;
};

/// Runs one check by id (1..9); throws std::invalid_argument for other ids.
CriterionResult run_criterion(int id, std::uint64_t seed);

/// Runs the listed checks in order.
std::vector<CriterionResult> run_certification(const std::vector<int>& ids,
                                               std::uint64_t seed);

/// One-line "PASS"/"FAIL" rendering used by the command line and the
/// acceptance runner.
std::string criterion_line(const CriterionResult& r);

}  // namespace fpi
