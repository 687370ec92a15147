#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stab {

// ============================================================================
// End-to-end verification suite: nine numbered checks tying the analytic
// criteria to simulation, each with pinned tolerances and a runtime budget.
// Deterministic given the root seed.
// ============================================================================

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  // measured values, or the first failure
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  std::vector<int> criteria;               // empty = all
  std::map<int, double> tolerance_scale;   // id -> factor on the pinned tolerance
};

[[nodiscard]] std::vector<std::pair<int, std::string>> list_criteria();

[[nodiscard]] std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});

}  // namespace stab
