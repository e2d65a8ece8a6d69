#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace precopt {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// scale < 1 shrinks instance counts and sampling budgets proportionally
// (floored at usable minimums); tolerances never change.
struct VerifyBudget {
  double scale = 1.0;
};

// The cross-module verification suite: oracle chains, derivative
// consistency, stationarity, structural and scaling laws, determinism.
// Progress lines go to `progress` as each check finishes, when given.
std::vector<CheckResult> run_verification_suite(const VerifyBudget& budget,
                                                std::ostream* progress = nullptr);

}  // namespace precopt
