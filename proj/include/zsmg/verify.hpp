#pragma once

#include "zsmg/game.hpp"

#include <functional>
#include <string>
#include <vector>

namespace zsmg {

struct VerifyOptions {
  int trials = 25;       // seeded random games on top of the two builtins
  uint64_t seed = 7;
  double tol = 1e-8;     // oracle tolerance; inequalities get 10*tol slack
  bool include_builtins = true;
};

struct SuiteResult {
  std::string name;
  long checks = 0;
  long violations = 0;
  double worst_margin = 0.0;  // min slack seen; negative means a violation
  std::string worst_note;
};

// Injection point for mutation-sanity tests: replaces the closed-form
// policy-gradient provider used by the PL and finite-difference suites.
struct VerifyHooks {
  std::function<std::pair<Matrix, Matrix>(const MarkovGame&, const PolicyPair&, double)>
      gradients;
};

// Numerical verification of the structural inequalities over random games
// plus the builtins:
//   quadratic_growth   - performance-difference bounds, both players
//   tau_sandwich       - the three value-difference tiers in tau
//   pl_condition       - gradient-domination bounds, both players
//   visitation_bound   - d_rho >= (1-gamma) rho entrywise
//   advantage_identity - expected advantage vanishes per state
//   gradient_fd        - closed forms vs central finite differences
std::vector<SuiteResult> run_lemma_suites(const VerifyOptions& options,
                                          const VerifyHooks& hooks = {});

}  // namespace zsmg
