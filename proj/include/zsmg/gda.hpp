#pragma once

#include "zsmg/equilibrium.hpp"
#include "zsmg/eval.hpp"
#include "zsmg/game.hpp"
#include "zsmg/metrics.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace zsmg {

// Constants of the convergence analysis, computed from game structure plus
// the (estimated or supplied) uniform QRE lower bound c.
struct TheoremConstants {
  double gamma = 0.0;
  double rho_min = 0.0;
  int n_states = 0;
  int n_actions_max = 0;
  int n_actions_min = 0;
  double c = 0.0;

  double l_v = 0.0;      // 8/(1-gamma)^3
  double l_h = 0.0;      // (4 + 8 log|A|)/(1-gamma)^3
  double c1 = 0.0;       // rho_min c^2 / (64 log 2)
  double c2 = 0.0;       // 2 sqrt|S| / (sqrt((1-gamma) rho_min) c)
  double l_delta = 0.0;  // 4 log|A| + 3 log|B| + log|B|/(1-gamma)

  double l(double tau) const { return 3.0 * l_h * std::max(tau, 1.0); }
  // eta for the nested-loop algorithm: (C1 + 2 L_delta) / (2 C1 + 2 L_delta).
  double corollary_eta() const { return (c1 + 2.0 * l_delta) / (2.0 * c1 + 2.0 * l_delta); }

  static TheoremConstants from_game(const MarkovGame& game, double c);
};

enum class ScheduleKind { constant, polynomial, piecewise_geometric };

// Step-size / regularization sequences. polynomial yields
// alpha_k = alpha0/(k+h)^{a_alpha} and likewise for beta, tau.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double alpha0 = 0.0, beta0 = 0.0, tau0 = 0.0;
  double a_alpha = 0.0, a_beta = 0.0, a_tau = 0.0;
  double h = 1.0;
  double eta = 0.5;  // geometric factor, nested-loop algorithm only

  double alpha(long k) const;
  double beta(long k) const;
  double tau(long k) const;
  void validate() const;

  static Schedule theorem2_preset(double alpha0, double beta0, double tau0, double h);
};

enum class Termination { completed, max_iters, diverged };

// Per-outer-stage summary of the nested-loop algorithm.
struct StageInfo {
  int t = 0;
  double tau = 0.0, alpha = 0.0, beta = 0.0;
  long iterations = 0;  // K_t
  double composite_start = 0.0, composite_end = 0.0;
  bool halved = false;
};

struct RunResult {
  PolicyParams params_final;
  std::vector<IterateRecord> log;
  std::vector<IterateRecord> avg_log;  // populated by vanilla GDA with averaging
  Termination termination = Termination::completed;
  long wall_iterations = 0;
  std::vector<StageInfo> stages;  // nested-loop algorithm only
  std::vector<std::string> warnings;
};

struct RunOptions {
  long log_every = 50;        // oracle-metric cadence; k=0 and final always
  long record_every = 1;      // cheap-record cadence (1 = every iteration)
  double oracle_tol = 1e-8;
  bool oracle_metrics = true;
  const Matrix* ref_pi = nullptr;  // reference NE for the dist_to_ne column
  const Matrix* ref_phi = nullptr;
};

using StepCallback = std::function<void(const IterateRecord&, const PolicyParams&)>;

// One update of Eq-(7) order: theta moves on the gradient at (theta_k, psi_k);
// psi then moves on the gradient evaluated at (theta_{k+1}, psi_k).
// Throws NumericalError on non-finite gradients (divergence).
PolicyParams gda_step(const MarkovGame& game, const PolicyParams& params,
                      double alpha, double beta, double tau);

// Constant-(alpha, beta, tau) GDA. params0 = zeros gives uniform initial
// policies. If target_composite is set, stops once 3*delta_pi + delta_phi
// falls to it (checked every options.log_every iterations) and reports
// Termination::max_iters when the budget runs out first.
RunResult run_fixed_tau(const MarkovGame& game, const PolicyParams& params0,
                        double tau, double alpha, double beta, long max_iters,
                        const RunOptions& options = {},
                        EquilibriumCache* cache = nullptr,
                        const StepCallback& callback = nullptr,
                        std::optional<double> target_composite = std::nullopt);

struct ConstraintCheck {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  bool ok = false;
};

struct StepsizeReport {
  bool ok = false;
  std::vector<ConstraintCheck> checks;
};

// Literal evaluation of the fixed-tau step-size conditions.
StepsizeReport check_theorem1_stepsizes(const TheoremConstants& consts, double tau,
                                        double alpha, double beta);

// A feasible (alpha, beta) inside the step-size box, for tests and the CLI.
std::pair<double, double> theorem1_feasible_stepsizes(const TheoremConstants& consts,
                                                      double tau);

struct InitialConditionReport {
  bool satisfied = false;
  double lhs = 0.0;  // 3 delta_pi_0 + delta_phi_0
  double rhs = 0.0;  // C1 tau
  double delta_pi = 0.0, delta_phi = 0.0;
};

InitialConditionReport check_initial_condition(const MarkovGame& game,
                                               const PolicyParams& params0, double tau,
                                               const TheoremConstants& consts, double tol,
                                               EquilibriumCache* cache = nullptr);

// Doubles tau from tau_start until the initial condition holds (guaranteed
// to terminate since the deltas grow sublinearly in tau).
double find_initial_tau(const MarkovGame& game, const PolicyParams& params0,
                        double tau_start, const TheoremConstants& consts, double tol,
                        EquilibriumCache* cache = nullptr, int max_doublings = 200);

// Nested-loop algorithm: inner GDA at fixed tau_t until the composite halves
// (or the stage cap fires, recorded as a warning), then tau_{t+1} = eta tau_t
// with warm-started parameters.
struct Algorithm1Options {
  double tau0 = 1.0;
  std::optional<double> eta;  // default: consts.corollary_eta()
  int outer_iters = 8;
  long stage_cap = 100'000;
  long check_every = 10;        // composite monitoring cadence inside a stage
  double halving_factor = 0.5;
  // Step-size rules (t, tau_t) -> step. The defaults follow the proof
  // scalings alpha ~ 1/tau above tau = 1 and alpha ~ tau^2 below, anchored
  // at a practical alpha_scale, with beta_t = alpha_t / alpha_beta_ratio.
  std::function<double(int, double)> alpha_rule;
  std::function<double(int, double)> beta_rule;
  double alpha_scale = 1e-3;
  double alpha_beta_ratio = 0.1;
};

RunResult run_algorithm1(const MarkovGame& game, const TheoremConstants& consts,
                         const Algorithm1Options& algo, const RunOptions& options = {},
                         EquilibriumCache* cache = nullptr);

// Single-loop algorithm with diminishing regularization: at iteration k both
// gradient evaluations use tau_k from the schedule.
RunResult run_algorithm2(const MarkovGame& game, const Schedule& schedule,
                         long max_iters, const RunOptions& options = {},
                         EquilibriumCache* cache = nullptr,
                         const StepCallback& callback = nullptr);

// Unregularized GDA baseline; with average set, equal-weight running means
// of the policy matrices are tracked and logged to avg_log.
RunResult run_vanilla_gda(const MarkovGame& game, double alpha, double beta,
                          long max_iters, bool average,
                          const RunOptions& options = {},
                          EquilibriumCache* cache = nullptr);

// Feasibility search for the diminishing-weight schedule: fix lambda, set
// tau0 = lambda h^(1/3), solve alpha0 from the D1/D2/C1 identity, grow h
// until the smoothness condition holds, then place beta0 in its interval.
struct Theorem2Schedule {
  Schedule schedule;
  double lambda = 0.0;
  double beta_lower = 0.0, beta_upper = 0.0;
  bool feasible = false;
  double initial_condition_rhs = 0.0;  // C1 lambda, bound on delta_pi0+delta_phi0
};

Theorem2Schedule schedule_from_theorem2(const TheoremConstants& consts, double lambda);

// Checks the logged unregularized gaps against the k^(-1/3) envelopes when
// the schedule hypotheses hold; reports "hypotheses unmet" otherwise.
struct EnvelopeReport {
  bool hypotheses_met = false;
  std::string note;
  long checked = 0;
  long violations = 0;
};

EnvelopeReport check_theorem2_envelope(const std::vector<IterateRecord>& log,
                                       const TheoremConstants& consts,
                                       const Schedule& schedule, double tol);

}  // namespace zsmg
