#include "zsmg/gda.hpp"

#include "zsmg/best_response.hpp"

#include <cmath>
#include <sstream>

namespace zsmg {

TheoremConstants TheoremConstants::from_game(const MarkovGame& game, double c) {
  if (!(c > 0.0)) throw ValidationError("constant c must be > 0");
  TheoremConstants k;
  k.gamma = game.gamma();
  k.rho_min = game.rho_min();
  k.n_states = game.n_states();
  k.n_actions_max = game.n_actions_max();
  k.n_actions_min = game.n_actions_min();
  k.c = c;
  const double om = 1.0 - k.gamma;
  const double log_a = std::log(static_cast<double>(k.n_actions_max));
  const double log_b = std::log(static_cast<double>(k.n_actions_min));
  k.l_v = 8.0 / (om * om * om);
  k.l_h = (4.0 + 8.0 * log_a) / (om * om * om);
  k.c1 = k.rho_min * c * c / (64.0 * std::log(2.0));
  k.c2 = 2.0 * std::sqrt(static_cast<double>(k.n_states)) /
         (std::sqrt(om * k.rho_min) * c);
  k.l_delta = 4.0 * log_a + 3.0 * log_b + log_b / om;
  return k;
}

void Schedule::validate() const {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0) || !(tau0 > 0.0))
    throw ValidationError("schedule requires alpha0, beta0, tau0 > 0");
  if (a_alpha < 0.0 || a_beta < 0.0 || a_tau < 0.0)
    throw ValidationError("schedule exponents must be >= 0");
  if (!(h >= 1.0)) throw ValidationError("schedule requires h >= 1");
  if (kind == ScheduleKind::piecewise_geometric && !(eta > 0.0 && eta < 1.0))
    throw ValidationError("geometric factor eta must lie in (0,1)");
}

double Schedule::alpha(long k) const {
  return kind == ScheduleKind::polynomial ? alpha0 / std::pow(k + h, a_alpha) : alpha0;
}

double Schedule::beta(long k) const {
  return kind == ScheduleKind::polynomial ? beta0 / std::pow(k + h, a_beta) : beta0;
}

double Schedule::tau(long k) const {
  switch (kind) {
    case ScheduleKind::polynomial:
      return tau0 / std::pow(k + h, a_tau);
    case ScheduleKind::piecewise_geometric:
      return tau0 * std::pow(eta, static_cast<double>(k));
    case ScheduleKind::constant:
      return tau0;
  }
  return tau0;
}

Schedule Schedule::theorem2_preset(double alpha0, double beta0, double tau0, double h) {
  Schedule s;
  s.kind = ScheduleKind::polynomial;
  s.alpha0 = alpha0;
  s.beta0 = beta0;
  s.tau0 = tau0;
  s.a_alpha = 2.0 / 3.0;
  s.a_beta = 0.0;
  s.a_tau = 1.0 / 3.0;
  s.h = h;
  s.validate();
  return s;
}

PolicyParams gda_step(const MarkovGame& game, const PolicyParams& params,
                      double alpha, double beta, double tau) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw ValidationError("step sizes must be finite and >= 0");
  if (!(tau >= 0.0)) throw ValidationError("tau must be >= 0");

  const EvalResult at_k = evaluate(game, softmax_policies(params), tau);
  PolicyParams next;
  next.theta = params.theta + alpha * at_k.grad_theta;
  if (!next.theta.allFinite()) throw NumericalError("max-player update diverged");

  const EvalResult at_half =
      evaluate(game, softmax_policies({next.theta, params.psi}), tau);
  next.psi = params.psi - beta * at_half.grad_psi;
  if (!next.psi.allFinite()) throw NumericalError("min-player update diverged");
  return next;
}

namespace {

Matrix renormalized_rows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index s = 0; s < out.rows(); ++s) out.row(s) /= out.row(s).sum();
  return out;
}

IterateRecord make_record(const MarkovGame& game, const PolicyPair& pair,
                          const EvalResult& ev, long k, double tau, double alpha,
                          double beta, bool oracles, const RunOptions& opt,
                          EquilibriumCache& cache) {
  IterateRecord rec;
  rec.k = k;
  rec.tau = tau;
  rec.alpha = alpha;
  rec.beta = beta;
  rec.min_pi = pair.min_pi_entry();
  rec.min_phi = pair.min_phi_entry();
  rec.grad_theta_norm = ev.grad_theta.norm();
  rec.grad_psi_norm = ev.grad_psi.norm();
  if (opt.ref_pi && opt.ref_phi)
    rec.dist_to_ne = std::max((pair.pi - *opt.ref_pi).cwiseAbs().maxCoeff(),
                              (pair.phi - *opt.ref_phi).cwiseAbs().maxCoeff());
  if (oracles && opt.oracle_metrics) {
    if (tau > 0.0) {
      auto [dpi, dphi] = compute_deltas(game, pair, tau, cache, opt.oracle_tol);
      rec.delta_pi = dpi;
      rec.delta_phi = dphi;
      rec.composite = 3.0 * dpi + dphi;
    }
    auto [gmax, gmin] = compute_unregularized_gaps(game, pair, cache, opt.oracle_tol);
    rec.gap_max_unreg = gmax;
    rec.gap_min_unreg = gmin;
  }
  return rec;
}

struct LoopSpec {
  std::function<double(long)> alpha, beta, tau;
  long max_iters = 0;
  long k_offset = 0;  // global index of this segment's first iterate
  bool average = false;
  std::optional<double> target_composite;
};

struct LoopOutcome {
  Termination termination = Termination::completed;
  long iters_done = 0;
  std::optional<double> last_composite;
};

// Shared single-loop driver for all GDA variants. Appends records to
// result.log (and avg_log when averaging); leaves params at the last finite
// iterate.
LoopOutcome run_loop(const MarkovGame& game, PolicyParams& params, const LoopSpec& spec,
                     const RunOptions& opt, EquilibriumCache& cache, RunResult& result,
                     const StepCallback& callback) {
  LoopOutcome outcome;
  PolicyPair pair = softmax_policies(params);
  EvalResult ev = evaluate(game, pair, spec.tau(0));

  Matrix avg_pi, avg_phi;
  if (spec.average) {
    avg_pi = pair.pi;
    avg_phi = pair.phi;
  }

  auto emit_avg = [&](long k, double alpha_k, double beta_k, bool oracles) {
    const PolicyPair avg_pair = PolicyPair::from_policies(renormalized_rows(avg_pi),
                                                          renormalized_rows(avg_phi));
    const EvalResult avg_ev = evaluate(game, avg_pair, 0.0);
    result.avg_log.push_back(
        make_record(game, avg_pair, avg_ev, k, 0.0, alpha_k, beta_k, oracles, opt, cache));
  };

  long k = 0;
  bool stop = false;
  for (; k < spec.max_iters && !stop; ++k) {
    const double alpha_k = spec.alpha(k), beta_k = spec.beta(k), tau_k = spec.tau(k);
    const bool oracles = k % opt.log_every == 0;
    const bool record = oracles || k % opt.record_every == 0;
    if (record) {
      IterateRecord rec = make_record(game, pair, ev, spec.k_offset + k, tau_k, alpha_k,
                                      beta_k, oracles, opt, cache);
      if (rec.composite) outcome.last_composite = rec.composite;
      result.log.push_back(rec);
      if (callback) callback(rec, params);
      if (spec.average) emit_avg(spec.k_offset + k, alpha_k, beta_k, oracles);
      if (spec.target_composite && rec.composite &&
          *rec.composite <= *spec.target_composite) {
        outcome.termination = Termination::completed;
        outcome.iters_done = k;
        return outcome;
      }
    }

    try {
      params.theta += alpha_k * ev.grad_theta;
      if (!params.theta.allFinite()) throw NumericalError("max-player update diverged");
      const EvalResult at_half =
          evaluate(game, softmax_policies(params), tau_k);
      params.psi -= beta_k * at_half.grad_psi;
      if (!params.psi.allFinite()) throw NumericalError("min-player update diverged");
      pair = softmax_policies(params);
      ev = evaluate(game, pair, spec.tau(k + 1));
    } catch (const std::exception& e) {
      result.warnings.push_back("diverged at iteration " +
                                std::to_string(spec.k_offset + k) + ": " + e.what());
      outcome.termination = Termination::diverged;
      outcome.iters_done = k;
      return outcome;
    }

    if (spec.average) {
      const double w = 1.0 / static_cast<double>(k + 2);  // mean over iterates 0..k+1
      avg_pi += w * (pair.pi - avg_pi);
      avg_phi += w * (pair.phi - avg_phi);
    }
  }

  // Final iterate, always with oracle metrics.
  const long kf = spec.max_iters;
  IterateRecord rec = make_record(game, pair, ev, spec.k_offset + kf, spec.tau(kf),
                                  spec.alpha(kf), spec.beta(kf), true, opt, cache);
  if (rec.composite) outcome.last_composite = rec.composite;
  result.log.push_back(rec);
  if (callback) callback(rec, params);
  if (spec.average) emit_avg(spec.k_offset + kf, spec.alpha(kf), spec.beta(kf), true);

  outcome.iters_done = kf;
  outcome.termination = spec.target_composite && outcome.last_composite &&
                                *outcome.last_composite > *spec.target_composite
                            ? Termination::max_iters
                            : Termination::completed;
  return outcome;
}

}  // namespace

RunResult run_fixed_tau(const MarkovGame& game, const PolicyParams& params0, double tau,
                        double alpha, double beta, long max_iters,
                        const RunOptions& options, EquilibriumCache* cache,
                        const StepCallback& callback,
                        std::optional<double> target_composite) {
  if (!(tau > 0.0)) throw ValidationError("run_fixed_tau requires tau > 0");
  EquilibriumCache local(game, options.oracle_tol);
  EquilibriumCache& eq = cache ? *cache : local;

  RunResult result;
  result.params_final = params0;
  LoopSpec spec;
  spec.alpha = [alpha](long) { return alpha; };
  spec.beta = [beta](long) { return beta; };
  spec.tau = [tau](long) { return tau; };
  spec.max_iters = max_iters;
  spec.target_composite = target_composite;
  const LoopOutcome out =
      run_loop(game, result.params_final, spec, options, eq, result, callback);
  result.termination = out.termination;
  result.wall_iterations = out.iters_done;
  return result;
}

RunResult run_algorithm2(const MarkovGame& game, const Schedule& schedule,
                         long max_iters, const RunOptions& options,
                         EquilibriumCache* cache, const StepCallback& callback) {
  schedule.validate();
  if (schedule.kind == ScheduleKind::piecewise_geometric)
    throw ValidationError("diminishing-weight algorithm takes a constant or polynomial schedule");
  EquilibriumCache local(game, options.oracle_tol);
  EquilibriumCache& eq = cache ? *cache : local;

  RunResult result;
  result.params_final = PolicyParams::zeros(game);
  LoopSpec spec;
  spec.alpha = [&schedule](long k) { return schedule.alpha(k); };
  spec.beta = [&schedule](long k) { return schedule.beta(k); };
  spec.tau = [&schedule](long k) { return schedule.tau(k); };
  spec.max_iters = max_iters;
  const LoopOutcome out =
      run_loop(game, result.params_final, spec, options, eq, result, callback);
  result.termination = out.termination;
  result.wall_iterations = out.iters_done;
  return result;
}

RunResult run_vanilla_gda(const MarkovGame& game, double alpha, double beta,
                          long max_iters, bool average, const RunOptions& options,
                          EquilibriumCache* cache) {
  EquilibriumCache local(game, options.oracle_tol);
  EquilibriumCache& eq = cache ? *cache : local;

  RunResult result;
  result.params_final = PolicyParams::zeros(game);
  LoopSpec spec;
  spec.alpha = [alpha](long) { return alpha; };
  spec.beta = [beta](long) { return beta; };
  spec.tau = [](long) { return 0.0; };
  spec.max_iters = max_iters;
  spec.average = average;
  const LoopOutcome out =
      run_loop(game, result.params_final, spec, options, eq, result, nullptr);
  result.termination = out.termination;
  result.wall_iterations = out.iters_done;
  return result;
}

StepsizeReport check_theorem1_stepsizes(const TheoremConstants& k, double tau,
                                        double alpha, double beta) {
  if (!(tau > 0.0)) throw ValidationError("tau must be > 0");
  const double big_l = k.l(tau);
  const double om = 1.0 - k.gamma;
  const double s = static_cast<double>(k.n_states);
  const double ratio_cap =
      std::min(om * std::pow(k.rho_min, 3) * k.c * k.c * tau * tau /
                   (152.0 * std::log(2.0) * s * big_l * big_l),
               8.0);
  const double alpha_cap1 = 1.0 / (big_l + k.c2 * big_l * big_l / tau);
  const double alpha_cap2 = 16.0 * s / (om * k.rho_min * k.rho_min * k.c * k.c * tau);

  StepsizeReport report;
  report.checks = {
      {"max{alpha,beta} <= 1/L", std::max(alpha, beta), 1.0 / big_l, false},
      {"alpha/beta <= min{(1-g)rho^3c^2tau^2/(152log2|S|L^2), 8}", alpha / beta,
       ratio_cap, false},
      {"alpha <= (L + C2 L^2/tau)^-1", alpha, alpha_cap1, false},
      {"alpha <= 16|S|/((1-g)rho^2c^2tau)", alpha, alpha_cap2, false},
  };
  report.ok = true;
  for (auto& c : report.checks) {
    c.ok = c.lhs <= c.rhs;
    report.ok = report.ok && c.ok;
  }
  return report;
}

std::pair<double, double> theorem1_feasible_stepsizes(const TheoremConstants& k,
                                                      double tau) {
  const double big_l = k.l(tau);
  const double om = 1.0 - k.gamma;
  const double s = static_cast<double>(k.n_states);
  const double beta = 1.0 / (2.0 * big_l);
  const double ratio_cap =
      std::min(om * std::pow(k.rho_min, 3) * k.c * k.c * tau * tau /
                   (152.0 * std::log(2.0) * s * big_l * big_l),
               8.0);
  double alpha = beta * ratio_cap;
  alpha = std::min(alpha, 1.0 / (big_l + k.c2 * big_l * big_l / tau));
  alpha = std::min(alpha, 16.0 * s / (om * k.rho_min * k.rho_min * k.c * k.c * tau));
  alpha = std::min(alpha, beta);
  return {alpha, beta};
}

InitialConditionReport check_initial_condition(const MarkovGame& game,
                                               const PolicyParams& params0, double tau,
                                               const TheoremConstants& consts, double tol,
                                               EquilibriumCache* cache) {
  if (!(tau > 0.0)) throw ValidationError("tau must be > 0");
  EquilibriumCache local(game, tol);
  EquilibriumCache& eq = cache ? *cache : local;
  const PolicyPair pair = softmax_policies(params0);
  auto [dpi, dphi] = compute_deltas(game, pair, tau, eq, tol);
  InitialConditionReport rep;
  rep.delta_pi = dpi;
  rep.delta_phi = dphi;
  rep.lhs = 3.0 * dpi + dphi;
  rep.rhs = consts.c1 * tau;
  rep.satisfied = rep.lhs <= rep.rhs;
  return rep;
}

double find_initial_tau(const MarkovGame& game, const PolicyParams& params0,
                        double tau_start, const TheoremConstants& consts, double tol,
                        EquilibriumCache* cache, int max_doublings) {
  double tau = tau_start;
  for (int i = 0; i < max_doublings; ++i) {
    if (check_initial_condition(game, params0, tau, consts, tol, cache).satisfied)
      return tau;
    tau *= 2.0;
  }
  throw NumericalError("initial condition not satisfied after " +
                       std::to_string(max_doublings) + " doublings of tau");
}

RunResult run_algorithm1(const MarkovGame& game, const TheoremConstants& consts,
                         const Algorithm1Options& algo, const RunOptions& options,
                         EquilibriumCache* cache) {
  if (!(algo.tau0 > 0.0)) throw ValidationError("tau0 must be > 0");
  const double eta = algo.eta.value_or(consts.corollary_eta());
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("eta must lie in (0,1)");

  EquilibriumCache local(game, options.oracle_tol);
  EquilibriumCache& eq = cache ? *cache : local;

  // Proof-shaped defaults: alpha ~ 1/tau above tau = 1 and ~ tau^2 below,
  // anchored so that alpha(tau0) = alpha_scale.
  const auto shape = [](double tau) { return tau >= 1.0 ? 1.0 / tau : tau * tau; };
  const double anchor = shape(algo.tau0);
  auto alpha_rule = algo.alpha_rule
                        ? algo.alpha_rule
                        : [&, anchor](int, double tau_t) {
                            return algo.alpha_scale * shape(tau_t) / anchor;
                          };
  auto beta_rule = algo.beta_rule ? algo.beta_rule : [&](int t, double tau_t) {
    return alpha_rule(t, tau_t) / algo.alpha_beta_ratio;
  };

  RunResult result;
  result.params_final = PolicyParams::zeros(game);

  RunOptions inner_opt = options;
  inner_opt.log_every = algo.check_every;
  inner_opt.record_every = algo.check_every;

  double tau_t = algo.tau0;
  long global_k = 0;
  for (int t = 0; t < algo.outer_iters; ++t) {
    const double alpha_t = alpha_rule(t, tau_t);
    const double beta_t = beta_rule(t, tau_t);

    const PolicyPair pair = softmax_policies(result.params_final);
    auto [dpi0, dphi0] = compute_deltas(game, pair, tau_t, eq, options.oracle_tol);
    const double comp0 = 3.0 * dpi0 + dphi0;

    LoopSpec spec;
    spec.alpha = [alpha_t](long) { return alpha_t; };
    spec.beta = [beta_t](long) { return beta_t; };
    spec.tau = [tau_t](long) { return tau_t; };
    spec.max_iters = algo.stage_cap;
    spec.k_offset = global_k;
    spec.target_composite = algo.halving_factor * comp0;

    const LoopOutcome out =
        run_loop(game, result.params_final, spec, inner_opt, eq, result, nullptr);
    if (out.termination == Termination::diverged) {
      result.termination = Termination::diverged;
      result.wall_iterations = global_k + out.iters_done;
      return result;
    }

    StageInfo stage;
    stage.t = t;
    stage.tau = tau_t;
    stage.alpha = alpha_t;
    stage.beta = beta_t;
    stage.iterations = out.iters_done;
    stage.composite_start = comp0;
    stage.composite_end = out.last_composite.value_or(comp0);
    stage.halved = out.termination == Termination::completed;
    result.stages.push_back(stage);
    if (!stage.halved) {
      std::ostringstream os;
      os << "stage " << t << ": cap " << algo.stage_cap
         << " hit before halving (composite " << stage.composite_start << " -> "
         << stage.composite_end << ")";
      result.warnings.push_back(os.str());
    }

    global_k += out.iters_done;
    tau_t *= eta;
  }
  result.termination = Termination::completed;
  result.wall_iterations = global_k;
  return result;
}

Theorem2Schedule schedule_from_theorem2(const TheoremConstants& k, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
  const double om = 1.0 - k.gamma;
  const double s = static_cast<double>(k.n_states);
  const double log_a = std::log(static_cast<double>(k.n_actions_max));
  const double log_b = std::log(static_cast<double>(k.n_actions_min));
  const double d1 = om * k.rho_min * k.rho_min * k.c * k.c / (32.0 * s);
  const double d2 = 32.0 * (log_a + log_b) / (3.0 * om);

  // With tau0 = lambda h^(1/3) the smoothness condition's right-hand side is
  // constant in h while the left-hand side decays like 1/h.
  const double rhs = (2.0 * k.l_h + 4.0 * k.l_h * k.l_h * k.c2) * lambda +
                     (k.l_h + 4.0 * k.l_h * k.l_h * k.c2) +
                     k.l_h * k.l_h * k.c2 / lambda;

  Theorem2Schedule out;
  out.lambda = lambda;
  double h = 1.0;
  double tau0 = 0.0, alpha0 = 0.0;
  bool found = false;
  for (int i = 0; i < 400; ++i) {
    tau0 = lambda * std::cbrt(h);
    alpha0 = (1.0 + d2 / k.c1) / (d1 * tau0);
    if (alpha0 / std::pow(h, 2.0 / 3.0) <= rhs) {
      found = true;
      break;
    }
    h *= 2.0;
  }

  const double l0 = k.l_h * (2.0 * tau0 + 1.0);
  const double ratio_cap = std::min(
      om * tau0 * tau0 * std::pow(k.rho_min, 3) * k.c * k.c /
          (152.0 * std::log(2.0) * s * l0 * l0),
      1.0);
  out.beta_lower = alpha0 / ratio_cap;
  out.beta_upper = 1.0 / l0;
  out.feasible = found && out.beta_lower <= out.beta_upper;
  const double beta0 = out.feasible ? out.beta_upper : out.beta_lower;
  out.schedule = Schedule::theorem2_preset(alpha0, beta0, tau0, h);
  out.initial_condition_rhs = k.c1 * lambda;
  return out;
}

EnvelopeReport check_theorem2_envelope(const std::vector<IterateRecord>& log,
                                       const TheoremConstants& k,
                                       const Schedule& schedule, double tol) {
  EnvelopeReport rep;
  const double log_a = std::log(static_cast<double>(k.n_actions_max));
  const double log_b = std::log(static_cast<double>(k.n_actions_min));
  const double om = 1.0 - k.gamma;

  auto unmet = [&rep](const std::string& why) {
    rep.hypotheses_met = false;
    rep.note = "hypotheses unmet: " + why;
    return rep;
  };

  if (schedule.kind != ScheduleKind::polynomial ||
      std::abs(schedule.a_alpha - 2.0 / 3.0) > 1e-12 || schedule.a_beta != 0.0 ||
      std::abs(schedule.a_tau - 1.0 / 3.0) > 1e-12)
    return unmet("schedule exponents are not (2/3, 0, 1/3)");

  const double s = static_cast<double>(k.n_states);
  const double d1 = om * k.rho_min * k.rho_min * k.c * k.c / (32.0 * s);
  const double d2 = 32.0 * (log_a + log_b) / (3.0 * om);
  const double alpha0_req = (1.0 + d2 / k.c1) / (d1 * schedule.tau0);
  if (std::abs(schedule.alpha0 - alpha0_req) > 1e-9 * alpha0_req)
    return unmet("alpha0 does not solve the D1/D2/C1 identity");

  const double l0 = k.l_h * (2.0 * schedule.tau0 + 1.0);
  const double ratio_cap = std::min(
      om * schedule.tau0 * schedule.tau0 * std::pow(k.rho_min, 3) * k.c * k.c /
          (152.0 * std::log(2.0) * s * l0 * l0),
      1.0);
  if (schedule.beta0 > 1.0 / l0 * (1.0 + 1e-12) ||
      schedule.alpha0 / schedule.beta0 > ratio_cap * (1.0 + 1e-12))
    return unmet("beta0 outside its admissible interval");

  if (log.empty() || log.front().k != 0 || !log.front().delta_pi ||
      !log.front().delta_phi)
    return unmet("k=0 deltas not logged");
  const double lhs0 = *log.front().delta_pi + *log.front().delta_phi;
  if (lhs0 > k.c1 * schedule.tau0 / std::cbrt(schedule.h))
    return unmet("initial condition delta_pi0 + delta_phi0 <= C1 tau0 / h^(1/3) fails");

  rep.hypotheses_met = true;
  const double num_max = (k.c1 + 3.0 * (log_a + log_b)) * schedule.tau0 / 3.0;
  const double num_min = ((om * k.c1 + (log_a + log_b)) * schedule.tau0) / om;
  for (const IterateRecord& rec : log) {
    if (!rec.gap_max_unreg || !rec.gap_min_unreg) continue;
    ++rep.checked;
    const double kh = std::cbrt(static_cast<double>(rec.k) + schedule.h);
    if (*rec.gap_max_unreg > num_max / kh + 10.0 * tol ||
        *rec.gap_min_unreg > num_min / kh + 10.0 * tol)
      ++rep.violations;
  }
  return rep;
}

}  // namespace zsmg
