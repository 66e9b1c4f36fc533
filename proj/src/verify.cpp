#include "zsmg/verify.hpp"

#include "zsmg/best_response.hpp"
#include "zsmg/equilibrium.hpp"
#include "zsmg/eval.hpp"
#include "zsmg/game_library.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace zsmg {

namespace {

struct Suite {
  SuiteResult result;

  explicit Suite(std::string name) {
    result.name = std::move(name);
    result.worst_margin = std::numeric_limits<double>::infinity();
  }

  // margin >= 0 means the (slack-adjusted) inequality held.
  void record(double margin, const std::string& note) {
    ++result.checks;
    if (margin < 0.0) ++result.violations;
    if (margin < result.worst_margin) {
      result.worst_margin = margin;
      result.worst_note = note;
    }
  }
};

Matrix random_logits(SplitMix64& rng, int rows, int cols, double span) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = span * (2.0 * rng.next_double() - 1.0);
  return m;
}

std::string note_for(const std::string& game_name, double tau, const char* what) {
  std::ostringstream os;
  os << what << " on " << game_name << " at tau=" << tau;
  return os.str();
}

}  // namespace

std::vector<SuiteResult> run_lemma_suites(const VerifyOptions& options,
                                          const VerifyHooks& hooks) {
  auto grads = hooks.gradients
                   ? hooks.gradients
                   : [](const MarkovGame& g, const PolicyPair& p, double tau) {
                       return gradients(g, p, tau);
                     };

  std::vector<std::pair<std::string, MarkovGame>> games;
  if (options.include_builtins) {
    games.emplace_back("builtin:mixed", paper_game_mixed());
    games.emplace_back("builtin:deterministic", paper_game_deterministic());
  }
  SplitMix64 dims_rng(options.seed);
  for (int i = 0; i < options.trials; ++i) {
    GeneratorSpec spec;
    spec.kind = i % 2 == 0 ? GameKind::random_general : GameKind::random_mixed_2x2;
    spec.seed = options.seed + 1000 + static_cast<uint64_t>(i);
    spec.n_states = 2 + static_cast<int>(dims_rng.next() % 2);
    spec.n_actions_max = 2 + static_cast<int>(dims_rng.next() % 2);
    spec.n_actions_min = 2 + static_cast<int>(dims_rng.next() % 2);
    std::ostringstream name;
    name << "random#" << i;
    games.emplace_back(name.str(), generate(spec));
  }

  const double slack = 10.0 * options.tol;
  const double br_tol = options.tol / 100.0;

  Suite quad("quadratic_growth");
  Suite sandwich("tau_sandwich");
  Suite pl("pl_condition");
  Suite visit("visitation_bound");
  Suite advid("advantage_identity");
  Suite fd("gradient_fd");

  SplitMix64 rng(options.seed ^ 0x5bd1e995u);
  const double taus[] = {1.0, 0.3, 0.05};

  for (const auto& [name, game] : games) {
    const int na = game.n_actions_max();
    const int nb = game.n_actions_min();
    const double coef_qg_base = game.rho_min() / (2.0 * std::log(2.0));
    const double log_a = std::log(static_cast<double>(na));
    const double log_b = std::log(static_cast<double>(nb));

    for (double tau : taus) {
      const PolicyParams params{random_logits(rng, game.n_states(), na, 3.0),
                                random_logits(rng, game.n_states(), nb, 3.0)};
      const PolicyPair pair = softmax_policies(params);

      // Performance difference (quadratic growth), max player side.
      const BestResponse br_max = soft_best_response_max(game, pair.phi, tau, br_tol);
      {
        const double gap = br_max.j_value - objective(game, pair, tau);
        const double rhs = tau * coef_qg_base * (br_max.policy - pair.pi).squaredNorm();
        quad.record(gap - rhs + slack, note_for(name, tau, "max side"));
      }
      // Min player side.
      const BestResponse br_min = soft_best_response_min(game, pair.pi, tau, br_tol);
      {
        const double lhs = br_min.j_value - objective(game, pair, tau);
        const double rhs = -tau * coef_qg_base * (br_min.policy - pair.phi).squaredNorm();
        quad.record(rhs - lhs + slack, note_for(name, tau, "min side"));
      }

      // Gradient domination, both players.
      {
        const auto [gt, gp] = grads(game, pair, tau);
        const double coef = 2.0 * (1.0 - game.gamma()) * tau *
                            game.rho_min() * game.rho_min() /
                            static_cast<double>(game.n_states());
        const double min_pi = pair.min_pi_entry();
        const double min_phi = pair.min_phi_entry();
        const double gap_max = br_max.j_value - objective(game, pair, tau);
        const double gap_min = objective(game, pair, tau) - br_min.j_value;
        pl.record(gt.squaredNorm() - coef * min_pi * min_pi * gap_max + slack,
                  note_for(name, tau, "theta PL"));
        pl.record(gp.squaredNorm() - coef * min_phi * min_phi * gap_min + slack,
                  note_for(name, tau, "psi PL"));
      }

      // Visitation lower bound and the expected-advantage identity.
      {
        const Vector d = visitation(game, pair);
        double worst = std::numeric_limits<double>::infinity();
        for (int s = 0; s < game.n_states(); ++s)
          worst = std::min(worst,
                           d[s] - (1.0 - game.gamma()) * game.rho()[s] + 1e-12);
        visit.record(worst, note_for(name, tau, "d_rho bound"));

        const Vector v = value_regularized(game, pair, tau);
        const auto adv = advantage(game, pair, tau, v);
        double worst_id = std::numeric_limits<double>::infinity();
        for (int s = 0; s < game.n_states(); ++s) {
          double mean = 0.0;
          for (int a = 0; a < na; ++a)
            for (int b = 0; b < nb; ++b)
              mean += pair.pi(s, a) * pair.phi(s, b) * adv[s](a, b);
          worst_id = std::min(worst_id, 1e-9 - std::abs(mean));
        }
        advid.record(worst_id, note_for(name, tau, "E[A]=0"));
      }

      // Closed-form gradients vs central finite differences.
      {
        const auto [gt, gp] = grads(game, pair, tau);
        const double step = 1e-5;
        double worst = std::numeric_limits<double>::infinity();
        auto probe = [&](char player, int s, int j, double analytic) {
          PolicyParams p = params;
          (player == 't' ? p.theta : p.psi)(s, j) += step;
          const double up = objective(game, softmax_policies(p), tau);
          (player == 't' ? p.theta : p.psi)(s, j) -= 2.0 * step;
          const double down = objective(game, softmax_policies(p), tau);
          const double fd_val = (up - down) / (2.0 * step);
          const double abs_err = std::abs(fd_val - analytic);
          if (abs_err <= 1e-7) return;
          const double rel = abs_err / std::max(std::abs(fd_val), std::abs(analytic));
          worst = std::min(worst, 1e-4 - rel);
        };
        for (int s = 0; s < game.n_states(); ++s) {
          for (int a = 0; a < na; ++a) probe('t', s, a, gt(s, a));
          for (int b = 0; b < nb; ++b) probe('p', s, b, gp(s, b));
        }
        fd.record(worst, note_for(name, tau, "grad vs fd"));
      }
    }

    // Value-difference sandwich in tau, all three tiers (tau' = 0 included).
    const std::pair<double, double> tau_pairs[] = {{1.0, 0.3}, {0.3, 0.0}};
    Vector warm;
    for (const auto& [t_hi, t_lo] : tau_pairs) {
      const double dt = t_hi - t_lo;
      const PolicyParams params{random_logits(rng, game.n_states(), na, 3.0),
                                random_logits(rng, game.n_states(), nb, 3.0)};
      const PolicyPair pair = softmax_policies(params);

      const EquilibriumSolution hi = shapley_solve(game, t_hi, options.tol,
                                                   warm.size() ? &warm : nullptr);
      warm = hi.value_vector;
      const EquilibriumSolution lo = shapley_solve(game, t_lo, options.tol, &warm);
      const double dstar = hi.j_star - lo.j_star;
      sandwich.record(dstar + dt * log_b + slack, note_for(name, t_hi, "J* lower"));
      sandwich.record(dt * log_a - dstar + slack, note_for(name, t_hi, "J* upper"));

      const double dg = g_tau(game, pair.pi, t_hi, br_tol) -
                        g_tau(game, pair.pi, t_lo, br_tol);
      sandwich.record(dg + dt * log_b + slack, note_for(name, t_hi, "g lower"));
      sandwich.record(dt * log_a - dg + slack, note_for(name, t_hi, "g upper"));

      const double dj = objective(game, pair, t_hi) - objective(game, pair, t_lo);
      const double om = 1.0 - game.gamma();
      sandwich.record(dj + dt * log_b / om + slack, note_for(name, t_hi, "J lower"));
      sandwich.record(dt * log_a / om - dj + slack, note_for(name, t_hi, "J upper"));
    }
  }

  return {quad.result, sandwich.result, pl.result,
          visit.result, advid.result, fd.result};
}

}  // namespace zsmg
