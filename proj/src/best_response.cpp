#include "zsmg/best_response.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace zsmg {

namespace {

// One-player view of the game with the opponent marginalized out.
// reward is S x N (N = responder actions), trans(s) maps responder action
// rows to next-state columns, bonus(s) collects the opponent's entropy term.
struct InducedMdp {
  Matrix reward;               // S x N
  std::vector<Matrix> trans;   // per state: N x S
  Vector bonus;                // per state, added once per step
  int n_actions = 0;
};

InducedMdp induce_for_min(const MarkovGame& game, const Matrix& pi, double tau) {
  const int ns = game.n_states(), na = game.n_actions_max(), nb = game.n_actions_min();
  InducedMdp m;
  m.n_actions = nb;
  m.reward = Matrix::Zero(ns, nb);
  m.bonus = Vector::Zero(ns);
  m.trans.assign(ns, Matrix::Zero(nb, ns));
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      const double w = pi(s, a);
      if (w == 0.0) continue;
      for (int b = 0; b < nb; ++b) {
        m.reward(s, b) += w * game.r(s, a, b);
        for (int s2 = 0; s2 < ns; ++s2) m.trans[s](b, s2) += w * game.p(s, a, b, s2);
      }
    }
    if (tau > 0.0) m.bonus[s] = tau * policy_entropy(pi.row(s));
  }
  return m;
}

InducedMdp induce_for_max(const MarkovGame& game, const Matrix& phi, double tau) {
  const int ns = game.n_states(), na = game.n_actions_max(), nb = game.n_actions_min();
  InducedMdp m;
  m.n_actions = na;
  m.reward = Matrix::Zero(ns, na);
  m.bonus = Vector::Zero(ns);
  m.trans.assign(ns, Matrix::Zero(na, ns));
  for (int s = 0; s < ns; ++s) {
    for (int b = 0; b < nb; ++b) {
      const double w = phi(s, b);
      if (w == 0.0) continue;
      for (int a = 0; a < na; ++a) {
        m.reward(s, a) += w * game.r(s, a, b);
        for (int s2 = 0; s2 < ns; ++s2) m.trans[s](a, s2) += w * game.p(s, a, b, s2);
      }
    }
    if (tau > 0.0) m.bonus[s] = -tau * policy_entropy(phi.row(s));
  }
  return m;
}

// Exact evaluation of a fixed responder policy inside the induced MDP.
// entropy_sign is +tau H for a maximizing responder, -tau H for a minimizer.
Vector evaluate_responder(const MarkovGame& game, const InducedMdp& m,
                          const Matrix& policy, const Matrix& log_policy,
                          double tau, double entropy_sign) {
  const int ns = game.n_states();
  Vector c(ns);
  Matrix P = Matrix::Zero(ns, ns);
  for (int s = 0; s < ns; ++s) {
    double v = m.bonus[s];
    for (int j = 0; j < m.n_actions; ++j) {
      const double w = policy(s, j);
      if (w == 0.0) continue;
      v += w * m.reward(s, j);
      for (int s2 = 0; s2 < ns; ++s2) P(s, s2) += w * m.trans[s](j, s2);
    }
    if (tau > 0.0)
      v += entropy_sign * tau * policy_entropy(policy.row(s), log_policy.row(s));
    c[s] = v;
  }
  const Matrix A = Matrix::Identity(ns, ns) - game.gamma() * P;
  Vector value = A.partialPivLu().solve(c);
  if (!value.allFinite()) throw NumericalError("best-response policy evaluation failed");
  return value;
}

// Sweep-change threshold that certifies value error <= tol, plus a rounding
// floor so that huge-tau solves (values ~ tau/(1-gamma)) terminate once the
// iterates stop moving at machine precision.
double stop_threshold(double tol, double gamma, double value_scale) {
  const double rule = gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma)
                                  : std::numeric_limits<double>::infinity();
  const double floor =
      8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, value_scale);
  return std::max(rule, floor);
}

enum class Sense { minimize, maximize };

BestResponse soft_response(const MarkovGame& game, const InducedMdp& m, Sense sense,
                           double tau, double tol, int max_iters) {
  if (!(tau > 0.0)) throw ValidationError("soft best response requires tau > 0");
  const int ns = game.n_states();
  const int n = m.n_actions;
  const double gamma = game.gamma();

  Vector v = Vector::Zero(ns);
  Matrix q(ns, n);
  int iters = 0;
  double change = std::numeric_limits<double>::infinity();
  for (; iters < max_iters; ++iters) {
    Vector v_next(ns);
    for (int s = 0; s < ns; ++s) {
      for (int j = 0; j < n; ++j) q(s, j) = m.reward(s, j) + gamma * m.trans[s].row(j).dot(v);
      if (sense == Sense::minimize) {
        const double lo = q.row(s).minCoeff();
        double z = 0.0;
        for (int j = 0; j < n; ++j) z += std::exp(-(q(s, j) - lo) / tau);
        v_next[s] = m.bonus[s] + lo - tau * std::log(z);
      } else {
        const double hi = q.row(s).maxCoeff();
        double z = 0.0;
        for (int j = 0; j < n; ++j) z += std::exp((q(s, j) - hi) / tau);
        v_next[s] = m.bonus[s] + hi + tau * std::log(z);
      }
    }
    change = (v_next - v).cwiseAbs().maxCoeff();
    v = v_next;
    if (change <= stop_threshold(tol, gamma, v.cwiseAbs().maxCoeff())) {
      ++iters;
      break;
    }
  }
  if (!(change <= stop_threshold(tol, gamma, v.cwiseAbs().maxCoeff())))
    throw NumericalError("soft value iteration did not converge; last change " +
                         std::to_string(change));

  BestResponse out;
  out.iterations_used = iters;
  out.residual = gamma > 0.0 ? change * gamma / (1.0 - gamma) : 0.0;

  // Boltzmann extraction from the converged soft Q-values; the log table is
  // exact even where the probabilities underflow.
  out.policy.resize(ns, n);
  out.log_policy.resize(ns, n);
  for (int s = 0; s < ns; ++s) {
    for (int j = 0; j < n; ++j) q(s, j) = m.reward(s, j) + gamma * m.trans[s].row(j).dot(v);
    const double sign = sense == Sense::minimize ? -1.0 : 1.0;
    const Eigen::RowVectorXd logits = sign * q.row(s) / tau;
    const double hi = logits.maxCoeff();
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(logits[j] - hi);
    const double lse = hi + std::log(z);
    for (int j = 0; j < n; ++j) {
      out.log_policy(s, j) = logits[j] - lse;
      out.policy(s, j) = std::exp(out.log_policy(s, j));
    }
  }

  out.value_vector = evaluate_responder(game, m, out.policy, out.log_policy, tau,
                                        sense == Sense::minimize ? -1.0 : 1.0);
  out.j_value = game.rho().dot(out.value_vector);
  return out;
}

BestResponse hard_response(const MarkovGame& game, const InducedMdp& m, Sense sense,
                           double tol, int max_iters) {
  const int ns = game.n_states();
  const int n = m.n_actions;
  const double gamma = game.gamma();

  Vector v = Vector::Zero(ns);
  int iters = 0;
  double change = std::numeric_limits<double>::infinity();
  for (; iters < max_iters; ++iters) {
    Vector v_next(ns);
    for (int s = 0; s < ns; ++s) {
      double best = sense == Sense::minimize ? std::numeric_limits<double>::infinity()
                                             : -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        const double q = m.reward(s, j) + gamma * m.trans[s].row(j).dot(v);
        if (sense == Sense::minimize ? q < best : q > best) best = q;
      }
      v_next[s] = best;
    }
    change = (v_next - v).cwiseAbs().maxCoeff();
    v = v_next;
    if (change <= stop_threshold(tol, gamma, v.cwiseAbs().maxCoeff())) {
      ++iters;
      break;
    }
  }
  if (!(change <= stop_threshold(tol, gamma, v.cwiseAbs().maxCoeff())))
    throw NumericalError("value iteration did not converge; last change " +
                         std::to_string(change));

  BestResponse out;
  out.iterations_used = iters;
  out.residual = gamma > 0.0 ? change * gamma / (1.0 - gamma) : 0.0;

  // Greedy extraction, ties broken toward the lowest action index.
  out.policy = Matrix::Zero(ns, n);
  out.log_policy =
      Matrix::Constant(ns, n, -std::numeric_limits<double>::infinity());
  for (int s = 0; s < ns; ++s) {
    int pick = 0;
    double best = m.reward(s, 0) + gamma * m.trans[s].row(0).dot(v);
    for (int j = 1; j < n; ++j) {
      const double q = m.reward(s, j) + gamma * m.trans[s].row(j).dot(v);
      if (sense == Sense::minimize ? q < best : q > best) {
        best = q;
        pick = j;
      }
    }
    out.policy(s, pick) = 1.0;
    out.log_policy(s, pick) = 0.0;
  }

  out.value_vector =
      evaluate_responder(game, m, out.policy, out.log_policy, 0.0, 0.0);
  out.j_value = game.rho().dot(out.value_vector);
  return out;
}

}  // namespace

BestResponse soft_best_response_min(const MarkovGame& game, const Matrix& pi,
                                    double tau, double tol, int max_iters) {
  return soft_response(game, induce_for_min(game, pi, tau), Sense::minimize, tau, tol,
                       max_iters);
}

BestResponse soft_best_response_max(const MarkovGame& game, const Matrix& phi,
                                    double tau, double tol, int max_iters) {
  return soft_response(game, induce_for_max(game, phi, tau), Sense::maximize, tau, tol,
                       max_iters);
}

BestResponse hard_best_response_min(const MarkovGame& game, const Matrix& pi,
                                    double tol, int max_iters) {
  return hard_response(game, induce_for_min(game, pi, 0.0), Sense::minimize, tol,
                       max_iters);
}

BestResponse hard_best_response_max(const MarkovGame& game, const Matrix& phi,
                                    double tol, int max_iters) {
  return hard_response(game, induce_for_max(game, phi, 0.0), Sense::maximize, tol,
                       max_iters);
}

double g_tau(const MarkovGame& game, const Matrix& pi, double tau, double tol) {
  if (tau < 0.0) throw ValidationError("tau must be >= 0");
  return tau > 0.0 ? soft_best_response_min(game, pi, tau, tol).j_value
                   : hard_best_response_min(game, pi, tol).j_value;
}

double g_tau_max(const MarkovGame& game, const Matrix& phi, double tau, double tol) {
  if (tau < 0.0) throw ValidationError("tau must be >= 0");
  return tau > 0.0 ? soft_best_response_max(game, phi, tau, tol).j_value
                   : hard_best_response_max(game, phi, tol).j_value;
}

}  // namespace zsmg
