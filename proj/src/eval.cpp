#include "zsmg/eval.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace zsmg {

namespace {

constexpr double kResidualTol = 1e-10;

// tau > 0 needs finite log tables; -inf means a genuine zero-probability
// entry whose logarithm the regularized value would require.
void require_finite_logs(const PolicyPair& pair, double tau) {
  if (tau <= 0.0) return;
  if (!pair.log_pi.allFinite() || !pair.log_phi.allFinite())
    throw NumericalError("log of zero: tau > 0 with a zero-probability policy entry");
}

// Expected one-step payoff plus entropy terms per state.
Vector stage_cost(const MarkovGame& game, const PolicyPair& pair, double tau) {
  const int ns = game.n_states();
  Vector c(ns);
  for (int s = 0; s < ns; ++s) {
    double v = 0.0;
    for (int a = 0; a < game.n_actions_max(); ++a) {
      const double pa = pair.pi(s, a);
      if (pa == 0.0) continue;
      for (int b = 0; b < game.n_actions_min(); ++b)
        v += pa * pair.phi(s, b) * game.r(s, a, b);
    }
    if (tau > 0.0)
      v += tau * policy_entropy(pair.pi.row(s), pair.log_pi.row(s)) -
           tau * policy_entropy(pair.phi.row(s), pair.log_phi.row(s));
    c[s] = v;
  }
  return c;
}

}  // namespace

Matrix induced_transition(const MarkovGame& game, const PolicyPair& pair) {
  const int ns = game.n_states();
  Matrix P = Matrix::Zero(ns, ns);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < game.n_actions_max(); ++a) {
      const double pa = pair.pi(s, a);
      if (pa == 0.0) continue;
      for (int b = 0; b < game.n_actions_min(); ++b) {
        const double w = pa * pair.phi(s, b);
        if (w == 0.0) continue;
        for (int s2 = 0; s2 < ns; ++s2) P(s, s2) += w * game.p(s, a, b, s2);
      }
    }
  return P;
}

Vector value_regularized(const MarkovGame& game, const PolicyPair& pair, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw ValidationError("tau must be finite and >= 0");
  require_finite_logs(pair, tau);

  const int ns = game.n_states();
  const Matrix P = induced_transition(game, pair);
  const Vector c = stage_cost(game, pair, tau);
  const Matrix A = Matrix::Identity(ns, ns) - game.gamma() * P;
  const Vector v = A.partialPivLu().solve(c);

  const double residual = (v - c - game.gamma() * (P * v)).cwiseAbs().maxCoeff();
  if (!(residual <= kResidualTol) || !v.allFinite())
    throw NumericalError("value solve residual " + std::to_string(residual) +
                         " exceeds tolerance");
  return v;
}

double objective(const MarkovGame& game, const PolicyPair& pair, double tau) {
  return game.rho().dot(value_regularized(game, pair, tau));
}

Vector visitation(const MarkovGame& game, const PolicyPair& pair) {
  const int ns = game.n_states();
  const Matrix P = induced_transition(game, pair);
  const Matrix A = Matrix::Identity(ns, ns) - game.gamma() * P.transpose();
  const Vector d = A.partialPivLu().solve((1.0 - game.gamma()) * game.rho());
  if (!d.allFinite() || std::abs(d.sum() - 1.0) > 1e-10)
    throw NumericalError("visitation solve failed to produce a distribution");
  return d;
}

std::vector<Matrix> advantage(const MarkovGame& game, const PolicyPair& pair,
                              double tau, const Vector& v_tau) {
  require_finite_logs(pair, tau);
  const int ns = game.n_states();
  const int na = game.n_actions_max();
  const int nb = game.n_actions_min();
  std::vector<Matrix> adv(ns);
  for (int s = 0; s < ns; ++s) {
    adv[s].resize(na, nb);
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < nb; ++b) {
        double cont = 0.0;
        for (int s2 = 0; s2 < ns; ++s2) cont += game.p(s, a, b, s2) * v_tau[s2];
        double x = game.r(s, a, b) + game.gamma() * cont - v_tau[s];
        if (tau > 0.0) x += tau * (pair.log_phi(s, b) - pair.log_pi(s, a));
        adv[s](a, b) = x;
      }
  }
  return adv;
}

std::pair<Matrix, Matrix> gradients(const MarkovGame& game, const PolicyPair& pair,
                                    double tau) {
  EvalResult e = evaluate(game, pair, tau);
  return {std::move(e.grad_theta), std::move(e.grad_psi)};
}

EvalResult evaluate(const MarkovGame& game, const PolicyPair& pair, double tau) {
  EvalResult out;
  out.tau = tau;
  out.v_tau = value_regularized(game, pair, tau);
  out.j_tau = game.rho().dot(out.v_tau);
  out.d_rho = visitation(game, pair);
  out.adv = advantage(game, pair, tau, out.v_tau);

  const int ns = game.n_states();
  const int na = game.n_actions_max();
  const int nb = game.n_actions_min();
  const double scale = 1.0 / (1.0 - game.gamma());

  // d_rho >= (1-gamma) rho entrywise and the expected advantage vanishes
  // per state; both follow from the defining linear systems.
  for (int s = 0; s < ns; ++s) {
    if (out.d_rho[s] < (1.0 - game.gamma()) * game.rho()[s] - 1e-12)
      throw NumericalError("visitation lower bound violated at state " + std::to_string(s));
    double mean_adv = 0.0;
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < nb; ++b)
        mean_adv += pair.pi(s, a) * pair.phi(s, b) * out.adv[s](a, b);
    if (std::abs(mean_adv) > 1e-9)
      throw NumericalError("expected advantage " + std::to_string(mean_adv) +
                           " nonzero at state " + std::to_string(s));
  }

  out.grad_theta.resize(ns, na);
  out.grad_psi.resize(ns, nb);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      double acc = 0.0;
      for (int b = 0; b < nb; ++b) acc += pair.phi(s, b) * out.adv[s](a, b);
      out.grad_theta(s, a) = scale * out.d_rho[s] * pair.pi(s, a) * acc;
    }
    for (int b = 0; b < nb; ++b) {
      double acc = 0.0;
      for (int a = 0; a < na; ++a) acc += pair.pi(s, a) * out.adv[s](a, b);
      out.grad_psi(s, b) = scale * out.d_rho[s] * pair.phi(s, b) * acc;
    }
  }
  return out;
}

GradientCheckReport check_gradient(const MarkovGame& game, const PolicyParams& params,
                                   double tau, double step) {
  if (!(step > 0.0 && step <= 1e-2))
    throw ValidationError("finite-difference step must lie in (0, 1e-2]");

  const EvalResult eval = evaluate(game, softmax_policies(params), tau);
  GradientCheckReport report;

  auto probe = [&](char player, int s, int j, double analytic) {
    PolicyParams p = params;
    Matrix& table = player == 't' ? p.theta : p.psi;
    table(s, j) += step;
    const double up = objective(game, softmax_policies(p), tau);
    table(s, j) -= 2.0 * step;
    const double down = objective(game, softmax_policies(p), tau);
    const double fd = (up - down) / (2.0 * step);

    const double abs_err = std::abs(fd - analytic);
    const double denom = std::max(std::abs(fd), std::abs(analytic));
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    // Coordinates with tiny absolute error are judged by that alone.
    const double rel_err = abs_err > 1e-7 && denom > 0.0 ? abs_err / denom : 0.0;
    if (rel_err > report.max_rel_error) {
      report.max_rel_error = rel_err;
      report.worst_player = player;
      report.worst_state = s;
      report.worst_action = j;
    }
  };

  for (int s = 0; s < game.n_states(); ++s) {
    for (int a = 0; a < game.n_actions_max(); ++a)
      probe('t', s, a, eval.grad_theta(s, a));
    for (int b = 0; b < game.n_actions_min(); ++b)
      probe('p', s, b, eval.grad_psi(s, b));
  }
  return report;
}

}  // namespace zsmg
