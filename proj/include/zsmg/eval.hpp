#pragma once

#include "zsmg/game.hpp"

#include <utility>
#include <vector>

namespace zsmg {

// Everything the solvers need about one (pi, phi, tau) triple.
struct EvalResult {
  double tau = 0.0;
  Vector v_tau;                 // per-state regularized value
  double j_tau = 0.0;           // rho . v_tau
  Vector d_rho;                 // discounted visitation, sums to 1
  std::vector<Matrix> adv;      // per state, A x B advantage matrix
  Matrix grad_theta;            // S x A
  Matrix grad_psi;              // S x B
};

// P_{pi,phi}(s,s') = sum_{a,b} pi(a|s) phi(b|s) P(s'|s,a,b).
Matrix induced_transition(const MarkovGame& game, const PolicyPair& pair);

// Solves V = c + gamma P V by dense LU; c folds in expected reward and the
// entropy terms tau H(pi) - tau H(phi). Residual must stay below 1e-10.
Vector value_regularized(const MarkovGame& game, const PolicyPair& pair, double tau);

double objective(const MarkovGame& game, const PolicyPair& pair, double tau);

// d^T = (1-gamma) rho^T + gamma d^T P, dense solve; sums to 1 within 1e-10.
Vector visitation(const MarkovGame& game, const PolicyPair& pair);

// A(s,a,b) = r - tau log pi(a|s) + tau log phi(b|s)
//            + gamma E_{s'}[V(s')] - V(s).
std::vector<Matrix> advantage(const MarkovGame& game, const PolicyPair& pair,
                              double tau, const Vector& v_tau);

// Closed-form softmax policy gradients of J_tau:
//   dJ/dtheta(s,a) = d(s)/(1-gamma) pi(a|s) sum_b phi(b|s) A(s,a,b)
//   dJ/dpsi(s,b)   = d(s)/(1-gamma) phi(b|s) sum_a pi(a|s) A(s,a,b)
std::pair<Matrix, Matrix> gradients(const MarkovGame& game, const PolicyPair& pair,
                                    double tau);

EvalResult evaluate(const MarkovGame& game, const PolicyPair& pair, double tau);

struct GradientCheckReport {
  double max_rel_error = 0.0;   // over coordinates with absolute error > 1e-7
  double max_abs_error = 0.0;
  char worst_player = 't';      // 't' = theta, 'p' = psi
  int worst_state = 0;
  int worst_action = 0;
};

// Central finite differences of objective(softmax(.)) against the closed
// forms, coordinate by coordinate. step must lie in (0, 1e-2].
GradientCheckReport check_gradient(const MarkovGame& game, const PolicyParams& params,
                                   double tau, double step = 1e-5);

}  // namespace zsmg
