#pragma once

#include "zsmg/game.hpp"

namespace zsmg {

// Exact best response of one player against a fixed opponent. value_vector
// and j_value are the exact policy evaluation of the returned responder
// policy (not the value-iteration iterate), so j_value == J_tau(fixed, policy).
struct BestResponse {
  Matrix policy;         // responder, row-stochastic
  Matrix log_policy;     // finite Boltzmann logits when tau > 0
  Vector value_vector;   // V_tau at (fixed opponent, policy)
  double j_value = 0.0;  // rho . value_vector
  int iterations_used = 0;
  double residual = 0.0; // value-error bound implied by the final sweep
};

inline constexpr int kBestResponseMaxIters = 1'000'000;

// phi_tau(pi): unique soft best response of the min player, by soft value
// iteration on the induced MDP (soft-max form on negated rewards).
// Stops when the sup-norm sweep change falls below tol*(1-gamma)/(2*gamma),
// which bounds the value error by tol.
BestResponse soft_best_response_min(const MarkovGame& game, const Matrix& pi,
                                    double tau, double tol,
                                    int max_iters = kBestResponseMaxIters);

// pi_tau(phi), the mirror image for the max player.
BestResponse soft_best_response_max(const MarkovGame& game, const Matrix& phi,
                                    double tau, double tol,
                                    int max_iters = kBestResponseMaxIters);

// phi_0(pi): hard value iteration, greedy deterministic policy with ties
// broken toward the lowest action index.
BestResponse hard_best_response_min(const MarkovGame& game, const Matrix& pi,
                                    double tol,
                                    int max_iters = kBestResponseMaxIters);

BestResponse hard_best_response_max(const MarkovGame& game, const Matrix& phi,
                                    double tol,
                                    int max_iters = kBestResponseMaxIters);

// g_tau(pi) = min_phi J_tau(pi, phi); soft response for tau > 0, hard for
// tau == 0.
double g_tau(const MarkovGame& game, const Matrix& pi, double tau, double tol);

// max_pi J_tau(pi, phi), the opposing guarantee (used for duality gaps).
double g_tau_max(const MarkovGame& game, const Matrix& phi, double tau, double tol);

}  // namespace zsmg
