#pragma once

#include "zsmg/game.hpp"

#include <map>
#include <optional>
#include <vector>

namespace zsmg {

// One-shot zero-sum matrix game, payoff to the row (max) player, optionally
// entropy-regularized with weight tau.
struct MatrixGame {
  Matrix payoff;
  double tau = 0.0;
};

struct MatrixGameSolution {
  Vector x;           // row player
  Vector y;           // column player
  double value = 0.0; // regularized value when tau > 0
  long iterations = 0;
  double residual = 0.0;
};

// Unique quantal response equilibrium of max_x min_y x'Gy + tau H(x) - tau H(y),
// found by damped fixed-point iteration on x ~ exp(Gy/tau), y ~ exp(-G'x/tau)
// with averaging weight min(1, tau/(tau+|G|_inf)); falls back to entropic
// mirror-prox with step tau/(2 sqrt(tau^2+|G|_inf^2)) if that stalls.
// Terminates when the saddle residual (best-response gap of both players)
// drops below tol.
MatrixGameSolution solve_matrix_game_regularized(
    const MatrixGame& mg, double tol, const Vector* x0 = nullptr,
    const Vector* y0 = nullptr, long max_iters = 20'000'000);

inline constexpr int kSupportEnumerationCap = 8;

// Unregularized minimax by Shapley-Snow support enumeration over square
// submatrices; practical for dimensions up to kSupportEnumerationCap.
// Throws ValidationError beyond the cap (use the vanishing-tau path then).
MatrixGameSolution solve_matrix_game_exact(const Matrix& payoff, double tol);

struct EquilibriumSolution {
  double tau = 0.0;
  Matrix pi_star;        // S x A
  Matrix phi_star;       // S x B
  Vector value_vector;   // per-state game value
  double j_star = 0.0;   // rho . value_vector
  double duality_gap = 0.0;
  int iterations = 0;    // Shapley sweeps
};

// Value iteration on per-state stage games G_s[a,b] = r(s,a,b) + gamma E[V],
// each solved regularized (tau > 0) or exactly (tau == 0). duality_gap is
// recomputed through the best-response module and must come out <= tol.
EquilibriumSolution shapley_solve(const MarkovGame& game, double tau, double tol,
                                  const Vector* v0 = nullptr);

// tau = 0 fallback for games beyond the enumeration cap: solves at a small
// tau grid and reports the last value with a Lemma-3-style error bar.
struct VanishingTauSolution {
  EquilibriumSolution solution;  // at the smallest tau in the grid
  double error_bar = 0.0;        // tau * max(log|A|, log|B|)
};
VanishingTauSolution solve_vanishing_tau(const MarkovGame& game, double tol);

struct MixednessEstimate {
  double c = 0.0;                   // min over the grid of min policy entry
  std::vector<double> min_entries;  // per grid point
  bool decaying = false;            // still shrinking fast at the smallest tau
};

// Empirical stand-in for the uniform lower bound c on QRE policy entries.
// tau_grid must be positive and decreasing. `decaying` flags games whose
// min entry keeps collapsing as tau shrinks (the bound looks vacuous); it is
// a heuristic, not a certificate.
MixednessEstimate estimate_c(const MarkovGame& game,
                             const std::vector<double>& tau_grid, double tol);

// Memoizes shapley_solve per tau and warm-starts successive solves from the
// most recent value vector (Algorithm 2 sweeps tau smoothly).
class EquilibriumCache {
 public:
  EquilibriumCache(const MarkovGame& game, double tol) : game_(game), tol_(tol) {}

  const EquilibriumSolution& at(double tau);
  double tol() const { return tol_; }

 private:
  const MarkovGame& game_;
  double tol_;
  std::map<double, EquilibriumSolution> memo_;
  std::optional<Vector> last_v_;
};

}  // namespace zsmg
