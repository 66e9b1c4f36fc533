#include "zsmg/equilibrium.hpp"

#include "zsmg/best_response.hpp"
#include "zsmg/eval.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>

namespace zsmg {

namespace {

Vector softmax_vec(const Vector& logits) {
  const double hi = logits.maxCoeff();
  Vector out(logits.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    z += out[i];
  }
  return out / z;
}

double lse(const Vector& v) {
  const double hi = v.maxCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) z += std::exp(v[i] - hi);
  return hi + std::log(z);
}

double entropy_vec(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

// Combined best-response gap of both players at (x, y); zero exactly at the
// regularized saddle point.
double saddle_residual(const Matrix& G, double tau, const Vector& x, const Vector& y) {
  const double best_x = tau * lse(G * y / tau) - tau * entropy_vec(y);
  const double best_y = tau * entropy_vec(x) - tau * lse(-(G.transpose() * x) / tau);
  return best_x - best_y;
}

}  // namespace

MatrixGameSolution solve_matrix_game_regularized(const MatrixGame& mg, double tol,
                                                 const Vector* x0, const Vector* y0,
                                                 long max_iters) {
  const Matrix& G = mg.payoff;
  const double tau = mg.tau;
  if (!(tau > 0.0)) throw ValidationError("regularized matrix game requires tau > 0");
  if (!G.allFinite()) throw ValidationError("matrix game payoff has non-finite entries");

  const Eigen::Index m = G.rows(), n = G.cols();
  Vector x = x0 ? *x0 : Vector::Constant(m, 1.0 / m);
  Vector y = y0 ? *y0 : Vector::Constant(n, 1.0 / n);

  const double gnorm = G.cwiseAbs().maxCoeff();
  const double lambda = std::min(1.0, tau / (tau + gnorm));

  MatrixGameSolution out;
  const long fp_budget = max_iters / 2;
  double res = saddle_residual(G, tau, x, y);
  for (long k = 0; k < fp_budget && res > tol; ++k) {
    const Vector bx = softmax_vec(G * y / tau);
    const Vector by = softmax_vec(-(G.transpose() * x) / tau);
    x = (1.0 - lambda) * x + lambda * bx;
    y = (1.0 - lambda) * y + lambda * by;
    ++out.iterations;
    if ((k & 7) == 0 || k + 1 >= fp_budget) res = saddle_residual(G, tau, x, y);
  }

  if (res > tol) {
    // Entropic mirror-prox on the same saddle problem.
    const double eta = 0.5 * tau / std::sqrt(tau * tau + gnorm * gnorm);
    Vector lx = x.array().log(), ly = y.array().log();
    for (long k = 0; out.iterations < max_iters && res > tol; ++k, ++out.iterations) {
      const Vector lx_half = lx + eta * (G * y - tau * (lx + Vector::Ones(m)));
      const Vector ly_half = ly - eta * (G.transpose() * x + tau * (ly + Vector::Ones(n)));
      const Vector xh = softmax_vec(lx_half);
      const Vector yh = softmax_vec(ly_half);
      const Vector lxh = xh.array().log(), lyh = yh.array().log();
      lx += eta * (G * yh - tau * (lxh + Vector::Ones(m)));
      ly -= eta * (G.transpose() * xh + tau * (lyh + Vector::Ones(n)));
      x = softmax_vec(lx);
      y = softmax_vec(ly);
      lx = x.array().log();
      ly = y.array().log();
      if ((k & 7) == 0 || out.iterations + 1 >= max_iters)
        res = saddle_residual(G, tau, x, y);
    }
    if (res > tol)
      throw NumericalError("regularized matrix game did not converge; residual " +
                           std::to_string(res));
  }

  out.x = x;
  out.y = y;
  out.residual = res;
  out.value = x.dot(G * y) + tau * entropy_vec(x) - tau * entropy_vec(y);
  return out;
}

namespace {

// Enumerate k-subsets of {0..n-1} in lexicographic order.
bool next_subset(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<int> first_subset(int k) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  return idx;
}

}  // namespace

MatrixGameSolution solve_matrix_game_exact(const Matrix& payoff, double tol) {
  const int m = static_cast<int>(payoff.rows());
  const int n = static_cast<int>(payoff.cols());
  if (m > kSupportEnumerationCap || n > kSupportEnumerationCap)
    throw ValidationError("matrix game exceeds the support-enumeration cap of " +
                          std::to_string(kSupportEnumerationCap) + " actions");
  if (!payoff.allFinite())
    throw ValidationError("matrix game payoff has non-finite entries");

  // Shift payoffs positive so every candidate value is > 0 (Shapley-Snow).
  const double shift = 1.0 - payoff.minCoeff();
  const Matrix G = payoff.array() + shift;
  const double scale = G.cwiseAbs().maxCoeff();
  const double eps = 1e-11 * std::max(1.0, scale);

  std::optional<MatrixGameSolution> best;
  for (int k = 1; k <= std::min(m, n); ++k) {
    std::vector<int> rows = first_subset(k);
    do {
      std::vector<int> cols = first_subset(k);
      do {
        Matrix M(k, k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) M(i, j) = G(rows[i], cols[j]);
        Eigen::FullPivLU<Matrix> lu(M);
        if (!lu.isInvertible()) continue;
        const Vector u = lu.solve(Vector::Ones(k));              // M u = 1
        const Vector z = M.transpose().fullPivLu().solve(Vector::Ones(k));
        const double denom = u.sum();
        if (!(denom > 0.0)) continue;
        const double v = 1.0 / denom;
        Vector x = Vector::Zero(m), y = Vector::Zero(n);
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
          const double xi = v * z[i];
          if (xi < -eps) ok = false;
          x[rows[i]] = std::max(0.0, xi);
        }
        for (int j = 0; j < k && ok; ++j) {
          const double yj = v * u[j];
          if (yj < -eps) ok = false;
          y[cols[j]] = std::max(0.0, yj);
        }
        if (!ok) continue;
        x /= x.sum();
        y /= y.sum();
        const Vector col_vals = G.transpose() * x;  // guaranteed by x against any column
        const Vector row_vals = G * y;
        if (col_vals.minCoeff() < v - eps || row_vals.maxCoeff() > v + eps) continue;
        const double gap = row_vals.maxCoeff() - col_vals.minCoeff();
        if (!best || gap < best->residual) {
          best = MatrixGameSolution{};
          best->x = x;
          best->y = y;
          best->value = v - shift;
          best->residual = gap;
        }
        if (best->residual <= 64.0 * std::numeric_limits<double>::epsilon() * scale)
          return *best;
      } while (next_subset(cols, n));
    } while (next_subset(rows, m));
  }
  if (best && best->residual <= tol) return *best;
  throw NumericalError(best ? "support enumeration best duality gap " +
                                  std::to_string(best->residual) + " exceeds tolerance"
                            : "support enumeration found no saddle point");
}

EquilibriumSolution shapley_solve(const MarkovGame& game, double tau, double tol,
                                  const Vector* v0) {
  if (tau < 0.0) throw ValidationError("tau must be >= 0");
  if (tau == 0.0 && (game.n_actions_max() > kSupportEnumerationCap ||
                     game.n_actions_min() > kSupportEnumerationCap))
    throw ValidationError(
        "tau = 0 equilibrium beyond the enumeration cap; use solve_vanishing_tau");

  const int ns = game.n_states();
  const int na = game.n_actions_max();
  const int nb = game.n_actions_min();
  const double gamma = game.gamma();

  // Stage solves feed V directly, so their error must sit well under the
  // sweep tolerance.
  const double stage_tol = tol * (1.0 - gamma) / 20.0;
  const double sweep_tol = gamma > 0.0
                               ? 0.1 * tol * (1.0 - gamma) / (2.0 * gamma)
                               : std::numeric_limits<double>::infinity();

  Vector v = v0 ? *v0 : Vector::Zero(ns);
  std::vector<Vector> warm_x(ns), warm_y(ns);

  EquilibriumSolution out;
  out.tau = tau;
  out.pi_star.resize(ns, na);
  out.phi_star.resize(ns, nb);

  const int max_sweeps = 200'000;
  double change = std::numeric_limits<double>::infinity();
  Matrix stage(na, nb);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Vector v_next(ns);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) {
          double cont = 0.0;
          for (int s2 = 0; s2 < ns; ++s2) cont += game.p(s, a, b, s2) * v[s2];
          stage(a, b) = game.r(s, a, b) + gamma * cont;
        }
      MatrixGameSolution sol;
      try {
        if (tau > 0.0) {
          sol = solve_matrix_game_regularized(
              {stage, tau}, stage_tol, warm_x[s].size() ? &warm_x[s] : nullptr,
              warm_y[s].size() ? &warm_y[s] : nullptr);
        } else {
          sol = solve_matrix_game_exact(stage, stage_tol);
        }
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "stage game at state " << s << " failed: " << e.what();
        throw NumericalError(os.str());
      }
      warm_x[s] = sol.x;
      warm_y[s] = sol.y;
      v_next[s] = sol.value;
      out.pi_star.row(s) = sol.x.transpose();
      out.phi_star.row(s) = sol.y.transpose();
    }
    change = (v_next - v).cwiseAbs().maxCoeff();
    v = v_next;
    out.iterations = sweep + 1;
    const double floor =
        8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, v.cwiseAbs().maxCoeff());
    if (change <= std::max(sweep_tol, floor)) break;
  }
  if (!(change <= std::max(sweep_tol, 8.0 * std::numeric_limits<double>::epsilon() *
                                          std::max(1.0, v.cwiseAbs().maxCoeff()))))
    throw NumericalError("Shapley iteration did not converge; last change " +
                         std::to_string(change));

  out.value_vector = v;
  out.j_star = game.rho().dot(v);

  const double br_tol = std::max(stage_tol, 1e-13);
  const double upper = g_tau_max(game, out.phi_star, tau, br_tol);
  const double lower = g_tau(game, out.pi_star, tau, br_tol);
  out.duality_gap = upper - lower;
  if (out.duality_gap < -1e-9 || !(out.duality_gap <= tol))
    throw NumericalError("equilibrium duality gap " + std::to_string(out.duality_gap) +
                         " outside tolerance " + std::to_string(tol));
  return out;
}

VanishingTauSolution solve_vanishing_tau(const MarkovGame& game, double tol) {
  VanishingTauSolution out;
  Vector v;
  for (double tau : {1e-2, 1e-3, 1e-4}) {
    out.solution = shapley_solve(game, tau, tol, v.size() ? &v : nullptr);
    v = out.solution.value_vector;
    out.error_bar = tau * std::max(std::log(game.n_actions_max()),
                                   std::log(game.n_actions_min()));
  }
  return out;
}

MixednessEstimate estimate_c(const MarkovGame& game,
                             const std::vector<double>& tau_grid, double tol) {
  if (tau_grid.empty()) throw ValidationError("tau grid must be nonempty");
  for (size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0)) throw ValidationError("tau grid entries must be > 0");
    if (i > 0 && !(tau_grid[i] < tau_grid[i - 1]))
      throw ValidationError("tau grid must be strictly decreasing");
  }
  MixednessEstimate est;
  est.c = std::numeric_limits<double>::infinity();
  Vector v;
  for (double tau : tau_grid) {
    const EquilibriumSolution sol = shapley_solve(game, tau, tol, v.size() ? &v : nullptr);
    v = sol.value_vector;
    const double entry =
        std::min(sol.pi_star.minCoeff(), sol.phi_star.minCoeff());
    est.min_entries.push_back(entry);
    est.c = std::min(est.c, entry);
  }
  // Still halving between the two smallest grid points: the uniform bound
  // looks vacuous for this game.
  const size_t n = est.min_entries.size();
  est.decaying = n >= 2 && est.min_entries[n - 1] < 0.5 * est.min_entries[n - 2];
  return est;
}

const EquilibriumSolution& EquilibriumCache::at(double tau) {
  auto it = memo_.find(tau);
  if (it != memo_.end()) return it->second;
  EquilibriumSolution sol =
      shapley_solve(game_, tau, tol_, last_v_ ? &*last_v_ : nullptr);
  last_v_ = sol.value_vector;
  return memo_.emplace(tau, std::move(sol)).first->second;
}

}  // namespace zsmg
