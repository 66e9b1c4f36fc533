#pragma once

#include "zsmg/equilibrium.hpp"
#include "zsmg/game.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zsmg {

// One logged iterate. Cheap fields are filled every iteration; fields that
// need oracle solves (deltas, unregularized gaps) only at the logging
// cadence and stay empty otherwise. dist_to_ne needs a reference NE.
struct IterateRecord {
  long k = 0;
  double tau = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> delta_pi;
  std::optional<double> delta_phi;
  std::optional<double> composite;       // 3 delta_pi + delta_phi
  std::optional<double> gap_max_unreg;   // J(pi*,phi*) - g_0(pi_k)
  std::optional<double> gap_min_unreg;   // J(pi_k,phi_k) - g_0(pi_k)
  double min_pi = 0.0;
  double min_phi = 0.0;
  double grad_theta_norm = 0.0;
  double grad_psi_norm = 0.0;
  std::optional<double> dist_to_ne;
};

// delta_pi = J_tau(pi_tau*, phi_tau*) - g_tau(pi),
// delta_phi = J_tau(pi, phi) - g_tau(pi). Requires tau > 0; the equilibrium
// value comes from the cache (one Shapley solve per distinct tau).
std::pair<double, double> compute_deltas(const MarkovGame& game, const PolicyPair& pair,
                                         double tau, EquilibriumCache& eq_cache,
                                         double tol);

// gap_max = J(pi*, phi*) - g_0(pi), gap_min = J(pi, phi) - g_0(pi), with the
// tau = 0 equilibrium value taken from the cache and g_0 from hard VI.
std::pair<double, double> compute_unregularized_gaps(const MarkovGame& game,
                                                     const PolicyPair& pair,
                                                     EquilibriumCache& eq0_cache,
                                                     double tol);

// Writes the pinned CSV schema, one row per record, floats at 17 significant
// digits, empty cells for absent optionals, LF newlines. Metric values that
// are negative by no more than clamp_tol are written as 0 (the in-memory
// records keep the raw values).
void write_csv(const std::vector<IterateRecord>& log, const std::string& destination,
               double clamp_tol = 0.0);

extern const char* const kCsvHeader;

}  // namespace zsmg
