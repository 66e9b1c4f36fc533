#include "zsmg/metrics.hpp"

#include "zsmg/best_response.hpp"
#include "zsmg/eval.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace zsmg {

const char* const kCsvHeader =
    "k,tau,alpha,beta,delta_pi,delta_phi,composite,gap_max_unreg,gap_min_unreg,"
    "min_pi,min_phi,grad_theta_norm,grad_psi_norm,dist_to_ne";

std::pair<double, double> compute_deltas(const MarkovGame& game, const PolicyPair& pair,
                                         double tau, EquilibriumCache& eq_cache,
                                         double tol) {
  if (!(tau > 0.0)) throw ValidationError("delta metrics require tau > 0");
  const double j_star = eq_cache.at(tau).j_star;
  const double g = g_tau(game, pair.pi, tau, tol);
  const double j_pair = objective(game, pair, tau);
  return {j_star - g, j_pair - g};
}

std::pair<double, double> compute_unregularized_gaps(const MarkovGame& game,
                                                     const PolicyPair& pair,
                                                     EquilibriumCache& eq0_cache,
                                                     double tol) {
  const double j_star = eq0_cache.at(0.0).j_star;
  const double g0 = g_tau(game, pair.pi, 0.0, tol);
  const double j_pair = objective(game, pair, 0.0);
  return {j_star - g0, j_pair - g0};
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_cell(std::string& out, const std::optional<double>& v, double clamp_tol) {
  out += ',';
  if (!v) return;
  double x = *v;
  if (x < 0.0 && x >= -clamp_tol) x = 0.0;
  append_double(out, x);
}

}  // namespace

void write_csv(const std::vector<IterateRecord>& log, const std::string& destination,
               double clamp_tol) {
  std::string body;
  body.reserve(128 * (log.size() + 1));
  body += kCsvHeader;
  body += '\n';
  for (const IterateRecord& rec : log) {
    char head[32];
    std::snprintf(head, sizeof head, "%ld", rec.k);
    body += head;
    body += ',';
    append_double(body, rec.tau);
    body += ',';
    append_double(body, rec.alpha);
    body += ',';
    append_double(body, rec.beta);
    // Clamped deltas feed the composite so the 3*dpi+dphi identity holds
    // inside the file as well.
    std::optional<double> dpi = rec.delta_pi, dphi = rec.delta_phi;
    if (dpi && *dpi < 0.0 && *dpi >= -clamp_tol) dpi = 0.0;
    if (dphi && *dphi < 0.0 && *dphi >= -clamp_tol) dphi = 0.0;
    std::optional<double> comp;
    if (dpi && dphi) comp = 3.0 * *dpi + *dphi;
    append_cell(body, dpi, 0.0);
    append_cell(body, dphi, 0.0);
    append_cell(body, comp, 0.0);
    append_cell(body, rec.gap_max_unreg, clamp_tol);
    append_cell(body, rec.gap_min_unreg, clamp_tol);
    body += ',';
    append_double(body, rec.min_pi);
    body += ',';
    append_double(body, rec.min_phi);
    body += ',';
    append_double(body, rec.grad_theta_norm);
    body += ',';
    append_double(body, rec.grad_psi_norm);
    append_cell(body, rec.dist_to_ne, 0.0);
    body += '\n';
  }

  std::ofstream out(destination, std::ios::binary);
  if (!out) throw ValidationError("cannot open CSV destination: " + destination);
  out << body;
  if (!out) throw NumericalError("I/O failure writing CSV to " + destination);
}

}  // namespace zsmg
