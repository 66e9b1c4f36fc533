#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace zsmg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad input: dimensions, stochasticity, non-finite entries, malformed
// documents. The CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solve missed its tolerance or a computation produced
// non-finite values. The CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite two-player zero-sum Markov game (S, A, B, P, gamma, r, rho).
// Immutable after construction; all operations on it are pure.
class MarkovGame {
 public:
  // transition is indexed [s][a][b][s'], reward [s][a][b], both row-major.
  MarkovGame(int n_states, int n_actions_max, int n_actions_min,
             std::vector<double> transition, std::vector<double> reward,
             double gamma, Vector rho);

  int n_states() const { return ns_; }
  int n_actions_max() const { return na_; }
  int n_actions_min() const { return nb_; }
  double gamma() const { return gamma_; }
  const Vector& rho() const { return rho_; }

  double p(int s, int a, int b, int s2) const {
    return transition_[((static_cast<size_t>(s) * na_ + a) * nb_ + b) * ns_ + s2];
  }
  double r(int s, int a, int b) const {
    return reward_[(static_cast<size_t>(s) * na_ + a) * nb_ + b];
  }

  double rho_min() const { return rho_.minCoeff(); }
  // Assumption: the initial distribution is strictly positive everywhere.
  bool initial_distribution_positive() const { return rho_min() > 0.0; }

  double reward_min() const;
  double reward_max() const;
  bool rewards_in_unit_interval() const;
  // Affine rescaling of rewards onto [0, 1] (identity if already constant 0).
  MarkovGame normalized_rewards() const;

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return reward_; }

 private:
  void validate() const;

  int ns_, na_, nb_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  double gamma_;
  Vector rho_;
};

// Softmax logit tables for both players: theta is S x A, psi is S x B.
struct PolicyParams {
  Matrix theta;
  Matrix psi;

  static PolicyParams zeros(const MarkovGame& game);
  bool all_finite() const;
};

// A policy pair together with its log tables. For softmax pairs the logs
// come straight from the logits (theta - logsumexp), so they stay finite
// even when the probabilities underflow.
struct PolicyPair {
  Matrix pi;       // S x A, row-stochastic
  Matrix phi;      // S x B, row-stochastic
  Matrix log_pi;
  Matrix log_phi;

  double min_pi_entry() const { return pi.minCoeff(); }
  double min_phi_entry() const { return phi.minCoeff(); }

  // Build from raw probability matrices; rows must sum to 1 within 1e-12.
  // Zero entries get log = -inf and are rejected later iff a tau > 0
  // computation actually needs their logarithm.
  static PolicyPair from_policies(Matrix pi, Matrix phi);
};

// pi(a|s) = exp(theta(s,a)) / sum_a' exp(theta(s,a')), computed with per-row
// max subtraction. Throws ValidationError on non-finite logits.
PolicyPair softmax_policies(const PolicyParams& params);

// H(p) = -sum_i p_i log p_i with the 0 log 0 = 0 convention.
// Throws ValidationError on negative entries.
double policy_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Entropy of one policy row using a precomputed log table (0 log 0 = 0).
double policy_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& probs,
                      const Eigen::Ref<const Eigen::RowVectorXd>& logs);

// Game-spec document I/O (JSON, field order insignificant). load validates
// every MarkovGame invariant and reports offending tensor indices;
// load(save(g)) == g bit-exactly for finite doubles.
MarkovGame load_game(const std::string& text);
std::string save_game(const MarkovGame& game);
MarkovGame load_game_file(const std::string& path);

// FNV-1a over the canonical serialized document; used in run summaries.
uint64_t game_hash(const MarkovGame& game);

}  // namespace zsmg
