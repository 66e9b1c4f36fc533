#include "zsmg/game.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace zsmg {

namespace {

constexpr double kStochasticTol = 1e-12;

std::string index3(int s, int a, int b) {
  std::ostringstream os;
  os << "(s=" << s << ",a=" << a << ",b=" << b << ")";
  return os.str();
}

}  // namespace

MarkovGame::MarkovGame(int n_states, int n_actions_max, int n_actions_min,
                       std::vector<double> transition, std::vector<double> reward,
                       double gamma, Vector rho)
    : ns_(n_states),
      na_(n_actions_max),
      nb_(n_actions_min),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      rho_(std::move(rho)) {
  validate();
}

void MarkovGame::validate() const {
  if (ns_ <= 0 || na_ <= 0 || nb_ <= 0)
    throw ValidationError("game dimensions must be positive");
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw ValidationError("gamma must lie in (0,1), got " + std::to_string(gamma_));
  const size_t want_t = static_cast<size_t>(ns_) * na_ * nb_ * ns_;
  const size_t want_r = static_cast<size_t>(ns_) * na_ * nb_;
  if (transition_.size() != want_t)
    throw ValidationError("transition tensor has " + std::to_string(transition_.size()) +
                          " entries, expected " + std::to_string(want_t));
  if (reward_.size() != want_r)
    throw ValidationError("reward tensor has " + std::to_string(reward_.size()) +
                          " entries, expected " + std::to_string(want_r));
  if (rho_.size() != ns_)
    throw ValidationError("rho has length " + std::to_string(rho_.size()) +
                          ", expected " + std::to_string(ns_));

  for (int s = 0; s < ns_; ++s)
    for (int a = 0; a < na_; ++a)
      for (int b = 0; b < nb_; ++b) {
        double sum = 0.0;
        for (int s2 = 0; s2 < ns_; ++s2) {
          const double v = p(s, a, b, s2);
          if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("transition entry at " + index3(s, a, b) +
                                  " -> s'=" + std::to_string(s2) + " is invalid");
          sum += v;
        }
        if (std::abs(sum - 1.0) > kStochasticTol)
          throw ValidationError("transition row at " + index3(s, a, b) + " sums to " +
                                std::to_string(sum) + ", expected 1");
        if (!std::isfinite(r(s, a, b)))
          throw ValidationError("reward at " + index3(s, a, b) + " is not finite");
      }

  double rho_sum = 0.0;
  for (int s = 0; s < ns_; ++s) {
    if (!std::isfinite(rho_[s]) || rho_[s] < 0.0)
      throw ValidationError("rho[" + std::to_string(s) + "] is invalid");
    rho_sum += rho_[s];
  }
  if (std::abs(rho_sum - 1.0) > kStochasticTol)
    throw ValidationError("rho sums to " + std::to_string(rho_sum) + ", expected 1");
}

double MarkovGame::reward_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : reward_) m = std::min(m, v);
  return m;
}

double MarkovGame::reward_max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : reward_) m = std::max(m, v);
  return m;
}

bool MarkovGame::rewards_in_unit_interval() const {
  return reward_min() >= 0.0 && reward_max() <= 1.0;
}

MarkovGame MarkovGame::normalized_rewards() const {
  const double lo = reward_min();
  const double hi = reward_max();
  const double span = hi - lo;
  std::vector<double> scaled = reward_;
  for (double& v : scaled) v = span > 0.0 ? (v - lo) / span : 0.0;
  return MarkovGame(ns_, na_, nb_, transition_, std::move(scaled), gamma_, rho_);
}

PolicyParams PolicyParams::zeros(const MarkovGame& game) {
  return {Matrix::Zero(game.n_states(), game.n_actions_max()),
          Matrix::Zero(game.n_states(), game.n_actions_min())};
}

bool PolicyParams::all_finite() const {
  return theta.allFinite() && psi.allFinite();
}

namespace {

// log pi = theta - logsumexp(theta) per row, with max subtraction.
void softmax_rows(const Matrix& logits, Matrix& probs, Matrix& logs) {
  const auto rows = logits.rows();
  const auto cols = logits.cols();
  probs.resize(rows, cols);
  logs.resize(rows, cols);
  for (Eigen::Index s = 0; s < rows; ++s) {
    const double m = logits.row(s).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) z += std::exp(logits(s, j) - m);
    const double lse = m + std::log(z);
    for (Eigen::Index j = 0; j < cols; ++j) {
      logs(s, j) = logits(s, j) - lse;
      probs(s, j) = std::exp(logs(s, j));
    }
  }
}

void check_row_stochastic(const Matrix& m, const char* which) {
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(s, j)) || m(s, j) < 0.0)
        throw ValidationError(std::string(which) + " row " + std::to_string(s) +
                              " has an invalid entry");
      sum += m(s, j);
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
      throw ValidationError(std::string(which) + " row " + std::to_string(s) +
                            " sums to " + std::to_string(sum));
  }
}

Matrix elementwise_log(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(i, j) = m(i, j) > 0.0 ? std::log(m(i, j))
                                : -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

PolicyPair softmax_policies(const PolicyParams& params) {
  if (!params.all_finite())
    throw ValidationError("policy logits contain non-finite entries");
  PolicyPair pair;
  softmax_rows(params.theta, pair.pi, pair.log_pi);
  softmax_rows(params.psi, pair.phi, pair.log_phi);
  return pair;
}

PolicyPair PolicyPair::from_policies(Matrix pi, Matrix phi) {
  check_row_stochastic(pi, "pi");
  check_row_stochastic(phi, "phi");
  PolicyPair pair;
  pair.log_pi = elementwise_log(pi);
  pair.log_phi = elementwise_log(phi);
  pair.pi = std::move(pi);
  pair.phi = std::move(phi);
  return pair;
}

double policy_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double p = row[i];
    if (p < 0.0)
      throw ValidationError("distribution entry " + std::to_string(i) + " is negative");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double policy_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& probs,
                      const Eigen::Ref<const Eigen::RowVectorXd>& logs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) h -= probs[i] * logs[i];
  return h;
}

namespace {

using nlohmann::json;

json require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw ValidationError(std::string("game document is missing field '") + name + "'");
  return *it;
}

}  // namespace

MarkovGame load_game(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("game document is not valid JSON: ") + e.what());
  }

  const int ns = require_field(j, "n_states").get<int>();
  const int na = require_field(j, "n_actions_max").get<int>();
  const int nb = require_field(j, "n_actions_min").get<int>();
  const double gamma = require_field(j, "gamma").get<double>();

  const json jrho = require_field(j, "rho");
  if (!jrho.is_array() || static_cast<int>(jrho.size()) != ns)
    throw ValidationError("rho must be an array of length n_states");
  Vector rho(ns);
  for (int s = 0; s < ns; ++s) rho[s] = jrho[s].get<double>();

  const json jr = require_field(j, "reward");
  const json jt = require_field(j, "transition");
  std::vector<double> reward;
  std::vector<double> transition;
  reward.reserve(static_cast<size_t>(ns) * na * nb);
  transition.reserve(static_cast<size_t>(ns) * na * nb * ns);
  if (static_cast<int>(jr.size()) != ns || static_cast<int>(jt.size()) != ns)
    throw ValidationError("reward/transition outer dimension must equal n_states");
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(jr[s].size()) != na || static_cast<int>(jt[s].size()) != na)
      throw ValidationError("reward/transition dimension mismatch at s=" + std::to_string(s));
    for (int a = 0; a < na; ++a) {
      if (static_cast<int>(jr[s][a].size()) != nb || static_cast<int>(jt[s][a].size()) != nb)
        throw ValidationError("reward/transition dimension mismatch at (s=" +
                              std::to_string(s) + ",a=" + std::to_string(a) + ")");
      for (int b = 0; b < nb; ++b) {
        reward.push_back(jr[s][a][b].get<double>());
        if (static_cast<int>(jt[s][a][b].size()) != ns)
          throw ValidationError("transition row at " + index3(s, a, b) +
                                " must have n_states entries");
        for (int s2 = 0; s2 < ns; ++s2)
          transition.push_back(jt[s][a][b][s2].get<double>());
      }
    }
  }
  return MarkovGame(ns, na, nb, std::move(transition), std::move(reward), gamma,
                    std::move(rho));
}

std::string save_game(const MarkovGame& g) {
  json j;
  j["n_states"] = g.n_states();
  j["n_actions_max"] = g.n_actions_max();
  j["n_actions_min"] = g.n_actions_min();
  j["gamma"] = g.gamma();
  json jrho = json::array();
  for (int s = 0; s < g.n_states(); ++s) jrho.push_back(g.rho()[s]);
  j["rho"] = jrho;
  json jr = json::array(), jt = json::array();
  for (int s = 0; s < g.n_states(); ++s) {
    json rs = json::array(), ts = json::array();
    for (int a = 0; a < g.n_actions_max(); ++a) {
      json ra = json::array(), ta = json::array();
      for (int b = 0; b < g.n_actions_min(); ++b) {
        ra.push_back(g.r(s, a, b));
        json row = json::array();
        for (int s2 = 0; s2 < g.n_states(); ++s2) row.push_back(g.p(s, a, b, s2));
        ta.push_back(row);
      }
      rs.push_back(ra);
      ts.push_back(ta);
    }
    jr.push_back(rs);
    jt.push_back(ts);
  }
  j["reward"] = jr;
  j["transition"] = jt;
  return j.dump(2) + "\n";
}

MarkovGame load_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open game file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_game(ss.str());
}

uint64_t game_hash(const MarkovGame& game) {
  const std::string doc = save_game(game);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : doc) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace zsmg
