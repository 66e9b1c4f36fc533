#include "zsmg/game_library.hpp"

namespace zsmg {

namespace {

// Transition tensors shared by both paper games, P(s'|s,.,.) as 2x2 blocks
// with rows = max-player action, columns = min-player action.
std::vector<double> paper_transition() {
  const double p1_11[2][2] = {{0.2, 0.5}, {0.5, 0.1}};  // P(s1 | s1, a, b)
  const double p1_21[2][2] = {{0.3, 0.2}, {0.6, 0.2}};  // P(s1 | s2, a, b)
  std::vector<double> t(2 * 2 * 2 * 2);
  auto at = [&t](int s, int a, int b, int s2) -> double& {
    return t[((s * 2 + a) * 2 + b) * 2 + s2];
  };
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      at(0, a, b, 0) = p1_11[a][b];
      at(0, a, b, 1) = 1.0 - p1_11[a][b];
      at(1, a, b, 0) = p1_21[a][b];
      at(1, a, b, 1) = 1.0 - p1_21[a][b];
    }
  return t;
}

Vector half_half() {
  Vector rho(2);
  rho << 0.5, 0.5;
  return rho;
}

}  // namespace

MarkovGame paper_game_mixed() {
  std::vector<double> r = {1, 2, 2, 1,    // r(s1)
                           6, 4, 3, 10};  // r(s2)
  return MarkovGame(2, 2, 2, paper_transition(), std::move(r), 0.9, half_half());
}

MarkovGame paper_game_deterministic() {
  std::vector<double> r = {1, 2, 3, 4, 1, 2, 3, 4};
  return MarkovGame(2, 2, 2, paper_transition(), std::move(r), 0.9, half_half());
}

MarkovGame generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GameKind::paper_mixed:
      return paper_game_mixed();
    case GameKind::paper_deterministic:
      return paper_game_deterministic();
    default:
      break;
  }

  const int ns = spec.n_states;
  const int na = spec.kind == GameKind::random_mixed_2x2 ? 2 : spec.n_actions_max;
  const int nb = spec.kind == GameKind::random_mixed_2x2 ? 2 : spec.n_actions_min;
  if (ns <= 0 || na <= 0 || nb <= 0)
    throw ValidationError("generator dimensions must be positive");

  SplitMix64 rng(spec.seed);
  std::vector<double> reward(static_cast<size_t>(ns) * na * nb);
  if (spec.kind == GameKind::random_mixed_2x2) {
    // Dominant pair in [0.75, 1], the other two in [0, 0.25]: margin >= 0.5.
    for (int s = 0; s < ns; ++s) {
      const bool diag = rng.next() & 1;
      const double hi0 = 0.75 + 0.25 * rng.next_double();
      const double hi1 = 0.75 + 0.25 * rng.next_double();
      const double lo0 = 0.25 * rng.next_double();
      const double lo1 = 0.25 * rng.next_double();
      auto at = [&](int a, int b) -> double& {
        return reward[(static_cast<size_t>(s) * 2 + a) * 2 + b];
      };
      at(0, 0) = diag ? hi0 : lo0;
      at(1, 1) = diag ? hi1 : lo1;
      at(0, 1) = diag ? lo0 : hi0;
      at(1, 0) = diag ? lo1 : hi1;
    }
  } else {
    for (double& v : reward) v = rng.next_double();
  }

  std::vector<double> transition(static_cast<size_t>(ns) * na * nb * ns);
  for (size_t row = 0; row < transition.size() / ns; ++row) {
    double sum = 0.0;
    for (int s2 = 0; s2 < ns; ++s2) {
      // Bounded away from 0 so renormalized rows are well conditioned.
      const double v = 0.05 + rng.next_double();
      transition[row * ns + s2] = v;
      sum += v;
    }
    for (int s2 = 0; s2 < ns; ++s2) transition[row * ns + s2] /= sum;
  }

  const double gamma = spec.gamma.value_or(0.9);
  Vector rho = spec.rho.value_or(Vector::Constant(ns, 1.0 / ns));
  return MarkovGame(ns, na, nb, std::move(transition), std::move(reward), gamma,
                    std::move(rho));
}

}  // namespace zsmg
