#pragma once

#include "zsmg/game.hpp"

#include <cstdint>
#include <optional>

namespace zsmg {

// splitmix64: tiny, fully specified, bit-identical on every platform.
// Games regenerate exactly from (kind, seed, dims).
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) from the top 53 bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

enum class GameKind { paper_mixed, paper_deterministic, random_mixed_2x2, random_general };

struct GeneratorSpec {
  GameKind kind = GameKind::random_general;
  uint64_t seed = 0;
  int n_states = 2;
  int n_actions_max = 2;
  int n_actions_min = 2;
  std::optional<double> gamma;  // default 0.9
  std::optional<Vector> rho;    // default uniform
};

// The 2-state completely mixed benchmark: P(s1|s1)=[[.2,.5],[.5,.1]] etc.,
// r(s1)=[[1,2],[2,1]], r(s2)=[[6,4],[3,10]], gamma=0.9, rho=[.5,.5].
MarkovGame paper_game_mixed();

// Same transitions, r(s,.,.)=[[1,2],[3,4]] in both states; the unique Nash
// equilibrium is pure: pi*=[0,1], phi*=[1,0] per state.
MarkovGame paper_game_deterministic();

// random_mixed_2x2 draws per-state 2x2 rewards in [0,1] whose (anti)diagonal
// dominates by at least 0.5, so the stage games stay completely mixed;
// random_general draws unconstrained rewards in [0,1]. Transitions are
// renormalized uniform draws. Deterministic in the seed.
MarkovGame generate(const GeneratorSpec& spec);

}  // namespace zsmg
