#pragma once

#include <cstdint>
#include <vector>

namespace varshap {

// Counter-based generator: every draw is a pure function of (seed, counter),
// so experiments are bit-reproducible across platforms and thread schedules.
// Mixing is the splitmix64 finalizer over seed + (counter+1)*golden_gamma.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  uint64_t next_u64();
  // Uniform in (0,1): 53 mantissa bits, never exactly 0 or 1.
  double next_unit();
  // Standard normal via Box-Muller (caches the second deviate).
  double next_normal();
  // Rademacher draw: +1 or -1 with equal probability.
  double next_sign();
  // Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
  uint64_t next_below(uint64_t bound);

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic in-place Fisher-Yates shuffle driven by the counter RNG.
void shuffle_indices(std::vector<int>& indices, CounterRng& rng);

// Stateless convenience: the i-th mixed value of a seed stream.
uint64_t mix64(uint64_t seed, uint64_t counter);

}  // namespace varshap
