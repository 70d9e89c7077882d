#include "varshap/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace varshap {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

uint64_t splitmix_finalize(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}
}  // namespace

uint64_t mix64(uint64_t seed, uint64_t counter) {
  return splitmix_finalize(seed + (counter + 1) * kGolden);
}

uint64_t CounterRng::next_u64() { return mix64(seed_, counter_++); }

double CounterRng::next_unit() {
  // Top 53 bits -> (0,1): add 0.5 before scaling so 0 is unreachable.
  uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_unit();
  double u2 = next_unit();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double CounterRng::next_sign() { return (next_u64() & 1ull) ? 1.0 : -1.0; }

uint64_t CounterRng::next_below(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
  // Rejection sampling on the top of the range keeps the draw unbiased.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t value = next_u64();
  while (value >= limit) value = next_u64();
  return value % bound;
}

void shuffle_indices(std::vector<int>& indices, CounterRng& rng) {
  for (size_t i = indices.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

}  // namespace varshap
