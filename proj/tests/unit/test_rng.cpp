#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "varshap/rng.hpp"

using namespace varshap;

TEST_CASE("same seed reproduces the identical stream") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  CounterRng c(42), d(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.next_normal() == d.next_normal());
    CHECK(c.next_unit() == d.next_unit());
    CHECK(c.next_sign() == d.next_sign());
    CHECK(c.next_below(97) == d.next_below(97));
  }
}

TEST_CASE("different seeds give different streams") {
  CounterRng a(1), b(2);
  int differing = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() != b.next_u64()) ++differing;
  }
  CHECK(differing >= 60);
}

TEST_CASE("unit draws stay strictly inside (0,1)") {
  CounterRng rng(7);
  for (int i = 0; i < 100000; ++i) {
    double u = rng.next_unit();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("sign draws are +-1 and roughly balanced") {
  CounterRng rng(11);
  int plus = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double s = rng.next_sign();
    CHECK((s == 1.0 || s == -1.0));
    if (s > 0) ++plus;
  }
  // 5-sigma band around n/2 for a fair coin.
  double sigma = std::sqrt(n) / 2.0;
  CHECK(std::abs(plus - n / 2.0) < 5.0 * sigma);
}

TEST_CASE("bounded draws respect the bound and look uniform") {
  CounterRng rng(13);
  const uint64_t bound = 10;
  std::vector<int> counts(bound, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    uint64_t v = rng.next_below(bound);
    REQUIRE(v < bound);
    ++counts[v];
  }
  for (uint64_t k = 0; k < bound; ++k) {
    // Each cell expects n/bound = 10000, sigma ~ 95; allow 6 sigma.
    CHECK(std::abs(counts[k] - 10000.0) < 600.0);
  }
  CHECK(rng.next_below(1) == 0);
}

TEST_CASE("normal draws have standard moments") {
  CounterRng rng(17);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.next_normal();
    sum += x;
    sum2 += x * x;
    sum3 += x * x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  double skew = sum3 / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
  CHECK(std::abs(skew) < 0.05);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> once = idx, twice = idx;
  {
    CounterRng rng(5);
    shuffle_indices(once, rng);
  }
  {
    CounterRng rng(5);
    shuffle_indices(twice, rng);
  }
  CHECK(once == twice);
  std::vector<int> sorted_back = once;
  std::sort(sorted_back.begin(), sorted_back.end());
  CHECK(sorted_back == idx);
  // A 50-element shuffle virtually never returns identity.
  CHECK(once != idx);
}

TEST_CASE("stateless mix matches and separates streams") {
  CHECK(mix64(9, 0) == mix64(9, 0));
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(123, i));
  CHECK(seen.size() == 1000);
}
