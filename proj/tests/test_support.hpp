#pragma once

// Shared helpers for the test suites: a splitmix-based RNG with fully
// specified semantics (results identical on every platform, unlike
// std::uniform_real_distribution) and small dense oracles.

#include <cstdint>
#include <vector>

namespace fcs::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  // uniform in [a, b)
  double uniform(double a, double b) { return a + (b - a) * next_double(); }
  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Dense row-major helpers used as independent oracles.
struct Dense {
  std::int64_t n = 0;
  std::vector<double> a;
  explicit Dense(std::int64_t dim) : n(dim), a(dim * dim, 0.0) {}
  double& at(std::int64_t i, std::int64_t j) { return a[i * n + j]; }
  double at(std::int64_t i, std::int64_t j) const { return a[i * n + j]; }
};

// Gauss-Jordan inversion with partial pivoting; deliberately independent of
// the library's LU path. Returns false on a zero pivot.
bool invert_dense(Dense& m);

// y = M x
std::vector<double> dense_apply(const Dense& m, const std::vector<double>& x);

}  // namespace fcs::test
