#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fcs/kernels.hpp"
#include "test_support.hpp"

using namespace fcs;

namespace {

std::vector<double> random_vec(test::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match straightforward loops") {
  const auto& k = kern::scalar_ops();
  test::Rng rng(1);
  auto x = random_vec(rng, 131, -1, 1);
  auto y = random_vec(rng, 131, -1, 1);
  double expect = 0;
  for (std::size_t i = 0; i < x.size(); ++i) expect += x[i] * y[i];
  CHECK(k.dot(x.data(), y.data(), x.size()) == doctest::Approx(expect).epsilon(1e-15));

  auto y2 = y;
  k.axpy(y2.data(), x.data(), 0.5, x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y2[i] == y[i] + 0.5 * x[i]);
}

TEST_CASE("simd variants agree with the scalar reference") {
  if (!kern::avx2_supported()) return;
  const auto& s = kern::scalar_ops();
  const auto& v = kern::avx2_ops();
  test::Rng rng(2);
  for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 17ul, 59ul, 256ul, 1000ul}) {
    auto x = random_vec(rng, n, -10, 10);
    auto y = random_vec(rng, n, -10, 10);

    // dot: tolerance scaled by the absolute sum, since SIMD reassociates.
    double abs_sum = 0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(x[i] * y[i]);
    const double ds = s.dot(x.data(), y.data(), n);
    const double dv = v.dot(x.data(), y.data(), n);
    CHECK(std::abs(ds - dv) <= 1e-14 * (abs_sum + 1.0));

    auto ys = y, yv = y;
    s.axpy(ys.data(), x.data(), 1.7, n);
    v.axpy(yv.data(), x.data(), 1.7, n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(ys[i] - yv[i]) <= 4e-16 * (std::abs(ys[i]) + std::abs(x[i])));

    auto xs = x, xv = x;
    s.scal(xs.data(), -0.3, n);
    v.scal(xv.data(), -0.3, n);
    CHECK(std::memcmp(xs.data(), xv.data(), n * sizeof(double)) == 0);

    if (n > 0) {
      std::vector<std::int32_t> idx(n);
      for (std::size_t i = 0; i < n; ++i)
        idx[i] = std::int32_t(rng.next_below(n));
      std::vector<double> gs(n), gv(n);
      s.gather(gs.data(), x.data(), idx.data(), n);
      v.gather(gv.data(), x.data(), idx.data(), n);
      CHECK(std::memcmp(gs.data(), gv.data(), n * sizeof(double)) == 0);

      const double sd = s.sparse_dot(y.data(), idx.data(), n, x.data());
      const double vd = v.sparse_dot(y.data(), idx.data(), n, x.data());
      CHECK(std::abs(sd - vd) <= 1e-14 * (abs_sum + 1.0));
    }
  }
}

TEST_CASE("each backend is bitwise deterministic call to call") {
  test::Rng rng(3);
  auto x = random_vec(rng, 777, -5, 5);
  auto y = random_vec(rng, 777, -5, 5);
  for (const auto* ops : {&kern::scalar_ops(),
                          kern::avx2_supported() ? &kern::avx2_ops() : nullptr}) {
    if (!ops) continue;
    const double a = ops->dot(x.data(), y.data(), x.size());
    const double b = ops->dot(x.data(), y.data(), x.size());
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }
}

TEST_CASE("backend selection can be forced") {
  kern::force_backend(kern::Backend::scalar);
  CHECK(kern::active_backend() == kern::Backend::scalar);
  if (kern::avx2_supported()) {
    kern::force_backend(kern::Backend::avx2);
    CHECK(kern::active_backend() == kern::Backend::avx2);
  }
  kern::force_backend(kern::parse_backend("auto"));
}
