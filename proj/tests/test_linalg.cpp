#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "fcs/linalg.hpp"
#include "test_support.hpp"

using namespace fcs;

namespace {

la::Csr random_sparse(test::Rng& rng, std::int64_t n, double fill,
                      test::Dense* mirror = nullptr) {
  std::vector<la::Triplet> trips;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      if (rng.next_double() < fill) {
        const double v = rng.uniform(-2, 2);
        trips.push_back({i, j, v});
        if (mirror) mirror->at(i, j) += v;
      }
    }
  }
  return la::csr_from_triplets(n, n, std::move(trips));
}

}  // namespace

TEST_CASE("csr_from_triplets combines duplicates and keeps stored zeros") {
  std::vector<la::Triplet> t = {{0, 1, 2.0}, {1, 0, 3.0}, {0, 1, -2.0}, {1, 1, 1.0}};
  la::Csr m = la::csr_from_triplets(2, 2, t);
  CHECK(m.well_formed());
  CHECK(m.nnz() == 3);  // (0,1) kept although the sum cancels to zero
  CHECK(m.vals[0] == 0.0);
  CHECK(m.cols[0] == 1);
}

TEST_CASE("spmv matches a dense oracle and is thread-count independent") {
  test::Rng rng(11);
  const std::int64_t n = 40;
  test::Dense d(n);
  la::Csr m = random_sparse(rng, n, 0.2, &d);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1, 1);
  std::vector<double> y1(n), y8(n);
  la::spmv(m, x, y1, 1);
  la::spmv(m, x, y8, 8);
  CHECK(std::memcmp(y1.data(), y8.data(), n * sizeof(double)) == 0);
  auto yd = test::dense_apply(d, x);
  for (std::int64_t i = 0; i < n; ++i)
    CHECK(y1[i] == doctest::Approx(yd[i]).epsilon(1e-13));
}

TEST_CASE("transpose round-trips") {
  test::Rng rng(12);
  la::Csr m = random_sparse(rng, 23, 0.15);
  la::Csr tt = la::transpose(la::transpose(m));
  CHECK(tt.row_ptr == m.row_ptr);
  CHECK(tt.cols == m.cols);
  CHECK(tt.vals == m.vals);
}

TEST_CASE("extract_submatrix matches dense reconstruction") {
  test::Rng rng(13);
  const std::int64_t n = 20;
  test::Dense d(n);
  la::Csr m = random_sparse(rng, n, 0.3, &d);

  SUBCASE("full index set gives a dense copy") {
    std::vector<std::int32_t> all(n);
    for (std::int64_t i = 0; i < n; ++i) all[i] = std::int32_t(i);
    auto block = la::extract_submatrix(m, all, all);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        CHECK(block.at(i, j) == d.at(i, j));
  }
  SUBCASE("empty index set gives a 0x0 block") {
    auto block = la::extract_submatrix(m, {}, {});
    CHECK(block.rows == 0);
    CHECK(block.cols == 0);
  }
  SUBCASE("random subsets, entrywise") {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::int32_t> rows, cols;
      for (std::int32_t i = 0; i < n; ++i) {
        if (rng.next_double() < 0.4) rows.push_back(i);
        if (rng.next_double() < 0.4) cols.push_back(i);
      }
      auto block = la::extract_submatrix(m, rows, cols);
      for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
          CHECK(block.at(a, b) == d.at(rows[a], cols[b]));
    }
  }
  SUBCASE("out-of-range index throws") {
    std::vector<std::int32_t> bad = {0, std::int32_t(n)};
    CHECK_THROWS_AS(la::extract_submatrix(m, bad, bad), std::out_of_range);
  }
}

TEST_CASE("dense LU basics") {
  SUBCASE("identity block returns the rhs") {
    la::DenseMatrix id{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}};
    auto lu = la::lu_factor(id);
    std::vector<double> rhs = {1.5, -2.0, 3.25}, x(3);
    la::lu_solve(lu, rhs, x);
    CHECK(x == rhs);
  }
  SUBCASE("antidiagonal 2x2 needs the pivot and swaps the rhs") {
    la::DenseMatrix m{2, 2, {0, 1, 1, 0}};
    auto lu = la::lu_factor(m);
    std::vector<double> rhs = {7.0, 9.0}, x(2);
    la::lu_solve(lu, rhs, x);
    CHECK(x[0] == 9.0);
    CHECK(x[1] == 7.0);
  }
  SUBCASE("singular block throws with the label") {
    la::DenseMatrix m{2, 2, {1, 2, 2, 4}};
    CHECK_THROWS_AS(la::lu_factor(m, "subdomain 42"), la::SingularBlockError);
    la::DenseMatrix m2{2, 2, {1, 2, 2, 4}};
    try {
      la::lu_factor(m2, "subdomain 42");
    } catch (const la::SingularBlockError& e) {
      CHECK(std::string(e.what()).find("subdomain 42") != std::string::npos);
    }
  }
}

TEST_CASE("LU solves a random diagonally dominant 59x59 block accurately") {
  test::Rng rng(14);
  const std::int64_t n = 59;
  la::DenseMatrix m{n, n, std::vector<double>(n * n)};
  for (std::int64_t i = 0; i < n; ++i) {
    double off = 0;
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      m.at(i, j) = rng.uniform(-1, 1);
      off += std::abs(m.at(i, j));
    }
    m.at(i, i) = off + 1.0;
  }
  la::DenseMatrix copy = m;
  auto lu = la::lu_factor(std::move(m));
  std::vector<double> rhs(n), x(n);
  for (auto& v : rhs) v = rng.uniform(-1, 1);
  la::lu_solve(lu, rhs, x);
  double rinf = 0, binf = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double ax = 0;
    for (std::int64_t j = 0; j < n; ++j) ax += copy.at(i, j) * x[j];
    rinf = std::max(rinf, std::abs(ax - rhs[i]));
    binf = std::max(binf, std::abs(rhs[i]));
  }
  CHECK(rinf <= 1e-10 * binf);
}

TEST_CASE("transposed solve matches rows of the dense inverse") {
  test::Rng rng(15);
  const std::int64_t n = 17;
  la::DenseMatrix m{n, n, std::vector<double>(n * n)};
  test::Dense d(n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      const double v = rng.uniform(-1, 1) + (i == j ? 3.0 : 0.0);
      m.at(i, j) = v;
      d.at(i, j) = v;
    }
  auto lu = la::lu_factor(std::move(m));
  test::Dense inv = d;
  REQUIRE(test::invert_dense(inv));
  for (std::int64_t r : {std::int64_t(0), std::int64_t(5), n - 1}) {
    std::vector<double> e(n, 0.0), y(n);
    e[r] = 1.0;
    la::lu_solve_transposed(lu, e, y);
    // y^T = r-th row of inv(A)
    for (std::int64_t j = 0; j < n; ++j)
      CHECK(y[j] == doctest::Approx(inv.at(r, j)).epsilon(1e-10));
  }
}

TEST_CASE("fixed_order_accumulate is independent of arrival order") {
  test::Rng rng(16);
  const std::int64_t n = 257;
  std::vector<la::Contribution> contribs;
  for (int i = 0; i < 100000; ++i)
    contribs.push_back({std::int64_t(rng.next_below(n)), i, rng.uniform(-1, 1)});

  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0);
  la::fixed_order_accumulate(a, contribs);

  auto perm = contribs;
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.next_below(i)]);
  la::fixed_order_accumulate(b, perm);
  CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);

  SUBCASE("single contribution is a direct add") {
    std::vector<double> t(3, 1.0);
    la::fixed_order_accumulate(t, {{1, 0, 0.5}});
    CHECK(t[1] == 1.5);
  }

  SUBCASE("the negative-control hook breaks the guarantee") {
    la::testing::set_defeat_deterministic_accumulation(true);
    la::fixed_order_accumulate(c, perm);
    la::testing::set_defeat_deterministic_accumulation(false);
    CHECK(std::memcmp(a.data(), c.data(), n * sizeof(double)) != 0);
  }
}

TEST_CASE("blocked reductions are thread-count independent") {
  test::Rng rng(17);
  std::vector<double> x(50000), y(50000);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : y) v = rng.uniform(-1, 1);
  const double d1 = la::det_dot(x, y, 1);
  const double d8 = la::det_dot(x, y, 8);
  CHECK(std::memcmp(&d1, &d8, sizeof(double)) == 0);
  const double n1 = la::det_norm2(x, 1);
  const double n3 = la::det_norm2(x, 3);
  CHECK(std::memcmp(&n1, &n3, sizeof(double)) == 0);
}

TEST_CASE("partitioned reduction: honest path ignores ranks, hooked path does not") {
  test::Rng rng(18);
  std::vector<double> x(10000);
  for (auto& v : x) v = rng.uniform(-1, 1);
  std::vector<std::int64_t> ranks1 = {0, 10000};
  std::vector<std::int64_t> ranks4 = {0, 2500, 5000, 7500, 10000};
  const double a = la::det_norm2_partitioned(x, ranks1, 1);
  const double b = la::det_norm2_partitioned(x, ranks4, 1);
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  la::testing::set_defeat_deterministic_accumulation(true);
  const double c = la::det_norm2_partitioned(x, ranks1, 1);
  const double d = la::det_norm2_partitioned(x, ranks4, 1);
  la::testing::set_defeat_deterministic_accumulation(false);
  CHECK(std::memcmp(&c, &d, sizeof(double)) != 0);
}
