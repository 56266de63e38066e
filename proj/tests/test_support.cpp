#include "test_support.hpp"

#include <cmath>

namespace fcs::test {

bool invert_dense(Dense& m) {
  const std::int64_t n = m.n;
  Dense inv(n);
  for (std::int64_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;
  for (std::int64_t col = 0; col < n; ++col) {
    std::int64_t p = col;
    for (std::int64_t i = col + 1; i < n; ++i)
      if (std::abs(m.at(i, col)) > std::abs(m.at(p, col))) p = i;
    if (m.at(p, col) == 0.0) return false;
    if (p != col) {
      for (std::int64_t j = 0; j < n; ++j) {
        std::swap(m.at(col, j), m.at(p, j));
        std::swap(inv.at(col, j), inv.at(p, j));
      }
    }
    const double d = 1.0 / m.at(col, col);
    for (std::int64_t j = 0; j < n; ++j) {
      m.at(col, j) *= d;
      inv.at(col, j) *= d;
    }
    for (std::int64_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = m.at(i, col);
      if (f == 0.0) continue;
      for (std::int64_t j = 0; j < n; ++j) {
        m.at(i, j) -= f * m.at(col, j);
        inv.at(i, j) -= f * inv.at(col, j);
      }
    }
  }
  m = inv;
  return true;
}

std::vector<double> dense_apply(const Dense& m, const std::vector<double>& x) {
  std::vector<double> y(m.n, 0.0);
  for (std::int64_t i = 0; i < m.n; ++i)
    for (std::int64_t j = 0; j < m.n; ++j) y[i] += m.at(i, j) * x[j];
  return y;
}

}  // namespace fcs::test
