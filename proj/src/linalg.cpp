#include "fcs/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "fcs/kernels.hpp"
#include "fcs/parallel.hpp"

namespace fcs::la {

bool Csr::well_formed() const {
  if (static_cast<std::int64_t>(row_ptr.size()) != nrows + 1) return false;
  if (row_ptr.front() != 0 || row_ptr.back() != nnz()) return false;
  for (std::int64_t r = 0; r < nrows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) return false;
    for (std::int64_t k = row_ptr[r] + 1; k < row_ptr[r + 1]; ++k) {
      if (cols[k - 1] >= cols[k]) return false;
    }
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (cols[k] < 0 || cols[k] >= ncols) return false;
    }
  }
  return true;
}

Csr csr_from_triplets(std::int64_t nrows, std::int64_t ncols,
                      std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
      throw std::out_of_range("csr_from_triplets: triplet outside matrix");
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });
  Csr m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.row_ptr.assign(nrows + 1, 0);
  m.cols.reserve(triplets.size());
  m.vals.reserve(triplets.size());
  std::size_t i = 0;
  for (std::int64_t r = 0; r < nrows; ++r) {
    while (i < triplets.size() && triplets[i].row == r) {
      const std::int64_t c = triplets[i].col;
      double sum = triplets[i].value;
      ++i;
      while (i < triplets.size() && triplets[i].row == r &&
             triplets[i].col == c) {
        sum += triplets[i].value;
        ++i;
      }
      m.cols.push_back(static_cast<std::int32_t>(c));
      m.vals.push_back(sum);
    }
    m.row_ptr[r + 1] = static_cast<std::int64_t>(m.cols.size());
  }
  return m;
}

Csr transpose(const Csr& a) {
  Csr t;
  t.nrows = a.ncols;
  t.ncols = a.nrows;
  t.row_ptr.assign(t.nrows + 1, 0);
  for (std::int32_t c : a.cols) t.row_ptr[c + 1]++;
  for (std::int64_t r = 0; r < t.nrows; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
  t.cols.resize(a.cols.size());
  t.vals.resize(a.vals.size());
  std::vector<std::int64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::int64_t r = 0; r < a.nrows; ++r) {
    for (std::int64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const std::int64_t slot = cursor[a.cols[k]]++;
      t.cols[slot] = static_cast<std::int32_t>(r);
      t.vals[slot] = a.vals[k];
    }
  }
  return t;
}

Csr multiply(const Csr& a, const Csr& b) {
  if (a.ncols != b.nrows) throw std::invalid_argument("multiply: shape mismatch");
  Csr c;
  c.nrows = a.nrows;
  c.ncols = b.ncols;
  c.row_ptr.assign(a.nrows + 1, 0);
  std::vector<double> acc(b.ncols, 0.0);
  std::vector<char> used(b.ncols, 0);
  std::vector<std::int32_t> touched;
  for (std::int64_t i = 0; i < a.nrows; ++i) {
    touched.clear();
    for (std::int64_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
      const std::int32_t j = a.cols[ka];
      const double va = a.vals[ka];
      for (std::int64_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
        const std::int32_t col = b.cols[kb];
        if (!used[col]) {
          used[col] = 1;
          acc[col] = 0.0;
          touched.push_back(col);
        }
        acc[col] += va * b.vals[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::int32_t col : touched) {
      c.cols.push_back(col);
      c.vals.push_back(acc[col]);
      used[col] = 0;
    }
    c.row_ptr[i + 1] = static_cast<std::int64_t>(c.cols.size());
  }
  return c;
}

void spmv(const Csr& a, std::span<const double> x, std::span<double> y,
          int threads) {
  if (static_cast<std::int64_t>(x.size()) != a.ncols ||
      static_cast<std::int64_t>(y.size()) != a.nrows)
    throw std::invalid_argument("spmv: dimension mismatch");
  const kern::Ops& k = kern::ops();
  parallel_ranges(a.nrows, threads, [&](std::int64_t lo, std::int64_t hi, int) {
    for (std::int64_t r = lo; r < hi; ++r) {
      const std::int64_t b = a.row_ptr[r];
      y[r] = k.sparse_dot(a.vals.data() + b, a.cols.data() + b,
                          static_cast<std::size_t>(a.row_ptr[r + 1] - b),
                          x.data());
    }
  });
}

void extract_submatrix_into(const Csr& m, std::span<const std::int32_t> rows,
                            std::span<const std::int32_t> cols, double* out) {
  const std::int64_t nc = static_cast<std::int64_t>(cols.size());
  std::fill(out, out + rows.size() * cols.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::int64_t r = rows[i];
    std::int64_t k = m.row_ptr[r];
    const std::int64_t kend = m.row_ptr[r + 1];
    std::int64_t j = 0;
    // Both the stored columns and the requested set are ascending.
    while (k < kend && j < nc) {
      const std::int32_t c = m.cols[k];
      if (c < cols[j]) {
        ++k;
      } else if (c > cols[j]) {
        ++j;
      } else {
        out[i * nc + j] = m.vals[k];
        ++k;
        ++j;
      }
    }
  }
}

DenseMatrix extract_submatrix(const Csr& m, std::span<const std::int32_t> rows,
                              std::span<const std::int32_t> cols) {
  for (std::int32_t r : rows)
    if (r < 0 || r >= m.nrows)
      throw std::out_of_range("extract_submatrix: row index out of range");
  for (std::int32_t c : cols)
    if (c < 0 || c >= m.ncols)
      throw std::out_of_range("extract_submatrix: column index out of range");
  DenseMatrix block;
  block.rows = static_cast<std::int64_t>(rows.size());
  block.cols = static_cast<std::int64_t>(cols.size());
  block.a.resize(block.rows * block.cols);
  extract_submatrix_into(m, rows, cols, block.a.data());
  return block;
}

void lu_factor_raw(double* a, std::int64_t m, std::int32_t* piv,
                   const char* label) {
  const kern::Ops& k = kern::ops();
  for (std::int64_t col = 0; col < m; ++col) {
    std::int64_t p = col;
    double best = std::abs(a[col * m + col]);
    for (std::int64_t i = col + 1; i < m; ++i) {
      const double v = std::abs(a[i * m + col]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    piv[col] = static_cast<std::int32_t>(p);
    if (p != col) {
      for (std::int64_t j = 0; j < m; ++j)
        std::swap(a[col * m + j], a[p * m + j]);
    }
    const double pivot = a[col * m + col];
    if (pivot == 0.0)
      throw SingularBlockError(
          std::string("singular block") +
          (label && *label ? std::string(" ") + label : std::string()) +
          ": zero pivot at elimination step " + std::to_string(col));
    const double inv = 1.0 / pivot;
    for (std::int64_t i = col + 1; i < m; ++i) {
      const double l = a[i * m + col] * inv;
      a[i * m + col] = l;
      k.axpy(a + i * m + col + 1, a + col * m + col + 1, -l,
             static_cast<std::size_t>(m - col - 1));
    }
  }
}

void lu_solve_raw(const double* a, const std::int32_t* piv, std::int64_t m,
                  double* x) {
  const kern::Ops& k = kern::ops();
  for (std::int64_t i = 0; i < m; ++i)
    if (piv[i] != i) std::swap(x[i], x[piv[i]]);
  // L y = Pb (unit diagonal)
  for (std::int64_t i = 1; i < m; ++i)
    x[i] -= k.dot(a + i * m, x, static_cast<std::size_t>(i));
  // U x = y
  for (std::int64_t i = m - 1; i >= 0; --i) {
    const double s = k.dot(a + i * m + i + 1, x + i + 1,
                           static_cast<std::size_t>(m - i - 1));
    x[i] = (x[i] - s) / a[i * m + i];
  }
}

void lu_solve_transposed_raw(const double* a, const std::int32_t* piv,
                             std::int64_t m, double* x) {
  // With PA = LU: A^T x = b  <=>  U^T z = b,  L^T w = z,  x = P^T w.
  for (std::int64_t i = 0; i < m; ++i) {
    double s = x[i];
    for (std::int64_t j = 0; j < i; ++j) s -= a[j * m + i] * x[j];
    x[i] = s / a[i * m + i];
  }
  for (std::int64_t i = m - 1; i >= 0; --i) {
    double s = x[i];
    for (std::int64_t j = i + 1; j < m; ++j) s -= a[j * m + i] * x[j];
    x[i] = s;
  }
  for (std::int64_t i = m - 1; i >= 0; --i)
    if (piv[i] != i) std::swap(x[i], x[piv[i]]);
}

DenseLu lu_factor(DenseMatrix block, const std::string& label) {
  if (block.rows != block.cols)
    throw std::invalid_argument("lu_factor: block not square");
  DenseLu f;
  f.m = block.rows;
  f.lu = std::move(block.a);
  f.piv.resize(f.m);
  lu_factor_raw(f.lu.data(), f.m, f.piv.data(), label.c_str());
  return f;
}

void lu_solve(const DenseLu& f, std::span<const double> rhs,
              std::span<double> x) {
  if (static_cast<std::int64_t>(rhs.size()) != f.m ||
      static_cast<std::int64_t>(x.size()) != f.m)
    throw std::invalid_argument("lu_solve: dimension mismatch");
  std::copy(rhs.begin(), rhs.end(), x.begin());
  lu_solve_raw(f.lu.data(), f.piv.data(), f.m, x.data());
}

void lu_solve_transposed(const DenseLu& f, std::span<const double> rhs,
                         std::span<double> x) {
  if (static_cast<std::int64_t>(rhs.size()) != f.m ||
      static_cast<std::int64_t>(x.size()) != f.m)
    throw std::invalid_argument("lu_solve_transposed: dimension mismatch");
  std::copy(rhs.begin(), rhs.end(), x.begin());
  lu_solve_transposed_raw(f.lu.data(), f.piv.data(), f.m, x.data());
}

namespace testing {
namespace {
std::atomic<bool> g_defeat{false};
}
void set_defeat_deterministic_accumulation(bool on) { g_defeat.store(on); }
bool defeat_deterministic_accumulation() { return g_defeat.load(); }
}  // namespace testing

void fixed_order_accumulate(std::span<double> target,
                            std::vector<Contribution> contributions) {
  if (!testing::defeat_deterministic_accumulation()) {
    std::stable_sort(contributions.begin(), contributions.end(),
                     [](const Contribution& a, const Contribution& b) {
                       return a.index != b.index ? a.index < b.index
                                                 : a.origin < b.origin;
                     });
  }
  const std::int64_t n = static_cast<std::int64_t>(target.size());
  for (const Contribution& c : contributions) {
    if (c.index < 0 || c.index >= n)
      throw std::out_of_range("fixed_order_accumulate: index out of range");
    target[c.index] += c.value;
  }
}

namespace {

constexpr std::int64_t kReduceBlock = 4096;

double blocked_reduce(std::span<const double> x, std::span<const double> y,
                      int threads) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n == 0) return 0.0;
  const std::int64_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(nblocks);
  const kern::Ops& k = kern::ops();
  parallel_ranges(nblocks, threads, [&](std::int64_t lo, std::int64_t hi, int) {
    for (std::int64_t b = lo; b < hi; ++b) {
      const std::int64_t off = b * kReduceBlock;
      const std::size_t len =
          static_cast<std::size_t>(std::min(kReduceBlock, n - off));
      partial[b] = k.dot(x.data() + off, y.data() + off, len);
    }
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double det_dot(std::span<const double> x, std::span<const double> y,
               int threads) {
  if (x.size() != y.size())
    throw std::invalid_argument("det_dot: dimension mismatch");
  return blocked_reduce(x, y, threads);
}

double det_norm2(std::span<const double> x, int threads) {
  return std::sqrt(blocked_reduce(x, x, threads));
}

double det_norm2_partitioned(std::span<const double> x,
                             std::span<const std::int64_t> range_bounds,
                             int threads) {
  if (!testing::defeat_deterministic_accumulation() || range_bounds.size() < 2)
    return det_norm2(x, threads);
  // Negative control: naive per-range partial sums combined in rank order,
  // the summation pattern an unsynchronized distributed reduction would use.
  double total = 0.0;
  for (std::size_t r = 0; r + 1 < range_bounds.size(); ++r) {
    double part = 0.0;
    for (std::int64_t i = range_bounds[r]; i < range_bounds[r + 1]; ++i)
      part += x[i] * x[i];
    total += part;
  }
  return std::sqrt(total);
}

}  // namespace fcs::la
