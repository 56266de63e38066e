#pragma once

// Deterministic sparse/dense linear algebra:
//   - compressed-row sparse matrices with strictly ascending column indices
//   - dense LU with partial pivoting (subdomain blocks, coarse-grid solve)
//   - fixed-order accumulation, the one reduction primitive allowed to
//     cross thread or simulated-rank boundaries
//   - blocked reductions whose result does not depend on the thread count

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcs::la {

struct Triplet {
  std::int64_t row;
  std::int64_t col;
  double value;
};

struct Csr {
  std::int64_t nrows = 0;
  std::int64_t ncols = 0;
  std::vector<std::int64_t> row_ptr;  // size nrows+1
  std::vector<std::int32_t> cols;     // ascending within each row
  std::vector<double> vals;

  std::int64_t nnz() const { return static_cast<std::int64_t>(cols.size()); }
  bool well_formed() const;
};

// Builds a CSR matrix from triplets. Duplicates are combined by summing in
// (row, col, insertion-order) order; combined entries are kept even when the
// sum is exactly zero, so the stored pattern reflects the couplings.
Csr csr_from_triplets(std::int64_t nrows, std::int64_t ncols,
                      std::vector<Triplet> triplets);

Csr transpose(const Csr& a);

// C = A B, deterministic (row merges in ascending column order).
Csr multiply(const Csr& a, const Csr& b);

// y = A x, rows processed independently (bitwise identical for any thread
// count). x and y must not alias.
void spmv(const Csr& a, std::span<const double> x, std::span<double> y,
          int threads);

struct DenseMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> a;  // row-major

  double& at(std::int64_t i, std::int64_t j) { return a[i * cols + j]; }
  double at(std::int64_t i, std::int64_t j) const { return a[i * cols + j]; }
};

// Dense block M[rows x cols] with entries taken from stored entries of m
// (zero where nothing is stored). Index sets must be sorted ascending.
DenseMatrix extract_submatrix(const Csr& m, std::span<const std::int32_t> rows,
                              std::span<const std::int32_t> cols);

// Same extraction into a caller-owned row-major buffer of size
// rows.size() * cols.size(); no bounds validation beyond debug assertions.
void extract_submatrix_into(const Csr& m, std::span<const std::int32_t> rows,
                            std::span<const std::int32_t> cols, double* out);

class SingularBlockError : public std::runtime_error {
 public:
  explicit SingularBlockError(const std::string& what)
      : std::runtime_error(what) {}
};

struct DenseLu {
  std::int64_t m = 0;
  std::vector<double> lu;         // packed factors, row-major
  std::vector<std::int32_t> piv;  // row i was swapped with piv[i]
};

// Partial pivoting; throws SingularBlockError on an exact zero pivot.
// `label` names the block in the error message.
DenseLu lu_factor(DenseMatrix block, const std::string& label = {});

void lu_solve(const DenseLu& lu, std::span<const double> rhs,
              std::span<double> x);
// Solves A^T x = rhs using the factors of A.
void lu_solve_transposed(const DenseLu& lu, std::span<const double> rhs,
                         std::span<double> x);

// Allocation-free variants over caller-owned buffers (the smoother's
// per-sweep path). `a` is factored in place; piv has length m.
void lu_factor_raw(double* a, std::int64_t m, std::int32_t* piv,
                   const char* label);
// In-place solve: x holds rhs on entry, the solution on exit.
void lu_solve_raw(const double* lu, const std::int32_t* piv, std::int64_t m,
                  double* x);
void lu_solve_transposed_raw(const double* lu, const std::int32_t* piv,
                             std::int64_t m, double* x);

struct Contribution {
  std::int64_t index;
  std::int64_t origin;  // stable producer id (element, subdomain, ...)
  double value;
};

// Adds contributions into target: sorted by (index, origin), then summed
// sequentially. The result is bitwise independent of the arrival order of
// the list, for any thread count or simulated-rank layout that produced it.
void fixed_order_accumulate(std::span<double> target,
                            std::vector<Contribution> contributions);

// Blocked reductions: values are combined in fixed-size blocks and block
// results merged in index order, so the result is bitwise independent of
// the thread count.
double det_dot(std::span<const double> x, std::span<const double> y,
               int threads);
double det_norm2(std::span<const double> x, int threads);

// Same reduction but laid out over explicit ranges (used by the simulated
// partitioned solver; an empty layout falls back to the fixed blocking).
// Honors the negative-control hook below.
double det_norm2_partitioned(std::span<const double> x,
                             std::span<const std::int64_t> range_bounds,
                             int threads);

namespace testing {
// Negative control for the determinism contract: when set, contribution
// lists are accumulated in arrival order without sorting and partitioned
// reductions collapse to naive per-range sums combined in rank order.
// Only the partition-check negative control should ever enable this.
void set_defeat_deterministic_accumulation(bool on);
bool defeat_deterministic_accumulation();
}  // namespace testing

}  // namespace fcs::la
