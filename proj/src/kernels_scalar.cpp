#include "fcs/kernels.hpp"

// Reference kernels. Plain sequential loops; these define the semantics
// the SIMD variants are tested against.

namespace fcs::kern {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void gather_scalar(double* dst, const double* src, const std::int32_t* idx,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[idx[i]];
}

double sparse_dot_scalar(const double* vals, const std::int32_t* idx,
                         std::size_t n, const double* x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += vals[k] * x[idx[k]];
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{dot_scalar, axpy_scalar, scal_scalar, gather_scalar,
                         sparse_dot_scalar};
  return table;
}

}  // namespace fcs::kern
