#pragma once

// Low-level arithmetic kernels used by the linear algebra layer.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2/FMA, a vectorized variant. The active backend is picked once at
// startup (or forced via force_backend) and stays fixed for the lifetime
// of the process, so any single run is bitwise reproducible. The scalar
// and SIMD variants are equivalence-tested against each other in
// tests/test_kernels.cpp; they agree to rounding, not bitwise.

#include <cstddef>
#include <cstdint>
#include <string>

namespace fcs::kern {

enum class Backend { scalar, avx2 };

struct Ops {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double* y, const double* x, double a, std::size_t n);
  // x[i] *= a
  void (*scal)(double* x, double a, std::size_t n);
  // dst[i] = src[idx[i]]
  void (*gather)(double* dst, const double* src, const std::int32_t* idx,
                 std::size_t n);
  // sum_k vals[k] * x[idx[k]]  (one CSR row)
  double (*sparse_dot)(const double* vals, const std::int32_t* idx,
                       std::size_t n, const double* x);
};

const Ops& scalar_ops();
const Ops& avx2_ops();  // valid only if avx2_supported()

bool avx2_supported();

// Active backend. Defaults to the widest supported instruction set.
const Ops& ops();
Backend active_backend();
void force_backend(Backend b);

Backend parse_backend(const std::string& name);  // "auto"|"scalar"|"avx2"
const char* backend_name(Backend b);

}  // namespace fcs::kern
