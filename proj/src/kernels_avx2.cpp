#include "fcs/kernels.hpp"

// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma;
// it must only be reached at runtime after avx2_supported() returned true.
//
// Reductions use four independent accumulators combined in a fixed order,
// so results are deterministic for a given input (they differ from the
// scalar backend by rounding only).

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace fcs::kern {
namespace {

inline double reduce4(__m256d acc0, __m256d acc1, __m256d acc2, __m256d acc3,
                      double tail) {
  __m256d s01 = _mm256_add_pd(acc0, acc1);
  __m256d s23 = _mm256_add_pd(acc2, acc3);
  __m256d s = _mm256_add_pd(s01, s23);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return reduce4(a0, a1, a2, a3, tail);
}

void axpy_avx2(double* y, const double* x, double a, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    y0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), y0);
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void scal_avx2(double* x, double a, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void gather_avx2(double* dst, const double* src, const std::int32_t* idx,
                 std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i iv = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    _mm256_storeu_pd(dst + i, _mm256_i32gather_pd(src, iv, 8));
  }
  for (; i < n; ++i) dst[i] = src[idx[i]];
}

double sparse_dot_avx2(const double* vals, const std::int32_t* idx,
                       std::size_t n, const double* x) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k + 4));
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), _mm256_i32gather_pd(x, i0, 8), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k + 4), _mm256_i32gather_pd(x, i1, 8), a1);
  }
  for (; k + 4 <= n; k += 4) {
    __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), _mm256_i32gather_pd(x, i0, 8), a0);
  }
  double tail = 0.0;
  for (; k < n; ++k) tail += vals[k] * x[idx[k]];
  __m256d s = _mm256_add_pd(a0, a1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + tail;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table{dot_avx2, axpy_avx2, scal_avx2, gather_avx2,
                         sparse_dot_avx2};
  return table;
}

}  // namespace fcs::kern

#else

#include <stdexcept>

namespace fcs::kern {
const Ops& avx2_ops() {
  throw std::runtime_error("avx2 kernels not compiled in this build");
}
}  // namespace fcs::kern

#endif
