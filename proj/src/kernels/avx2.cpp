#include <immintrin.h>

#include "packed_gemm.hpp"

namespace fadi::kernels::detail {
namespace {

struct MicroAvx2 {
  static constexpr std::size_t MR = 6;
  static constexpr std::size_t NR = 8;

  static void run(std::size_t kc, const double* ap, const double* bp, double* c,
                  std::size_t ldc, double alpha) {
    __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
    __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
    __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
    __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
    __m256d c40 = _mm256_setzero_pd(), c41 = _mm256_setzero_pd();
    __m256d c50 = _mm256_setzero_pd(), c51 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < kc; ++k) {
      const __m256d b0 = _mm256_loadu_pd(bp);
      const __m256d b1 = _mm256_loadu_pd(bp + 4);
      __m256d a = _mm256_broadcast_sd(ap);
      c00 = _mm256_fmadd_pd(a, b0, c00);
      c01 = _mm256_fmadd_pd(a, b1, c01);
      a = _mm256_broadcast_sd(ap + 1);
      c10 = _mm256_fmadd_pd(a, b0, c10);
      c11 = _mm256_fmadd_pd(a, b1, c11);
      a = _mm256_broadcast_sd(ap + 2);
      c20 = _mm256_fmadd_pd(a, b0, c20);
      c21 = _mm256_fmadd_pd(a, b1, c21);
      a = _mm256_broadcast_sd(ap + 3);
      c30 = _mm256_fmadd_pd(a, b0, c30);
      c31 = _mm256_fmadd_pd(a, b1, c31);
      a = _mm256_broadcast_sd(ap + 4);
      c40 = _mm256_fmadd_pd(a, b0, c40);
      c41 = _mm256_fmadd_pd(a, b1, c41);
      a = _mm256_broadcast_sd(ap + 5);
      c50 = _mm256_fmadd_pd(a, b0, c50);
      c51 = _mm256_fmadd_pd(a, b1, c51);
      ap += MR;
      bp += NR;
    }
    const __m256d al = _mm256_set1_pd(alpha);
    auto store = [&](double* row, __m256d lo, __m256d hi) {
      _mm256_storeu_pd(row, _mm256_add_pd(_mm256_loadu_pd(row), _mm256_mul_pd(al, lo)));
      _mm256_storeu_pd(row + 4,
                       _mm256_add_pd(_mm256_loadu_pd(row + 4), _mm256_mul_pd(al, hi)));
    };
    store(c, c00, c01);
    store(c + ldc, c10, c11);
    store(c + 2 * ldc, c20, c21);
    store(c + 3 * ldc, c30, c31);
    store(c + 4 * ldc, c40, c41);
    store(c + 5 * ldc, c50, c51);
  }
};

void gemm_avx2(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
               double beta) {
  packed_gemm<MicroAvx2>(a, b, c, ldc, alpha, beta, Blocking{256, 96, 2048});
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d al = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_add_pd(y0, _mm256_mul_pd(al, _mm256_loadu_pd(x + i)));
    y1 = _mm256_add_pd(y1, _mm256_mul_pd(al, _mm256_loadu_pd(x + i + 4)));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{gemm_avx2, axpy_avx2, dot_avx2};
  return t;
}

}  // namespace fadi::kernels::detail
