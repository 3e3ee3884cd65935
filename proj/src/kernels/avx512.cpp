#include <immintrin.h>

#include "packed_gemm.hpp"

namespace fadi::kernels::detail {
namespace {

struct MicroAvx512 {
  static constexpr std::size_t MR = 8;
  static constexpr std::size_t NR = 24;

  static void run(std::size_t kc, const double* ap, const double* bp, double* c,
                  std::size_t ldc, double alpha) {
    __m512d acc[MR][3];
#pragma GCC unroll 8
    for (std::size_t i = 0; i < MR; ++i) {
      acc[i][0] = _mm512_setzero_pd();
      acc[i][1] = _mm512_setzero_pd();
      acc[i][2] = _mm512_setzero_pd();
    }
    for (std::size_t k = 0; k < kc; ++k) {
      const __m512d b0 = _mm512_loadu_pd(bp);
      const __m512d b1 = _mm512_loadu_pd(bp + 8);
      const __m512d b2 = _mm512_loadu_pd(bp + 16);
#pragma GCC unroll 8
      for (std::size_t i = 0; i < MR; ++i) {
        const __m512d a = _mm512_set1_pd(ap[i]);
        acc[i][0] = _mm512_fmadd_pd(a, b0, acc[i][0]);
        acc[i][1] = _mm512_fmadd_pd(a, b1, acc[i][1]);
        acc[i][2] = _mm512_fmadd_pd(a, b2, acc[i][2]);
      }
      ap += MR;
      bp += NR;
    }
    const __m512d al = _mm512_set1_pd(alpha);
#pragma GCC unroll 8
    for (std::size_t i = 0; i < MR; ++i) {
      double* row = c + i * ldc;
#pragma GCC unroll 3
      for (std::size_t v = 0; v < 3; ++v) {
        const __m512d cur = _mm512_loadu_pd(row + 8 * v);
        _mm512_storeu_pd(row + 8 * v, _mm512_add_pd(cur, _mm512_mul_pd(al, acc[i][v])));
      }
    }
  }
};

void gemm_avx512(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
                 double beta) {
  packed_gemm<MicroAvx512>(a, b, c, ldc, alpha, beta, Blocking{256, 96, 2400});
}

void axpy_avx512(std::size_t n, double alpha, const double* x, double* y) {
  const __m512d al = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d yv = _mm512_loadu_pd(y + i);
    _mm512_storeu_pd(y + i, _mm512_add_pd(yv, _mm512_mul_pd(al, _mm512_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx512(std::size_t n, const double* x, const double* y) {
  __m512d s0 = _mm512_setzero_pd();
  __m512d s1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), s0);
    s1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), s1);
  }
  double s = _mm512_reduce_add_pd(_mm512_add_pd(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

const KernelTable& avx512_table() {
  static const KernelTable t{gemm_avx512, axpy_avx512, dot_avx512};
  return t;
}

}  // namespace fadi::kernels::detail
