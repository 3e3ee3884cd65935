#pragma once

#include "fadi/kernels.hpp"

namespace fadi::kernels::detail {

using GemmFn = void (*)(ConstView, ConstView, double*, std::size_t, double, double);
using AxpyFn = void (*)(std::size_t, double, const double*, double*);
using DotFn = double (*)(std::size_t, const double*, const double*);

struct KernelTable {
  GemmFn gemm;
  AxpyFn axpy;
  DotFn dot;
};

const KernelTable& scalar_table();
#ifdef FADI_HAVE_X86_SIMD
const KernelTable& avx2_table();
const KernelTable& avx512_table();
#endif

// Applies beta to C before accumulation; beta == 0 clears.
inline void scale_output(double* c, std::size_t m, std::size_t n, std::size_t ldc,
                         double beta) {
  if (beta == 1.0) return;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * ldc;
    if (beta == 0.0) {
      for (std::size_t j = 0; j < n; ++j) row[j] = 0.0;
    } else {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
}

}  // namespace fadi::kernels::detail
