#include "table.hpp"

namespace fadi::kernels::detail {
namespace {

// Reference kernels: plain loops, one accumulator per output element.
void gemm_scalar(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
                 double beta) {
  const std::size_t m = a.rows;
  const std::size_t n = b.cols;
  const std::size_t k = a.cols;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        s += a.data[static_cast<std::ptrdiff_t>(i) * a.rs + static_cast<std::ptrdiff_t>(t) * a.cs] *
             b.data[static_cast<std::ptrdiff_t>(t) * b.rs + static_cast<std::ptrdiff_t>(j) * b.cs];
      }
      double& out = c[i * ldc + j];
      out = (beta == 0.0 ? 0.0 : beta * out) + alpha * s;
    }
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{gemm_scalar, axpy_scalar, dot_scalar};
  return t;
}

}  // namespace fadi::kernels::detail
