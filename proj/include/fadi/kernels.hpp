#pragma once

#include <cstddef>
#include <string_view>

namespace fadi::kernels {

enum class Isa { Scalar, Avx2, Avx512 };

// Strided read-only view: element (i, j) lives at data[i * rs + j * cs].
struct ConstView {
  const double* data;
  std::size_t rows;
  std::size_t cols;
  std::ptrdiff_t rs;
  std::ptrdiff_t cs;

  ConstView transposed() const { return {data, cols, rows, cs, rs}; }
};

// Best variant supported by this CPU and this build.
Isa detected_isa();

// Variant used by the untagged entry points. Defaults to detected_isa(),
// overridable with FADI_ISA=scalar|avx2|avx512 in the environment.
Isa active_isa();

// Selects a variant; requests above detected_isa() are clamped.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

// C = alpha * A * B + beta * C, C row-major with leading dimension ldc.
// beta == 0 overwrites C without reading it.
void gemm(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha, double beta);
void gemm(Isa isa, ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
          double beta);

// y += alpha * x
void axpy(std::size_t n, double alpha, const double* x, double* y);
void axpy(Isa isa, std::size_t n, double alpha, const double* x, double* y);

double dot(std::size_t n, const double* x, const double* y);
double dot(Isa isa, std::size_t n, const double* x, const double* y);

}  // namespace fadi::kernels
