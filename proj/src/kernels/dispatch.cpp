#include <atomic>
#include <cstdlib>
#include <string>

#include "table.hpp"

namespace fadi::kernels {

namespace {

Isa probe() {
#ifdef FADI_HAVE_X86_SIMD
  __builtin_cpu_init();
  const bool fma = __builtin_cpu_supports("fma");
  if (__builtin_cpu_supports("avx512f") && fma) return Isa::Avx512;
  if (__builtin_cpu_supports("avx2") && fma) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa clamp(Isa want) {
  const Isa have = detected_isa();
  return static_cast<int>(want) <= static_cast<int>(have) ? want : have;
}

Isa initial_isa() {
  if (const char* env = std::getenv("FADI_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2") return clamp(Isa::Avx2);
    if (v == "avx512") return clamp(Isa::Avx512);
  }
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const detail::KernelTable& table(Isa isa) {
  switch (clamp(isa)) {
#ifdef FADI_HAVE_X86_SIMD
    case Isa::Avx512:
      return detail::avx512_table();
    case Isa::Avx2:
      return detail::avx2_table();
#endif
    default:
      return detail::scalar_table();
  }
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) { active().store(clamp(isa), std::memory_order_relaxed); }

bool isa_available(Isa isa) { return clamp(isa) == isa; }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx512:
      return "avx512";
    case Isa::Avx2:
      return "avx2";
    default:
      return "scalar";
  }
}

void gemm(Isa isa, ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
          double beta) {
  table(isa).gemm(a, b, c, ldc, alpha, beta);
}

void gemm(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha, double beta) {
  gemm(active_isa(), a, b, c, ldc, alpha, beta);
}

void axpy(Isa isa, std::size_t n, double alpha, const double* x, double* y) {
  table(isa).axpy(n, alpha, x, y);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  axpy(active_isa(), n, alpha, x, y);
}

double dot(Isa isa, std::size_t n, const double* x, const double* y) {
  return table(isa).dot(n, x, y);
}

double dot(std::size_t n, const double* x, const double* y) {
  return dot(active_isa(), n, x, y);
}

}  // namespace fadi::kernels
