#pragma once

// Cache-blocked GEMM driver shared by the SIMD variants. Included only from
// translation units compiled with the matching ISA flags.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "table.hpp"

namespace fadi::kernels::detail {

struct Blocking {
  std::size_t kc;
  std::size_t mc;
  std::size_t nc;
};

// Panels are zero padded, so every output element goes through the same
// micro-kernel arithmetic no matter where it sits in the tile grid. This keeps
// results bitwise independent of how callers batch columns or rows.
template <std::size_t MR>
void pack_a(const ConstView& a, std::size_t i0, std::size_t k0, std::size_t mc,
            std::size_t kc, double* out) {
  for (std::size_t ir = 0; ir < mc; ir += MR) {
    const std::size_t mr = std::min(MR, mc - ir);
    for (std::size_t kk = 0; kk < kc; ++kk) {
      const double* src = a.data + static_cast<std::ptrdiff_t>(i0 + ir) * a.rs +
                          static_cast<std::ptrdiff_t>(k0 + kk) * a.cs;
      std::size_t ii = 0;
      for (; ii < mr; ++ii) out[ii] = src[static_cast<std::ptrdiff_t>(ii) * a.rs];
      for (; ii < MR; ++ii) out[ii] = 0.0;
      out += MR;
    }
  }
}

template <std::size_t NR>
void pack_b(const ConstView& b, std::size_t k0, std::size_t j0, std::size_t kc,
            std::size_t nc, double* out) {
  for (std::size_t jr = 0; jr < nc; jr += NR) {
    const std::size_t nr = std::min(NR, nc - jr);
    for (std::size_t kk = 0; kk < kc; ++kk) {
      const double* src = b.data + static_cast<std::ptrdiff_t>(k0 + kk) * b.rs +
                          static_cast<std::ptrdiff_t>(j0 + jr) * b.cs;
      std::size_t jj = 0;
      if (b.cs == 1) {
        for (; jj < nr; ++jj) out[jj] = src[jj];
      } else {
        for (; jj < nr; ++jj) out[jj] = src[static_cast<std::ptrdiff_t>(jj) * b.cs];
      }
      for (; jj < NR; ++jj) out[jj] = 0.0;
      out += NR;
    }
  }
}

// Micro must provide MR, NR and
//   static void run(std::size_t kc, const double* ap, const double* bp,
//                   double* c, std::size_t ldc, double alpha);
// computing c[i][j] = c[i][j] + alpha * sum_k ap[k][i] * bp[k][j] for the full
// MR x NR tile, with the product and the update rounded separately.
template <class Micro>
void packed_gemm(ConstView a, ConstView b, double* c, std::size_t ldc, double alpha,
                 double beta, Blocking blk) {
  constexpr std::size_t MR = Micro::MR;
  constexpr std::size_t NR = Micro::NR;
  const std::size_t m = a.rows;
  const std::size_t n = b.cols;
  const std::size_t k = a.cols;
  scale_output(c, m, n, ldc, beta);
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0) return;

  thread_local std::vector<double> abuf;
  thread_local std::vector<double> bbuf;
  const std::size_t mc_max = std::min(blk.mc, ((m + MR - 1) / MR) * MR);
  const std::size_t nc_max = std::min(blk.nc, ((n + NR - 1) / NR) * NR);
  const std::size_t kc_max = std::min(blk.kc, k);
  abuf.resize(mc_max * kc_max + MR);
  bbuf.resize(nc_max * kc_max + NR);
  alignas(64) double tile[Micro::MR * Micro::NR];

  for (std::size_t jc = 0; jc < n; jc += blk.nc) {
    const std::size_t nc = std::min(blk.nc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += blk.kc) {
      const std::size_t kc = std::min(blk.kc, k - pc);
      pack_b<NR>(b, pc, jc, kc, nc, bbuf.data());
      for (std::size_t ic = 0; ic < m; ic += blk.mc) {
        const std::size_t mc = std::min(blk.mc, m - ic);
        pack_a<MR>(a, ic, pc, mc, kc, abuf.data());
        for (std::size_t jr = 0; jr < nc; jr += NR) {
          const std::size_t nr = std::min(NR, nc - jr);
          const double* bp = bbuf.data() + jr * kc;
          for (std::size_t ir = 0; ir < mc; ir += MR) {
            const std::size_t mr = std::min(MR, mc - ir);
            const double* ap = abuf.data() + ir * kc;
            double* cp = c + (ic + ir) * ldc + jc + jr;
            if (mr == MR && nr == NR) {
              Micro::run(kc, ap, bp, cp, ldc, alpha);
            } else {
              std::fill(tile, tile + MR * NR, 0.0);
              Micro::run(kc, ap, bp, tile, NR, alpha);
              for (std::size_t i = 0; i < mr; ++i)
                for (std::size_t j = 0; j < nr; ++j) cp[i * ldc + j] += tile[i * NR + j];
            }
          }
        }
      }
    }
  }
}

}  // namespace fadi::kernels::detail
