#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fadi/linalg.hpp"
#include "fadi/models.hpp"
#include "fadi/sketch.hpp"

namespace fadi {

struct CovEstimate {
  Matrix sigma_hat;
  std::size_t j = 0;
  std::optional<std::size_t> jprime;
  Regime regime = Regime::LargeLp;
  ModelKind model = ModelKind::SpikedCov;
  bool unsupported = false;  // small-Lp plug-in without distributional backing
};

struct AlignMatrix {
  Matrix H;
};

struct BOmega {
  std::vector<Matrix> blocks;  // p x K each
  Matrix stacked() const;
};

// M_hat W evaluated split by split, identity correction applied once at the end.
Matrix apply_mhat(const Dataset& ds, const Matrix& w);

// Vf^T M_hat Vf, symmetrized.
Matrix lambda_tilde(const OrthonormalBasis& vf, const Dataset& ds);

// Everything the covariance plug-ins need from one fitted estimate.
struct CovContext {
  ModelKind model = ModelKind::SpikedCov;
  OrthonormalBasis vf;
  Matrix lambda_tilde;
  Matrix lambda_inv;
  double n = 0.0;
  double sigma2_hat = 0.0;  // spiked: step-0 estimate; incomplete: residual variance
  double theta_hat = 0.0;   // incomplete
};

CovContext make_cov_context(const Dataset& ds, const OrthonormalBasis& vf);

// Row j of Vf Lambda_tilde Vf^T.
Vector mtilde_row(const CovContext& ctx, std::size_t j);

// Per-coordinate variance weights of row j for the DCMM and incomplete plug-ins.
Vector variance_weights(const CovContext& ctx, std::size_t j);

// Mean squared residual of the observed entries (i <= j) around Vf Lambda_tilde Vf^T.
double residual_variance(const Dataset& ds, const OrthonormalBasis& vf, const Matrix& lambda_tilde);

CovEstimate cov_large(const CovContext& ctx, std::size_t j);
// Sigma_j + Sigma_j'.
CovEstimate cov_large_pair(const CovContext& ctx, std::size_t j, std::size_t jprime);

// Blocks pinv(Vf^T Yhat_l / sqrt(p)) for the first `count` sketches (all when 0).
BOmega build_b_omega(const OrthonormalBasis& vf, const std::vector<SketchResult>& sketches,
                     std::size_t count = 0);

// Small-Lp plug-ins; Omega_l is rebuilt from (master_seed, "omega", l).
CovEstimate cov_small(const CovContext& ctx, std::size_t j, const BOmega& b,
                      const std::vector<SketchResult>& sketches, std::uint64_t master_seed);
CovEstimate cov_small_pair(const CovContext& ctx, std::size_t j, std::size_t jprime,
                           const BOmega& b, const std::vector<SketchResult>& sketches,
                           std::uint64_t master_seed);

// Symmetrizes; clips eigenvalues in (-1e-10 tr, 0] up to 1e-12 tr; rejects lower.
Matrix spd_repair(const Matrix& s);

AlignMatrix align_to_truth(const OrthonormalBasis& vf, const OrthonormalBasis& v);

double wald_row(const OrthonormalBasis& vf, std::size_t j, const OrthonormalBasis& v,
                const AlignMatrix& h, const Matrix& sigma);

struct PairTest {
  double statistic = 0.0;
  double pvalue = 1.0;
};

PairTest pairwise_test(const OrthonormalBasis& vf, std::size_t j, std::size_t jprime,
                       const Matrix& sigma_pair);

}  // namespace fadi
