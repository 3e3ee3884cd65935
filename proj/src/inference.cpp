#include "fadi/inference.hpp"

#include <cmath>
#include <string>

#include "fadi/chi2.hpp"
#include "fadi/kernels.hpp"

namespace fadi {

namespace {

Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

Matrix sym_inverse(const Matrix& a, const char* what) {
  const Eigen::MatrixXd sym = symmetrize(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Vector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(ev.cwiseAbs().minCoeff() > 1e-12 * top))
    throw DegenerateError(std::string(what) + ": matrix is singular");
  const Eigen::MatrixXd inv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(Matrix(inv));
}

void check_row(const CovContext& ctx, std::size_t j) {
  require(j < static_cast<std::size_t>(ctx.vf.dim()), "row index out of range");
}

// Lambda^{-1} Vf^T diag(w) Vf Lambda^{-1}.
Matrix sandwich(const CovContext& ctx, const Vector& w) {
  const Matrix& vf = ctx.vf.mat();
  Matrix weighted = vf;
  for (Index i = 0; i < vf.rows(); ++i) weighted.row(i) *= w(i);
  const Matrix mid = matmul_tn(vf, weighted);
  return ctx.lambda_inv * mid * ctx.lambda_inv;
}

Matrix omega_times_b(const CovContext& ctx, const BOmega& b,
                     const std::vector<SketchResult>& sketches, std::uint64_t master_seed,
                     Matrix* yb) {
  const Index d = ctx.vf.dim();
  const Index K = ctx.vf.rank();
  require(!b.blocks.empty() && b.blocks.size() <= sketches.size(),
          "small-Lp covariance: sketch count differs from B blocks");
  const auto p = static_cast<std::size_t>(b.blocks.front().rows());
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
  Matrix c = Matrix::Zero(d, K);
  if (yb) *yb = Matrix::Zero(d, K);
  for (std::size_t l = 0; l < b.blocks.size(); ++l) {
    const Matrix omega = sketch_test_matrix(static_cast<std::size_t>(d), p, master_seed,
                                            sketches[l].ell);
    matmul_into(omega, b.blocks[l], c, inv_sqrt_p, 1.0);
    if (yb) {
      if (sketches[l].Yhat.size() == 0)
        throw InvalidArgument("small-Lp covariance needs retained sketches");
      matmul_into(sketches[l].Yhat, b.blocks[l], *yb, inv_sqrt_p, 1.0);
    }
  }
  return c;
}

CovEstimate small_impl(const CovContext& ctx, std::size_t j, std::optional<std::size_t> jprime,
                       const BOmega& b, const std::vector<SketchResult>& sketches,
                       std::uint64_t master_seed) {
  check_row(ctx, j);
  if (jprime) check_row(ctx, *jprime);
  const double L = static_cast<double>(b.blocks.size());
  const auto p = static_cast<std::size_t>(b.blocks.front().rows());
  if (b.blocks.size() * p > static_cast<std::size_t>(ctx.vf.dim()))
    warn("small-Lp covariance requested with Lp > d");
  CovEstimate out;
  out.j = j;
  out.jprime = jprime;
  out.regime = Regime::SmallLp;
  out.model = ctx.model;
  Matrix s;
  const double pair_factor = jprime ? 2.0 : 1.0;
  switch (ctx.model) {
    case ModelKind::SpikedCov: {
      // Sigma_hat Omega_l / sqrt(p) = (Yhat_l + sigma2 Omega_l) / sqrt(p).
      Matrix yb;
      const Matrix c = omega_times_b(ctx, b, sketches, master_seed, &yb);
      const Matrix g = matmul_tn(c, yb) + ctx.sigma2_hat * matmul_tn(c, c);
      s = pair_factor * ctx.sigma2_hat / (ctx.n * L * L) * g;
      break;
    }
    case ModelKind::GMM: {
      Matrix yb;
      const Matrix c = omega_times_b(ctx, b, sketches, master_seed, &yb);
      const Matrix g = matmul_tn(c, yb) + ctx.n * matmul_tn(c, c);
      s = pair_factor / (L * L) * g;
      break;
    }
    case ModelKind::DCMM:
    case ModelKind::IncompleteMatrix: {
      const Matrix c = omega_times_b(ctx, b, sketches, master_seed, nullptr);
      Vector w = variance_weights(ctx, j);
      if (jprime) w += variance_weights(ctx, *jprime);
      Matrix weighted = c;
      for (Index i = 0; i < c.rows(); ++i) weighted.row(i) *= w(i);
      s = matmul_tn(c, weighted) / (L * L);
      out.unsupported = true;
      break;
    }
  }
  out.sigma_hat = spd_repair(s);
  return out;
}

}  // namespace

Matrix BOmega::stacked() const {
  require(!blocks.empty(), "BOmega: no blocks");
  const Index p = blocks.front().rows();
  const Index K = blocks.front().cols();
  Matrix out(p * static_cast<Index>(blocks.size()), K);
  for (std::size_t l = 0; l < blocks.size(); ++l) out.middleRows(static_cast<Index>(l) * p, p) = blocks[l];
  return out;
}

Matrix apply_mhat(const Dataset& ds, const Matrix& w) {
  require(!ds.splits.empty(), "apply_mhat: dataset has no splits");
  Matrix sum;
  for (std::size_t s = 0; s < ds.splits.size(); ++s) {
    Matrix part = ds.splits[s].apply(w);
    if (s == 0) {
      sum = std::move(part);
    } else {
      kernels::axpy(static_cast<std::size_t>(sum.size()), 1.0, part.data(), sum.data());
    }
  }
  if (is_sample_split(ds.model) && ds.correction() != 0.0)
    kernels::axpy(static_cast<std::size_t>(sum.size()), -ds.correction(), w.data(), sum.data());
  return sum;
}

Matrix lambda_tilde(const OrthonormalBasis& vf, const Dataset& ds) {
  require(vf.dim() == static_cast<Index>(ds.dims.d), "lambda_tilde: dimension mismatch");
  return symmetrize(matmul_tn(vf.mat(), apply_mhat(ds, vf.mat())));
}

double residual_variance(const Dataset& ds, const OrthonormalBasis& vf, const Matrix& lt) {
  require(ds.model == ModelKind::IncompleteMatrix, "residual_variance: incomplete model only");
  require(ds.prep.done && ds.prep.observed_pairs > 0, "residual_variance: run step0 first");
  const Matrix a = vf.mat() * lt;
  const Matrix& v = vf.mat();
  const double theta = ds.prep.theta_hat;
  double sum = 0.0;
  for (const auto& sp : ds.splits) {
    for (std::size_t jl = 0; jl < sp.size(); ++jl) {
      const std::size_t j = sp.begin() + jl;
      for (std::size_t i = 0; i <= j; ++i) {
        if (!sp.observed(i, jl)) continue;
        const double mt = a.row(Index(i)).dot(v.row(Index(j)));
        // theta_hat * M_hat equals the raw observation.
        const double r = theta * sp.scale() * sp.data()(Index(i), Index(jl)) - mt;
        sum += r * r;
      }
    }
  }
  return sum / static_cast<double>(ds.prep.observed_pairs);
}

CovContext make_cov_context(const Dataset& ds, const OrthonormalBasis& vf) {
  CovContext ctx;
  ctx.model = ds.model;
  ctx.vf = vf;
  ctx.lambda_tilde = lambda_tilde(vf, ds);
  ctx.lambda_inv = sym_inverse(ctx.lambda_tilde, "Lambda_tilde");
  ctx.n = static_cast<double>(ds.dims.n);
  switch (ds.model) {
    case ModelKind::SpikedCov:
      require(ds.prep.done, "covariance: run step0 first");
      ctx.sigma2_hat = ds.prep.sigma2_hat;
      break;
    case ModelKind::IncompleteMatrix:
      require(ds.prep.done, "covariance: run step0 first");
      ctx.theta_hat = ds.prep.theta_hat;
      ctx.sigma2_hat = residual_variance(ds, vf, ctx.lambda_tilde);
      break;
    default:
      break;
  }
  return ctx;
}

Vector mtilde_row(const CovContext& ctx, std::size_t j) {
  check_row(ctx, j);
  const Matrix& v = ctx.vf.mat();
  const Eigen::RowVectorXd a = v.row(Index(j)) * ctx.lambda_tilde;
  return v * a.transpose();
}

Vector variance_weights(const CovContext& ctx, std::size_t j) {
  Vector m = mtilde_row(ctx, j);
  if (ctx.model == ModelKind::DCMM) {
    m = m.cwiseMax(0.0).cwiseMin(1.0);
    return m.array() * (1.0 - m.array());
  }
  require(ctx.model == ModelKind::IncompleteMatrix, "variance_weights: model has no entrywise plug-in");
  const double th = ctx.theta_hat;
  return (m.array().square() * (1.0 - th) / th + ctx.sigma2_hat / th).matrix();
}

CovEstimate cov_large(const CovContext& ctx, std::size_t j) {
  check_row(ctx, j);
  CovEstimate out;
  out.j = j;
  out.regime = Regime::LargeLp;
  out.model = ctx.model;
  const Matrix& li = ctx.lambda_inv;
  Matrix s;
  switch (ctx.model) {
    case ModelKind::SpikedCov:
      s = (ctx.sigma2_hat * li + ctx.sigma2_hat * ctx.sigma2_hat * li * li) / ctx.n;
      break;
    case ModelKind::GMM:
      s = li + ctx.n * li * li;
      break;
    case ModelKind::DCMM:
    case ModelKind::IncompleteMatrix:
      s = sandwich(ctx, variance_weights(ctx, j));
      break;
  }
  out.sigma_hat = spd_repair(s);
  return out;
}

CovEstimate cov_large_pair(const CovContext& ctx, std::size_t j, std::size_t jprime) {
  CovEstimate a = cov_large(ctx, j);
  const CovEstimate b = cov_large(ctx, jprime);
  a.sigma_hat = spd_repair(a.sigma_hat + b.sigma_hat);
  a.jprime = jprime;
  return a;
}

BOmega build_b_omega(const OrthonormalBasis& vf, const std::vector<SketchResult>& sketches,
                     std::size_t count) {
  if (count == 0) count = sketches.size();
  require(count >= 1 && count <= sketches.size(), "build_b_omega: invalid sketch count");
  BOmega out;
  out.blocks.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    const Matrix& y = sketches[l].Yhat;
    if (y.size() == 0) throw InvalidArgument("build_b_omega: sketches were not retained");
    require(y.rows() == vf.dim(), "build_b_omega: dimension mismatch");
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(y.cols()));
    const Matrix proj = matmul_tn(vf.mat(), y) * inv_sqrt_p;  // K x p
    out.blocks.push_back(pinv(proj, 1e-12));
  }
  return out;
}

CovEstimate cov_small(const CovContext& ctx, std::size_t j, const BOmega& b,
                      const std::vector<SketchResult>& sketches, std::uint64_t master_seed) {
  return small_impl(ctx, j, std::nullopt, b, sketches, master_seed);
}

CovEstimate cov_small_pair(const CovContext& ctx, std::size_t j, std::size_t jprime,
                           const BOmega& b, const std::vector<SketchResult>& sketches,
                           std::uint64_t master_seed) {
  return small_impl(ctx, j, jprime, b, sketches, master_seed);
}

Matrix spd_repair(const Matrix& s) {
  require(s.rows() == s.cols() && s.rows() >= 1, "spd_repair: matrix not square");
  if (!s.allFinite()) throw DegenerateError("covariance has non-finite entries");
  Matrix sym = symmetrize(s);
  const double tr = sym.trace();
  if (!(tr > 0.0)) throw DegenerateError("covariance has non-positive trace");
  const Eigen::MatrixXd cs = sym;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cs);
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() > 0.0) return sym;
  if (ev.minCoeff() <= -1e-10 * tr)
    throw DegenerateError("covariance is not positive definite (eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) <= 0.0) ev(i) = 1e-12 * tr;
  const Eigen::MatrixXd rebuilt = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(Matrix(rebuilt));
}

AlignMatrix align_to_truth(const OrthonormalBasis& vf, const OrthonormalBasis& v) {
  require(vf.dim() == v.dim() && vf.rank() == v.rank(), "align_to_truth: shape mismatch");
  return AlignMatrix{matrix_signum(matmul_tn(vf.mat(), v.mat()))};
}

double wald_row(const OrthonormalBasis& vf, std::size_t j, const OrthonormalBasis& v,
                const AlignMatrix& h, const Matrix& sigma) {
  require(j < static_cast<std::size_t>(vf.dim()), "wald_row: row index out of range");
  const Eigen::RowVectorXd diff =
      vf.mat().row(Index(j)) - v.mat().row(Index(j)) * h.H.transpose();
  const Vector z = inv_sqrt_psd(sigma) * diff.transpose();
  return z.squaredNorm();
}

PairTest pairwise_test(const OrthonormalBasis& vf, std::size_t j, std::size_t jprime,
                       const Matrix& sigma_pair) {
  require(j < static_cast<std::size_t>(vf.dim()) && jprime < static_cast<std::size_t>(vf.dim()),
          "pairwise_test: row index out of range");
  const Eigen::RowVectorXd diff = vf.mat().row(Index(j)) - vf.mat().row(Index(jprime));
  const Vector z = inv_sqrt_psd(sigma_pair) * diff.transpose();
  PairTest out;
  out.statistic = z.squaredNorm();
  out.pvalue = 1.0 - chi2_cdf(static_cast<std::size_t>(vf.rank()), out.statistic);
  return out;
}

}  // namespace fadi
