#include "fadi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fadi/kernels.hpp"

namespace fadi {

namespace {

using ColMatrix = Eigen::MatrixXd;

kernels::ConstView view(const Matrix& a) {
  return {a.data(), static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()),
          static_cast<std::ptrdiff_t>(a.cols()), 1};
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace

OrthonormalBasis::OrthonormalBasis(Matrix base, double tol) : base_(std::move(base)) {
  require_finite(base_, "OrthonormalBasis");
  const Matrix gram = matmul_tn(base_, base_);
  const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(err <= tol)) {
    throw InvalidArgument("OrthonormalBasis: columns not orthonormal (max |B^T B - I| = " +
                          std::to_string(err) + ")");
  }
}

OrthonormalBasis OrthonormalBasis::adopt(Matrix base) {
  OrthonormalBasis b;
  b.base_ = std::move(base);
  return b;
}

OrthonormalBasis OrthonormalBasis::leading(Index k) const {
  require(k >= 0 && k <= rank(), "OrthonormalBasis::leading: k out of range");
  return adopt(base_.leftCols(k));
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& c, double alpha, double beta) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  require(c.rows() == a.rows() && c.cols() == b.cols(), "matmul: output shape");
  kernels::gemm(view(a), view(b), c.data(), static_cast<std::size_t>(c.cols()), alpha, beta);
}

void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c, double alpha, double beta) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  require(c.rows() == a.cols() && c.cols() == b.cols(), "matmul_tn: output shape");
  kernels::gemm(view(a).transposed(), view(b), c.data(), static_cast<std::size_t>(c.cols()),
                alpha, beta);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_into(a, b, c, 1.0, 0.0);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  matmul_tn_into(a, b, c, 1.0, 0.0);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  kernels::gemm(view(a), view(b).transposed(), c.data(), static_cast<std::size_t>(c.cols()),
                1.0, 0.0);
  return c;
}

double max_asymmetry(const Matrix& a) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst;
}

Vector fix_column_signs(Matrix& v) {
  Vector signs = Vector::Ones(v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (v.rows() > 0 && v(arg, j) < 0.0) {
      v.col(j) = -v.col(j);
      signs(j) = -1.0;
    }
  }
  return signs;
}

EigPair sym_eig_topk(const Matrix& a, Index k, bool by_magnitude) {
  require(a.rows() == a.cols(), "sym_eig_topk: matrix not square");
  require(k >= 1 && k <= a.rows(), "sym_eig_topk: k must lie in [1, d]");
  require_finite(a, "sym_eig_topk");
  const double scale = std::max(1.0, max_abs(a));
  if (max_asymmetry(a) > 1e-10 * scale) throw InvalidArgument("sym_eig_topk: matrix not symmetric");

  const ColMatrix sym = (0.5 * (a + a.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(sym);
  if (es.info() != Eigen::Success) throw DegenerateError("sym_eig_topk: eigensolver failed");
  const Vector& ev = es.eigenvalues();

  std::vector<Index> order(static_cast<std::size_t>(ev.size()));
  std::iota(order.begin(), order.end(), Index{0});
  if (by_magnitude) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return std::abs(ev(x)) > std::abs(ev(y)); });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return ev(x) > ev(y); });
  }

  EigPair out;
  out.values.resize(k);
  Matrix vecs(a.rows(), k);
  for (Index j = 0; j < k; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = ev(src);
    vecs.col(j) = es.eigenvectors().col(src);
  }
  fix_column_signs(vecs);
  out.vectors = OrthonormalBasis::adopt(std::move(vecs));
  return out;
}

ThinSvd svd_thin(const Matrix& y) {
  require(y.rows() >= 1 && y.cols() >= 1, "svd_thin: empty matrix");
  require_finite(y, "svd_thin");
  const ColMatrix cy = y;
  ColMatrix u;
  ColMatrix v;
  Vector s;
  if (std::min(y.rows(), y.cols()) <= 64) {
    Eigen::JacobiSVD<ColMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
        cy, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<ColMatrix> svd(cy, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  }
  Matrix um = u;
  const Vector signs = fix_column_signs(um);
  Matrix vt = v.transpose();
  for (Index j = 0; j < vt.rows(); ++j) vt.row(j) *= signs(j);
  return ThinSvd{OrthonormalBasis::adopt(std::move(um)), std::move(s), std::move(vt)};
}

Matrix pinv(const Matrix& a, double rel_tol) {
  require(rel_tol >= 0.0, "pinv: rel_tol must be nonnegative");
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  const ThinSvd svd = svd_thin(a);
  const double cut = rel_tol * (svd.s.size() > 0 ? svd.s(0) : 0.0);
  Matrix scaled_v = svd.vt.transpose();  // n x r
  for (Index j = 0; j < svd.s.size(); ++j) {
    const double sj = svd.s(j);
    scaled_v.col(j) *= (sj > cut && sj > 0.0) ? 1.0 / sj : 0.0;
  }
  return scaled_v * svd.u.mat().transpose();
}

Matrix matrix_signum(const Matrix& a) {
  if (a.size() == 0) return Matrix::Zero(a.rows(), a.cols());
  const ThinSvd svd = svd_thin(a);
  const double cut = 1e-12 * svd.s(0);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index j = 0; j < svd.s.size(); ++j) {
    if (svd.s(j) > cut && svd.s(j) > 0.0) out += svd.u.mat().col(j) * svd.vt.row(j);
  }
  return out;
}

double subspace_dist(const Matrix& u, const Matrix& v) {
  require(u.rows() == v.rows() && u.cols() == v.cols(), "subspace_dist: dimension mismatch");
  // ||UU^T - VV^T||_F^2 = 2 ||(I - VV^T) U||_F^2 for equal ranks; this form keeps
  // full relative accuracy for nearly equal subspaces.
  const Matrix vtu = matmul_tn(v, u);
  Matrix resid = u;
  matmul_into(v, vtu, resid, -1.0, 1.0);
  return std::sqrt(2.0) * resid.norm();
}

double subspace_dist(const OrthonormalBasis& u, const OrthonormalBasis& v) {
  return subspace_dist(u.mat(), v.mat());
}

Matrix inv_sqrt_psd(const Matrix& s, double floor) {
  require(s.rows() == s.cols() && s.rows() >= 1, "inv_sqrt_psd: matrix not square");
  require_finite(s, "inv_sqrt_psd");
  const double scale = std::max(1.0, max_abs(s));
  if (max_asymmetry(s) > 1e-10 * scale) throw InvalidArgument("inv_sqrt_psd: matrix not symmetric");
  const Index k = s.rows();
  if (floor < 0.0) floor = 1e-12 * s.trace() / static_cast<double>(k);
  const ColMatrix sym = (0.5 * (s + s.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(sym);
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > floor) || !(ev.minCoeff() > 0.0)) {
    throw DegenerateError("inv_sqrt_psd: smallest eigenvalue " + std::to_string(ev.minCoeff()) +
                          " not above floor");
  }
  const ColMatrix& q = es.eigenvectors();
  const Vector d = ev.cwiseSqrt().cwiseInverse();
  const ColMatrix out = q * d.asDiagonal() * q.transpose();
  Matrix r = out;
  r = 0.5 * (r + r.transpose()).eval();
  return r;
}

Matrix orthonormalize(const Matrix& a) {
  const ColMatrix ca = a;
  Eigen::HouseholderQR<ColMatrix> qr(ca);
  const ColMatrix q = qr.householderQ() * ColMatrix::Identity(a.rows(), a.cols());
  return q;
}

}  // namespace fadi
