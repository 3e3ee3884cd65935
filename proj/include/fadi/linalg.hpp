#pragma once

#include <utility>

#include "fadi/common.hpp"

namespace fadi {

// d x k matrix with orthonormal columns.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;

  // Validates B^T B = I within tol (entrywise).
  explicit OrthonormalBasis(Matrix base, double tol = 1e-8);

  // Skips validation; for bases produced by a decomposition.
  static OrthonormalBasis adopt(Matrix base);

  const Matrix& mat() const { return base_; }
  Index dim() const { return base_.rows(); }
  Index rank() const { return base_.cols(); }

  // First k columns.
  OrthonormalBasis leading(Index k) const;

 private:
  Matrix base_;
};

struct EigPair {
  Vector values;
  OrthonormalBasis vectors;
};

struct ThinSvd {
  OrthonormalBasis u;
  Vector s;
  Matrix vt;
};

// Dense products routed through the dispatched GEMM kernels.
Matrix matmul(const Matrix& a, const Matrix& b);     // A B
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // A^T B
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // A B^T
// c = alpha * A B + beta * c, c must already have the right shape.
void matmul_into(const Matrix& a, const Matrix& b, Matrix& c, double alpha, double beta);
void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c, double alpha, double beta);

// Top-k eigenpairs of a symmetric matrix, ordered by |lambda| when by_magnitude,
// else by lambda, descending. Each eigenvector has its largest-magnitude entry
// positive.
EigPair sym_eig_topk(const Matrix& a, Index k, bool by_magnitude);

ThinSvd svd_thin(const Matrix& y);

Matrix pinv(const Matrix& a, double rel_tol = 1e-12);

// sum over sigma_j > tol of u_j v_j^T.
Matrix matrix_signum(const Matrix& a);

// ||U U^T - V V^T||_F.
double subspace_dist(const OrthonormalBasis& u, const OrthonormalBasis& v);
double subspace_dist(const Matrix& u, const Matrix& v);

// S^{-1/2}. floor < 0 selects the default 1e-12 * trace(S) / k.
Matrix inv_sqrt_psd(const Matrix& s, double floor = -1.0);

// Orthonormal basis of the column space of a full-column-rank matrix.
Matrix orthonormalize(const Matrix& a);

// Flips column signs so each column's largest-magnitude entry is positive.
// Returns the applied signs.
Vector fix_column_signs(Matrix& v);

double max_asymmetry(const Matrix& a);

}  // namespace fadi
