#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fadi/linalg.hpp"
#include "helpers.hpp"

using namespace fadi;

TEST_CASE("sym_eig_topk on a diagonal spectrum returns canonical vectors") {
  Matrix a = Matrix::Zero(10, 10);
  a(0, 0) = 6;
  a(1, 1) = 4;
  a(2, 2) = 2;
  const EigPair ep = sym_eig_topk(a, 3, true);
  CHECK(ep.values(0) == doctest::Approx(6));
  CHECK(ep.values(1) == doctest::Approx(4));
  CHECK(ep.values(2) == doctest::Approx(2));
  CHECK(test::rel_diff(ep.vectors.mat(), Matrix::Identity(10, 3)) < 1e-12);
}

TEST_CASE("sym_eig_topk of the identity has residual zero") {
  const Matrix id = Matrix::Identity(6, 6);
  const EigPair ep = sym_eig_topk(id, 1, false);
  CHECK(ep.values(0) == doctest::Approx(1));
  CHECK((id * ep.vectors.mat() - ep.vectors.mat()).norm() < 1e-12);
}

TEST_CASE("sym_eig_topk matches a full dense eigendecomposition") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix a = test::random_symmetric(8, seed);
    const Eigen::MatrixXd ad = a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ad);
    // Oracle: sort the full spectrum by magnitude and take the top 3.
    std::vector<Index> order(8);
    for (Index i = 0; i < 8; ++i) order[std::size_t(i)] = i;
    std::sort(order.begin(), order.end(), [&](Index x, Index y) {
      return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
    });
    Matrix top(8, 3);
    for (Index k = 0; k < 3; ++k) top.col(k) = es.eigenvectors().col(order[std::size_t(k)]);
    const EigPair ep = sym_eig_topk(a, 3, true);
    CHECK(subspace_dist(ep.vectors.mat(), top) <= 1e-8);
    for (Index k = 0; k < 3; ++k) {
      CHECK(ep.values(k) == doctest::Approx(es.eigenvalues()(order[std::size_t(k)])).epsilon(1e-10));
      const Vector v = ep.vectors.mat().col(k);
      CHECK((a * v - ep.values(k) * v).norm() <= 1e-8 * es.eigenvalues().cwiseAbs().maxCoeff());
      Index arg;
      v.cwiseAbs().maxCoeff(&arg);
      CHECK(v(arg) > 0.0);
    }
    for (Index k = 1; k < 3; ++k) CHECK(std::abs(ep.values(k)) <= std::abs(ep.values(k - 1)));
  }
}

TEST_CASE("sym_eig_topk orders by signed value when asked") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << -5, 1, 2;
  CHECK(sym_eig_topk(a, 1, true).values(0) == doctest::Approx(-5));
  CHECK(sym_eig_topk(a, 1, false).values(0) == doctest::Approx(2));
}

TEST_CASE("sym_eig_topk rejects asymmetric input and oversized k") {
  Matrix a = Matrix::Identity(4, 4);
  a(0, 1) = 1e-3;
  CHECK_THROWS_AS(sym_eig_topk(a, 1, true), InvalidArgument);
  CHECK_THROWS_AS(sym_eig_topk(Matrix::Identity(4, 4), 5, true), InvalidArgument);
  CHECK_THROWS_AS(sym_eig_topk(Matrix::Identity(4, 4), 0, true), InvalidArgument);
}

TEST_CASE("svd_thin examples") {
  Matrix d2(2, 2);
  d2 << 3, 0, 0, 1;
  const ThinSvd s = svd_thin(d2);
  CHECK(s.s(0) == doctest::Approx(3));
  CHECK(s.s(1) == doctest::Approx(1));

  const Matrix u = test::random_matrix(6, 1, 3), v = test::random_matrix(4, 1, 4);
  const ThinSvd r1 = svd_thin(u * v.transpose());
  CHECK(r1.s(0) == doctest::Approx(u.norm() * v.norm()).epsilon(1e-12));
  for (Index k = 1; k < r1.s.size(); ++k) CHECK(r1.s(k) < 1e-12 * r1.s(0));
}

TEST_CASE("svd_thin reconstructs and matches the Gram eigendecomposition") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const Matrix y = test::random_matrix(20, 5, seed);
    const ThinSvd s = svd_thin(y);
    const Matrix rec = s.u.mat() * s.s.asDiagonal() * s.vt;
    CHECK((rec - y).norm() <= 1e-8 * s.s(0));
    for (Index k = 1; k < s.s.size(); ++k) CHECK(s.s(k) <= s.s(k - 1));
    // Oracle: singular values are square roots of the eigenvalues of Y^T Y.
    const Eigen::MatrixXd g = y.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    for (Index k = 0; k < 5; ++k)
      CHECK(s.s(k) == doctest::Approx(std::sqrt(es.eigenvalues()(4 - k))).epsilon(1e-10));
    // Left vectors span the same space as the leading eigenvectors of Y Y^T.
    const Eigen::MatrixXd gg = y * y.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(gg);
    const Matrix top = es2.eigenvectors().rightCols(5);
    CHECK(subspace_dist(s.u.mat(), top) < 1e-8);
  }
  Matrix bad = Matrix::Ones(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(svd_thin(bad), InvalidArgument);
}

TEST_CASE("pinv examples") {
  Matrix d(2, 2);
  d << 2, 0, 0, 0;
  Matrix want(2, 2);
  want << 0.5, 0, 0, 0;
  CHECK((pinv(d) - want).norm() < 1e-15);

  const Matrix a = test::random_matrix(3, 3, 77);
  const Eigen::MatrixXd ad = a;
  CHECK((pinv(a) - Matrix(ad.inverse())).norm() <= 1e-10 * Matrix(ad.inverse()).norm());

  const Matrix t = test::random_matrix(5, 2, 78);
  const Eigen::MatrixXd td = t;
  const Matrix normal_eq = (td.transpose() * td).inverse() * td.transpose();
  CHECK((pinv(t) - normal_eq).norm() <= 1e-10 * normal_eq.norm());
}

TEST_CASE("pinv satisfies the Moore-Penrose identities on random shapes") {
  std::mt19937_64 eng(4242);
  std::uniform_int_distribution<int> dim(1, 30), rk(1, 30);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index r = dim(eng), c = dim(eng);
    // Half of the draws are rank deficient.
    Matrix a;
    if (trial % 2 == 0) {
      a = test::random_matrix(r, c, std::uint64_t(trial) + 5000);
    } else {
      const Index k = std::min<Index>(rk(eng), std::min(r, c));
      a = test::random_matrix(r, k, std::uint64_t(trial) + 9000) *
          test::random_matrix(k, c, std::uint64_t(trial) + 19000);
    }
    const Matrix p = pinv(a);
    const double s = svd_thin(a).s(0);
    const double tol = 1e-8 * std::max(1.0, s);
    const Matrix ap = a * p, pa = p * a;
    const bool ok = (ap * a - a).norm() <= tol * std::max(1.0, s) && (pa * p - p).norm() <= tol * std::max(1.0, p.norm()) &&
                    (ap - ap.transpose()).norm() <= tol && (pa - pa.transpose()).norm() <= tol;
    failures += ok ? 0 : 1;
  }
  CHECK(failures == 0);
}

TEST_CASE("matrix_signum examples and the polar-factor oracle") {
  const Matrix id = Matrix::Identity(3, 3);
  CHECK((matrix_signum(id) - id).norm() < 1e-14);
  Matrix d(2, 2);
  d << 2, 0, 0, -3;
  Matrix want(2, 2);
  want << 1, 0, 0, -1;
  CHECK((matrix_signum(d) - want).norm() < 1e-14);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix a = test::random_matrix(3, 3, seed + 300);
    const Eigen::MatrixXd g = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::MatrixXd isq = es.operatorInverseSqrt();
    const Matrix polar = a * Matrix(isq);
    CHECK((matrix_signum(a) - polar).norm() < 1e-8);
  }
  const Matrix tall = test::random_matrix(7, 3, 55);
  const Matrix s = matrix_signum(tall);
  CHECK((s.transpose() * s - Matrix::Identity(3, 3)).norm() < 1e-8);
}

TEST_CASE("subspace_dist examples and identities") {
  const Matrix v = test::random_orthonormal(12, 3, 1);
  CHECK(subspace_dist(v, v) < 1e-14);
  Matrix e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(subspace_dist(e1, e2) == doctest::Approx(std::sqrt(2.0)));
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Matrix u = test::random_orthonormal(15, 4, seed), w = test::random_orthonormal(15, 4, seed + 100);
    const Matrix q = test::random_orthonormal(4, 4, seed + 200);
    const double dist = subspace_dist(u, w);
    // Direct evaluation of ||U U^T - W W^T||_F as the oracle.
    const double direct = (u * u.transpose() - w * w.transpose()).norm();
    CHECK(dist == doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::abs(subspace_dist(u * q, w) - dist) < 1e-12);
    CHECK(std::abs(subspace_dist(w, u) - dist) < 1e-12);
    CHECK(std::abs(dist * dist - (8.0 - 2.0 * (u.transpose() * w).squaredNorm())) < 1e-10);
    CHECK(dist <= std::sqrt(8.0) + 1e-12);
  }
  CHECK_THROWS_AS(subspace_dist(test::random_orthonormal(5, 2, 1), test::random_orthonormal(5, 3, 1)),
                  InvalidArgument);
}

TEST_CASE("projectors of decomposition outputs are idempotent") {
  const Matrix a = test::random_symmetric(20, 8);
  const EigPair ep = sym_eig_topk(a, 4, true);
  const Matrix pr = ep.vectors.mat() * ep.vectors.mat().transpose();
  CHECK((pr * pr - pr).norm() < 1e-8);
  CHECK(subspace_dist(ep.vectors, sym_eig_topk(a, 4, true).vectors) < 1e-12);
}

TEST_CASE("inv_sqrt_psd examples") {
  CHECK((inv_sqrt_psd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() < 1e-14);
  Matrix d(2, 2);
  d << 4, 0, 0, 9;
  Matrix want(2, 2);
  want << 0.5, 0, 0, 1.0 / 3.0;
  CHECK((inv_sqrt_psd(d) - want).norm() < 1e-14);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix b = test::random_matrix(3, 3, seed);
    const Matrix s = b * b.transpose() + 0.1 * Matrix::Identity(3, 3);
    const Matrix r = inv_sqrt_psd(s);
    CHECK((r * s * r - Matrix::Identity(3, 3)).norm() < 1e-6);
  }
  Matrix sing(2, 2);
  sing << 1, 0, 0, 0;
  CHECK_THROWS_AS(inv_sqrt_psd(sing), DegenerateError);
}

TEST_CASE("OrthonormalBasis validates its input") {
  CHECK_NOTHROW(OrthonormalBasis(test::random_orthonormal(6, 2, 3)));
  CHECK_THROWS_AS(OrthonormalBasis(test::random_matrix(6, 2, 3)), InvalidArgument);
  const OrthonormalBasis b(test::random_orthonormal(6, 3, 4));
  CHECK(b.leading(2).rank() == 2);
  CHECK(b.dim() == 6);
}

TEST_CASE("dense product helpers agree with Eigen") {
  const Matrix a = test::random_matrix(30, 20, 1), b = test::random_matrix(20, 10, 2), c = test::random_matrix(30, 10, 3);
  CHECK(test::rel_diff(matmul(a, b), Matrix(a * b)) < 1e-13);
  CHECK(test::rel_diff(matmul_tn(a, c), Matrix(a.transpose() * c)) < 1e-13);
  CHECK(test::rel_diff(matmul_nt(c, c), Matrix(c * c.transpose())) < 1e-13);
  Matrix out = c;
  matmul_into(a, b, out, 2.0, 1.0);
  CHECK(test::rel_diff(out, Matrix(2.0 * a * b + c)) < 1e-13);
}
