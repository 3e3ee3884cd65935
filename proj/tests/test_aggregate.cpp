#include <doctest.h>

#include <cmath>

#include "fadi/aggregate.hpp"
#include "fadi/pipeline.hpp"
#include "helpers.hpp"

using namespace fadi;

namespace {

std::vector<OrthonormalBasis> random_bases(Index d, Index k, std::size_t L, std::uint64_t seed) {
  std::vector<OrthonormalBasis> out;
  for (std::size_t l = 0; l < L; ++l) out.emplace_back(test::random_orthonormal(d, k, seed + l));
  return out;
}

Matrix dense_average(const std::vector<OrthonormalBasis>& bases) {
  Matrix s = Matrix::Zero(bases[0].dim(), bases[0].dim());
  for (const auto& b : bases) s += b.mat() * b.mat().transpose();
  return s / double(bases.size());
}

Vector singvals_with_tail(std::initializer_list<double> head, std::size_t p, double tail) {
  Vector s = Vector::Constant(Index(p), tail);
  Index i = 0;
  for (double v : head) s(i++) = v;
  return s;
}

}  // namespace

TEST_CASE("projection average apply examples") {
  const OrthonormalBasis b(test::random_orthonormal(20, 3, 1));
  const ProjectionAverage one({b});
  CHECK(test::rel_diff(one.apply(b.mat()), b.mat()) < 1e-14);

  Matrix e = Matrix::Zero(6, 2);
  e(0, 0) = e(1, 1) = 1;
  const ProjectionAverage avg({OrthonormalBasis(e)});
  Matrix x = Matrix::Zero(6, 3);
  x.bottomRows(4) = test::random_matrix(4, 3, 2);
  CHECK(avg.apply(x).norm() == 0.0);
}

TEST_CASE("projection average matches the dense sum of projectors") {
  const auto bases = random_bases(40, 3, 9, 10);
  const ProjectionAverage avg(bases);
  const Matrix dense = dense_average(bases);
  const Matrix x = test::random_matrix(40, 7, 3);
  CHECK(test::rel_diff(proj_avg_apply(avg, x), Matrix(dense * x)) < 1e-13);
  CHECK(test::rel_diff(avg.materialize(), dense) < 1e-13);
  CHECK(avg.trace() == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(std::abs(dense.trace() - 3.0) <= 1e-10);
  const EigPair ep = sym_eig_topk(avg.materialize(), 40, false);
  CHECK(ep.values.minCoeff() >= -1e-10);
  CHECK(ep.values.maxCoeff() <= 1.0 + 1e-10);
}

TEST_CASE("projection average rejects mismatched bases") {
  std::vector<OrthonormalBasis> b{OrthonormalBasis(test::random_orthonormal(10, 2, 1)),
                                  OrthonormalBasis(test::random_orthonormal(10, 3, 2))};
  CHECK_THROWS_AS(ProjectionAverage{b}, InvalidArgument);
  CHECK_THROWS_AS(ProjectionAverage(std::vector<OrthonormalBasis>{}), InvalidArgument);
}

TEST_CASE("exact estimate examples") {
  const OrthonormalBasis b(test::random_orthonormal(30, 3, 4));
  const ProjectionAverage same({b, b, b, b});
  CHECK(subspace_dist(exact_pcs(same, 3).basis, b) < 1e-12);

  // Two lines in the plane at angle t: the top eigenvector bisects them with
  // eigenvalue (1 + cos t) / 2.
  const double t = 0.7;
  Matrix u1(2, 1), u2(2, 1), mid(2, 1);
  u1 << 1, 0;
  u2 << std::cos(t), std::sin(t);
  mid << std::cos(t / 2), std::sin(t / 2);
  const ProjectionAverage two({OrthonormalBasis(u1), OrthonormalBasis(u2)});
  const PCEstimate est = exact_pcs(two, 1);
  CHECK(subspace_dist(est.basis.mat(), mid) < 1e-12);
  CHECK((*est.eigvals)(0) == doctest::Approx((1 + std::cos(t)) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(exact_pcs(two, 1, 1), InvalidArgument);
}

TEST_CASE("powered estimate examples") {
  const OrthonormalBasis b(test::random_orthonormal(50, 3, 5));
  const ProjectionAverage same({b, b});
  for (std::size_t q : {1u, 2u, 7u}) CHECK(subspace_dist(powered_pcs(same, 3, 12, q, 3).basis, b) < 1e-10);

  const auto bases = random_bases(40, 3, 6, 30);
  const ProjectionAverage avg(bases);
  const Matrix dense = dense_average(bases);
  const Matrix omega = gaussian_test_matrix(40, 12, 99, "omegaF", 0);
  const Matrix y = dense * dense * dense * omega;
  const PCEstimate want{svd_thin(y).u.leading(3), PCMethod::TildeVF, std::nullopt};
  CHECK(subspace_dist(powered_pcs(avg, 3, 12, 3, 99).basis, want.basis) <= 1e-8);
  CHECK_THROWS_AS(powered_pcs(avg, 3, 2, 3, 99), InvalidArgument);
  CHECK_THROWS_AS(powered_pcs(avg, 3, 12, 0, 99), InvalidArgument);
}

TEST_CASE("powered and exact paths agree at the simulation scale") {
  SpikedParams p;
  p.d = 500;
  p.n = 20000;
  p.K = 3;
  p.lambda = Vector(3);
  p.lambda << 6, 4, 2;
  p.m = 20;
  Dataset ds = generate_spiked(p, 7);
  step0(ds, Step0Options{6, {}});
  SketchPlan plan;
  plan.p = 12;
  plan.L = 42;
  plan.K = 3;
  plan.master_seed = 7;
  FitOptions opt;
  opt.exact = true;
  const FadiFit fit = run_fadi(ds, plan, opt);
  CHECK(subspace_dist(fit.vf.basis, fit.vtilde->basis) <= 0.01);
  CHECK(refit_prefix(fit, 42).basis.mat() == fit.vf.basis.mat());
}

TEST_CASE("local rank estimate examples") {
  const Vector exact = singvals_with_tail({9, 7, 5}, 12, 0.0);
  for (double mu0 : {1e-6, 0.5, 5.0 / std::sqrt(12.0) * 0.999}) CHECK(estimate_rank_local(exact, 12, mu0).rank == 3);
  const LocalRank flat = estimate_rank_local(Vector::Constant(12, 2.0), 12, 0.1);
  CHECK(flat.rank == 0);
  CHECK(flat.no_signal);
  Vector steep(12);
  for (Index i = 0; i < 12; ++i) steep(i) = 100.0 - 8.0 * double(i);
  const LocalRank fb = estimate_rank_local(steep, 12, 0.1);
  CHECK(fb.rank == 11);
  CHECK(fb.fallback);
  CHECK_THROWS_AS(estimate_rank_local(exact, 12, 0.0), InvalidArgument);
}

TEST_CASE("median with ceiling") {
  CHECK(median_ceil({3, 3, 3}) == 3);
  CHECK(median_ceil({2, 3}) == 3);
  CHECK(median_ceil({3, 3, 4, 4, 4}) == 4);
  CHECK(median_ceil({4, 2}) == 3);
  CHECK(median_ceil({1, 2, 2, 1}) == 2);
  CHECK_THROWS_AS(median_ceil({}), InvalidArgument);
}

TEST_CASE("rank estimate from sketches") {
  std::vector<SketchResult> sk(3);
  sk[0].singvals = singvals_with_tail({9, 7, 5}, 12, 0.0);
  sk[1].singvals = singvals_with_tail({9, 7, 5, 4}, 12, 0.0);
  sk[2].singvals = singvals_with_tail({9, 7}, 12, 0.0);
  CHECK(estimate_rank(sk, 12, 0.5) == 3);
}

TEST_CASE("fit with an estimated rank on an exact low-rank target") {
  IncompleteParams ip;
  ip.d = 60;
  ip.K = 3;
  ip.lambda = Vector(3);
  ip.lambda << 6, 4, 2;
  ip.theta = 1.0;
  ip.sigma = 0.0;
  ip.m = 3;
  Dataset ds = generate_incomplete(ip, 2);
  step0(ds, {});
  SketchPlan plan;
  plan.p = 12;
  plan.L = 5;
  plan.master_seed = 1;
  FitOptions opt;
  opt.mu0 = 0.01;
  const FadiFit fit = run_fadi(ds, plan, opt);
  CHECK(fit.rank_estimated);
  CHECK(fit.K == 3);
  CHECK(subspace_dist(fit.vf.basis, ds.truth->V) <= 1e-8);
}
