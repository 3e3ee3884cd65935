#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include <Eigen/Eigenvalues>

#include "fadi/models.hpp"
#include "fadi/rng.hpp"
#include "helpers.hpp"

using namespace fadi;

namespace {

double op_norm(const Matrix& a) {
  const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

SpikedParams spiked(std::size_t d, std::size_t n, std::size_t m) {
  SpikedParams p;
  p.d = d;
  p.n = n;
  p.K = 3;
  p.lambda = Vector(3);
  p.lambda << 6, 4, 2;
  p.m = m;
  return p;
}

}  // namespace

TEST_CASE("keyed streams are reproducible and distinct") {
  Engine a = make_stream(7, "omega", 3), b = make_stream(7, "omega", 3);
  std::vector<double> x(64), y(64);
  fill_normal(a, x.data(), x.size());
  fill_normal(b, y.data(), y.size());
  CHECK(std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
  std::set<std::uint64_t> keys;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t i = 0; i < 50; ++i)
      for (const char* lab : {"omega", "omegaF", "rep", "gen"}) keys.insert(derive_key(s, lab, i));
  CHECK(keys.size() == 4 * 50 * 4);
}

TEST_CASE("normal draws have the right first two moments") {
  Engine e = make_stream(11, "clt", 0);
  std::vector<double> x(1000000);
  fill_normal(e, x.data(), x.size());
  double mean = 0, sq = 0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  for (double v : x) sq += (v - mean) * (v - mean);
  const double var = sq / double(x.size() - 1);
  CHECK(std::abs(mean) <= 4.0 / 1000.0);
  CHECK(std::abs(var - 1.0) <= 0.01);
}

TEST_CASE("partition offsets put the remainder first") {
  const auto off = partition_offsets(10, 3);
  CHECK(off == std::vector<std::size_t>{0, 4, 7, 10});
  CHECK(partition_offsets(6, 6).back() == 6);
}

TEST_CASE("model names round trip") {
  for (ModelKind k : {ModelKind::SpikedCov, ModelKind::DCMM, ModelKind::GMM, ModelKind::IncompleteMatrix})
    CHECK(parse_model(model_name(k)) == k);
  CHECK_THROWS_AS(parse_model("pca"), InvalidArgument);
}

TEST_CASE("spiked generator: axis-aligned population and split sizes") {
  SpikedParams p = spiked(400, 1000, 15);
  p.lambda << 49, 24, 11.5;
  p.axis_aligned = true;
  const Dataset ds = generate_spiked(p, 1);
  CHECK(ds.splits.size() == 15);
  std::size_t total = 0;
  for (const auto& s : ds.splits) total += s.size();
  CHECK(total == 1000);
  CHECK(ds.splits[0].size() == 67);
  CHECK(ds.splits[14].size() == 66);
  CHECK(test::rel_diff(ds.truth->V.mat(), Matrix::Identity(400, 3)) == 0.0);
  // Population covariance diag(50, 25, 12.5, 1, ...).
  const Matrix pop = ds.truth->V.mat() * ds.truth->Lambda.asDiagonal() * ds.truth->V.mat().transpose() +
                     *ds.truth->sigma2 * Matrix::Identity(400, 400);
  CHECK(pop(0, 0) == 50.0);
  CHECK(pop(1, 1) == 25.0);
  CHECK(pop(2, 2) == 12.5);
  CHECK(pop(3, 3) == 1.0);
}

TEST_CASE("spiked generator: sample covariance concentrates") {
  SpikedParams p = spiked(20, 100000, 4);
  const Dataset ds = generate_spiked(p, 2);
  const Matrix x = gather_data(ds);
  const Matrix cov = matmul_tn(x, x) / 100000.0;
  const Matrix pop = ds.truth->V.mat() * p.lambda.asDiagonal() * ds.truth->V.mat().transpose() +
                     Matrix::Identity(20, 20);
  // Relative to the population scale ||Sigma|| = 7.
  CHECK(op_norm(cov - pop) <= 5.0 * std::sqrt(20.0 / 100000.0) * op_norm(pop));
  CHECK(ds.truth->V.rank() == 3);
}

TEST_CASE("spiked generator: data do not depend on the split count") {
  const Dataset a = generate_spiked(spiked(30, 300, 1), 5), b = generate_spiked(spiked(30, 300, 7), 5);
  CHECK((gather_data(a) - gather_data(b)).norm() == 0.0);
}

TEST_CASE("spiked generator rejects invalid dimensions") {
  CHECK_THROWS_AS(generate_spiked(spiked(30, 20, 1), 1), InvalidArgument);
  SpikedParams p = spiked(30, 300, 1);
  p.lambda << 2, 4, 6;
  CHECK_THROWS_AS(generate_spiked(p, 1), InvalidArgument);
}

TEST_CASE("spiked model is unbiased once the true noise level is subtracted") {
  SpikedParams p = spiked(20, 100000, 5);
  Dataset ds = generate_spiked(p, 3);
  step0(ds, Step0Options{4, {}});
  ds.prep.correction = 1.0;  // exact substitution
  const Matrix m = ds.truth->V.mat() * p.lambda.asDiagonal() * ds.truth->V.mat().transpose();
  CHECK(op_norm(dense_mhat(ds) - m) <= 5.0 * std::sqrt(20.0 * 3.0 / 100000.0) * (6.0 + 1.0));
}

TEST_CASE("split components sum to the directly assembled estimate") {
  SUBCASE("spiked") {
    Dataset ds = generate_spiked(spiked(40, 400, 6), 4);
    step0(ds, Step0Options{6, {}});
    const Matrix x = gather_data(ds);
    Matrix direct = matmul_tn(x, x) / 400.0;
    direct.diagonal().array() -= ds.prep.sigma2_hat;
    Matrix summed = Matrix::Zero(40, 40);
    for (const auto& s : ds.splits) summed += s.materialize(true);
    CHECK((summed - direct).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((dense_mhat(ds) - direct).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("gmm") {
    GmmParams g;
    g.d = 30;
    g.n = 200;
    g.K = 3;
    g.m = 4;
    Dataset ds = generate_gmm(g, 8);
    step0(ds, {});
    const Matrix x = gather_data(ds);
    Matrix direct = matmul_tn(x, x);
    direct.diagonal().array() -= 200.0;
    CHECK((dense_mhat(ds) - direct).cwiseAbs().maxCoeff() <= 1e-10 * direct.cwiseAbs().maxCoeff());
  }
  SUBCASE("incomplete") {
    IncompleteParams ip;
    ip.d = 30;
    ip.K = 2;
    ip.lambda = Vector(2);
    ip.lambda << 3, 1;
    ip.m = 5;
    Dataset ds = generate_incomplete(ip, 9);
    const Step0Result r = step0(ds, {});
    const Matrix direct = gather_data(ds) / r.theta_hat;
    CHECK((dense_mhat(ds) - direct).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("dcmm generator: mixed-membership layout and truth column space") {
  const Matrix pi = mixed_membership_pi(500);
  CHECK(pi.row(0) == Eigen::RowVector3d(1, 0, 0).cast<double>());
  CHECK((pi.row(250) - Eigen::RowVector3d(0.6, 0.2, 0.2)).norm() < 1e-15);
  CHECK((pi.row(437) - Eigen::RowVector3d(1, 1, 1) / 3.0).norm() < 1e-15);
  DcmmParams p;
  p.d = 500;
  p.K = 3;
  p.theta = 0.9;
  p.Pi = pi;
  p.P = mixed_membership_p();
  p.m = 10;
  const Dataset ds = generate_dcmm(p, 1);
  CHECK(ds.splits.size() == 10);
  CHECK(subspace_dist(ds.truth->V.mat(), orthonormalize(0.9 * pi)) <= 1e-10);
  const Matrix x = gather_data(ds);
  CHECK(max_asymmetry(x) == 0.0);
  CHECK(((x.array() == 0.0) || (x.array() == 1.0)).all());
}

TEST_CASE("dcmm generator: entrywise mean over replicates") {
  DcmmParams p;
  p.d = 16;
  p.K = 3;
  p.theta = 0.9;
  p.Pi = mixed_membership_pi(16);
  p.P = mixed_membership_p();
  const Matrix m = p.theta * p.Pi * p.P * p.Pi.transpose();
  const int reps = 2000;
  Matrix acc = Matrix::Zero(16, 16);
  for (int r = 0; r < reps; ++r) acc += gather_data(generate_dcmm(p, std::uint64_t(r) + 100));
  acc /= double(reps);
  CHECK((acc - m).cwiseAbs().maxCoeff() <= 4.0 * std::sqrt(0.9 / reps));
}

TEST_CASE("dcmm generator: one community is an Erdos-Renyi graph") {
  DcmmParams p;
  p.d = 200;
  p.K = 1;
  p.theta = 0.5;
  p.Pi = Matrix::Ones(200, 1);
  p.P = Matrix::Constant(1, 1, 0.4);
  p.self_loops = false;
  const Matrix x = gather_data(generate_dcmm(p, 3));
  CHECK(x.diagonal().cwiseAbs().maxCoeff() == 0.0);
  const double pairs = 200.0 * 199.0 / 2.0;
  const double rate = (x.sum() / 2.0) / pairs;
  CHECK(std::abs(rate - 0.2) <= 4.0 * std::sqrt(0.2 * 0.8 / pairs));
}

TEST_CASE("dcmm generator rejects probabilities above one") {
  DcmmParams p;
  p.d = 20;
  p.K = 3;
  p.theta = 2.0;
  p.Pi = mixed_membership_pi(20);
  p.P = mixed_membership_p();
  CHECK_THROWS_AS(generate_dcmm(p, 1), InvalidArgument);
}

TEST_CASE("gmm generator: cluster structure and mean norms") {
  GmmParams g;
  g.d = 60;
  g.n = 20000;
  g.K = 3;
  g.m = 20;
  const Dataset ds = generate_gmm(g, 4);
  CHECK(ds.truth->labels->size() == 60);
  CHECK((*ds.truth->labels)[0] == 0);
  CHECK((*ds.truth->labels)[59] == 2);
  // Columns of the same cluster share their mean; the noiseless version shows it.
  GmmParams z = g;
  z.noise_sd = 0.0;
  const Matrix x = gather_data(generate_gmm(z, 4));
  CHECK((x.col(0) - x.col(19)).norm() == 0.0);
  const double delta = std::pow(20000.0, 2.0 / 3.0);
  for (Index k = 0; k < 3; ++k) {
    const double nrm2 = x.col(k * 20).squaredNorm();
    // Chi-square with n degrees of freedom scaled by delta/(2n).
    CHECK(std::abs(nrm2 - delta / 2.0) <= 5.0 * (delta / 2.0) * std::sqrt(2.0 / 20000.0));
  }
  // Truth spans the cluster indicators.
  Matrix f = Matrix::Zero(60, 3);
  for (Index j = 0; j < 60; ++j) f(j, j / 20) = 1.0;
  CHECK(subspace_dist(ds.truth->V.mat(), orthonormalize(f)) <= 1e-10);
}

TEST_CASE("gmm generator with one cluster") {
  GmmParams g;
  g.d = 10;
  g.n = 50;
  g.K = 1;
  const Dataset ds = generate_gmm(g, 1);
  CHECK(subspace_dist(ds.truth->V.mat(), Matrix::Constant(10, 1, 1.0 / std::sqrt(10.0))) < 1e-12);
}

TEST_CASE("incomplete generator: full observation without noise is exact") {
  IncompleteParams ip;
  ip.d = 40;
  ip.K = 3;
  ip.lambda = Vector(3);
  ip.lambda << 6, 4, 2;
  ip.theta = 1.0;
  ip.sigma = 0.0;
  ip.m = 4;
  const Dataset ds = generate_incomplete(ip, 2);
  const Matrix m = ds.truth->V.mat() * ip.lambda.asDiagonal() * ds.truth->V.mat().transpose();
  CHECK((gather_data(ds) - m).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("incomplete generator: observed fraction and step0 rate") {
  IncompleteParams ip;
  ip.d = 300;
  ip.K = 3;
  ip.lambda = Vector(3);
  ip.lambda << 6, 4, 2;
  ip.m = 6;
  Dataset ds = generate_incomplete(ip, 5);
  const Step0Result r = step0(ds, {});
  const double pairs = 300.0 * 301.0 / 2.0;
  CHECK(std::abs(r.theta_hat - 0.4) <= 3.0 * std::sqrt(0.4 * 0.6 / pairs));
  CHECK(double(r.observed_pairs) == doctest::Approx(r.theta_hat * pairs));
}

TEST_CASE("step0 on the spiked model") {
  SUBCASE("identity design gives unit noise") {
    // Rows sqrt(n) e_i for the first d rows: X^T X / n = I.
    const std::size_t d = 10, n = 10;
    Matrix x = std::sqrt(double(n)) * Matrix::Identity(n, d);
    Dataset ds = dataset_from_samples(ModelKind::SpikedCov, x, 2);
    const Step0Result r = step0(ds, Step0Options{4, {}});
    CHECK(r.sigma2_hat == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("large sample") {
    SpikedParams p = spiked(50, 100000, 10);
    Dataset ds = generate_spiked(p, 6);
    const Step0Result r = step0(ds, Step0Options{6, {}});
    CHECK(std::abs(r.sigma2_hat - 1.0) <= 0.02);
    double shares = 0;
    for (const auto& s : ds.splits) shares += s.identity_share();
    CHECK(shares == doctest::Approx(r.sigma2_hat));
  }
  SUBCASE("invalid index sets") {
    Dataset ds = generate_spiked(spiked(20, 100, 2), 6);
    CHECK_THROWS_AS(step0(ds, Step0Options{3, {}}), InvalidArgument);
    CHECK_THROWS_AS(step0(ds, Step0Options{21, {}}), InvalidArgument);
  }
}

TEST_CASE("rank thresholds") {
  Mu0Stats st;
  st.d = 500;
  st.n = 20000;
  st.p = 12;
  // (500 (20000 * 12)^{-1/2} log 500)^{3/4} / 12, evaluated in double precision.
  CHECK(mu0_default(ModelKind::SpikedCov, st) == doctest::Approx(0.33306373775673354).epsilon(1e-14));
  st.theta_hat = 0.0;
  CHECK_THROWS_AS(mu0_default(ModelKind::DCMM, st), InvalidArgument);
  st.theta_hat.reset();
  CHECK_THROWS_AS(mu0_default(ModelKind::DCMM, st), InvalidArgument);
  CHECK_THROWS_AS(mu0_default(ModelKind::IncompleteMatrix, st), InvalidArgument);
}

TEST_CASE("incomplete-model scale statistic matches direct summation") {
  IncompleteParams ip;
  ip.d = 40;
  ip.K = 2;
  ip.lambda = Vector(2);
  ip.lambda << 5, 3;
  ip.m = 3;
  Dataset ds = generate_incomplete(ip, 12);
  step0(ds, {});
  const Mu0Stats st = mu0_stats(ds, 12);
  const Matrix x = gather_data(ds);
  double sq = 0;
  std::size_t cnt = 0;
  for (Index j = 0; j < 40; ++j)
    for (Index i = 0; i <= j; ++i)
      if (x(i, j) != 0.0) {
        sq += x(i, j) * x(i, j);
        ++cnt;
      }
  CHECK(*st.sigma0_hat == doctest::Approx(std::sqrt(sq / double(cnt))).epsilon(1e-12));
}

TEST_CASE("resplit keeps the data and resets preprocessing") {
  Dataset ds = generate_spiked(spiked(20, 200, 3), 7);
  step0(ds, Step0Options{4, {}});
  const Dataset r = resplit(ds, 8);
  CHECK(r.splits.size() == 8);
  CHECK(!r.prep.done);
  CHECK((gather_data(r) - gather_data(ds)).norm() == 0.0);
}
