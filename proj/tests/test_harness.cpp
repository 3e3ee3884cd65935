#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fadi/harness/accounting.hpp"
#include "fadi/harness/config.hpp"
#include "fadi/harness/experiment.hpp"
#include "fadi/harness/metrics.hpp"
#include "fadi/rng.hpp"
#include "helpers.hpp"

using namespace fadi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c = parse_config(R"(
[experiment]
name = small
reps = 4
seed = 9
metrics = error, coverage, rank, invariants, are
[model]
kind = spiked
d = 60
n = 1200
m = 3
K = 2
lambda = 8, 4
kprime = 4
[sketch]
p = 9
L = 2, 10
[baselines]
methods = traditional
)");
  validate(c);
  return c;
}

}  // namespace

TEST_CASE("k-means: separated clouds and duplicated points") {
  Matrix pts(40, 2);
  Engine e = make_stream(1, "pts", 0);
  std::normal_distribution<double> nd(0.0, 0.1);
  for (Index i = 0; i < 40; ++i) {
    pts(i, 0) = (i < 20 ? -5.0 : 5.0) + nd(e);
    pts(i, 1) = nd(e);
  }
  const KMeansResult r = kmeans_cluster(pts, 2, 3);
  std::vector<int> truth(40);
  for (int i = 0; i < 40; ++i) truth[std::size_t(i)] = i < 20 ? 0 : 1;
  CHECK(misclustering_rate(r.labels, truth) == 0.0);

  Matrix dup = Matrix::Zero(10, 3);
  dup.bottomRows(5).setConstant(2.0);
  const KMeansResult d = kmeans_cluster(dup, 2, 1);
  for (int i = 1; i < 5; ++i) CHECK(d.labels[std::size_t(i)] == d.labels[0]);
  CHECK(d.inertia == 0.0);
  CHECK_THROWS_AS(kmeans_cluster(dup, 11, 1), InvalidArgument);
  CHECK_THROWS_AS(kmeans_cluster(dup, 0, 1), InvalidArgument);
}

TEST_CASE("k-means restarts never do worse than their first start") {
  int worse = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Matrix pts = test::random_matrix(60, 3, 500 + t);
    KMeansOptions one{1, 100, false}, many{10, 100, false};
    const double single = kmeans_cluster(pts, 4, t, one).inertia;
    const double best = kmeans_cluster(pts, 4, t, many).inertia;
    worse += best <= single + 1e-12 ? 0 : 1;
  }
  CHECK(worse == 0);
}

TEST_CASE("misclustering rate examples") {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(misclustering_rate(a, a) == 0.0);
  CHECK(misclustering_rate({2, 2, 0, 0, 1, 1}, a) == 0.0);
  CHECK(misclustering_rate({0, 1, 0, 1}, {0, 0, 1, 1}) == 0.5);
  CHECK(misclustering_rate({0, 0, 0, 1}, {0, 0, 1, 1}) == 0.25);
  std::vector<int> big(20), bt(20);
  for (int i = 0; i < 20; ++i) big[std::size_t(i)] = bt[std::size_t(i)] = i % 10;
  CHECK_THROWS_AS(misclustering_rate(big, bt), InvalidArgument);
  CHECK(misclustering_rate(big, bt, true) == 0.0);
}

TEST_CASE("ARE examples") {
  const Matrix s = test::random_matrix(3, 3, 1);
  const Matrix spd = s * s.transpose() + Matrix::Identity(3, 3);
  CHECK(are_metric(spd, spd, 3) == doctest::Approx(1.0).epsilon(1e-14));
  const Matrix c2 = Matrix::Identity(2, 2) + Matrix::Constant(2, 2, 0.3);
  CHECK(are_metric(4.0 * c2, c2, 2) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(are_metric(-c2, c2, 2), DegenerateError);
  const Matrix samples = test::random_matrix(5000, 2, 3);
  CHECK((sample_covariance(samples) - Matrix::Identity(2, 2)).norm() < 0.1);
}

TEST_CASE("communication and operation accounting") {
  SketchPlan plan;
  plan.p = 12;
  plan.L = 1;
  plan.K = 3;
  const CommAccount one = comm_account(ModelKind::SpikedCov, plan, Dims{100, 1000, 1, 3});
  CHECK(one.stage1_messages == 1);
  CHECK(one.stage1_bytes == 100 * 12 * 8);

  plan.L = 417;
  plan.q = 7;
  const CommAccount sim = comm_account(ModelKind::SpikedCov, plan, Dims{500, 20000, 20, 3});
  CHECK(sim.stage1_bytes == 417ull * 20 * 500 * 12 * 8);
  CHECK(sim.stage2_bytes == 417ull * 500 * 3 * 8);
  CHECK(sim.total_bytes == sim.stage1_bytes + sim.stage2_bytes);
  // Hand evaluation of the unit-constant counts with n_s = 1000:
  // 16384 + 6e6 + 192000 + 52614000 over 5.125e9.
  CHECK(sim.fadi == doctest::Approx(58822384.0));
  CHECK(sim.ratio_to_traditional == doctest::Approx(58822384.0 / 5.125e9));

  plan.L = 40;
  const CommAccount t2 = comm_account(ModelKind::SpikedCov, plan, Dims{400, 30000, 15, 3});
  CHECK(t2.ratio_to_traditional < 1.0);
  CHECK(*t2.fan_distributed > t2.fadi);
  CHECK_THROWS_AS(comm_account(ModelKind::SpikedCov, SketchPlan{}, Dims{10, 10, 1, 0}), InvalidArgument);
  const auto j = to_json(sim);
  CHECK(j["bytes"]["stage1_total"].get<std::uint64_t>() == sim.stage1_bytes);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = small_config();
  CHECK(c.d == 60);
  CHECK(c.L_values == std::vector<std::size_t>{2, 10});
  CHECK(c.max_L() == 10);
  CHECK(c.lambda == std::vector<double>{8, 4});
  CHECK(c.metrics.count("are") == 1);
  CHECK(c.baselines == std::vector<std::string>{"traditional"});

  CHECK_THROWS_AS(parse_config("[model]\nkind = spiked\nbogus = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[model]\nd = ten\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[model]\nkind = pca\n"), InvalidArgument);
  ExperimentConfig speed = c;
  speed.metrics.insert("speed");
  CHECK_THROWS_AS(validate(speed), InvalidArgument);
  ExperimentConfig bad = c;
  bad.p = 100;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  ExperimentConfig zero = c;
  zero.d = 0;
  CHECK_THROWS_AS(validate(zero), InvalidArgument);
  // Comments, inline and whole-line.
  const ExperimentConfig cm = parse_config("# top\n[model]\nkind = gmm ; inline\nd = 30 # trailing\n");
  CHECK(cm.model == ModelKind::GMM);
  CHECK(cm.d == 30);
}

TEST_CASE("checked-in configs load and validate") {
  for (const auto& entry : fs::directory_iterator(FADI_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    ExperimentConfig c = load_config(entry.path());
    CHECK_NOTHROW(validate(c));
  }
}

TEST_CASE("experiment smoke run emits one complete record") {
  ExperimentConfig c = small_config();
  c.reps = 1;
  const ExperimentResult r = run_experiment(c);
  CHECK(r.reps.size() == 1);
  CHECK(!r.reps[0].failed);
  for (const char* name : {"rho_fadi_L10", "rho_fadi_L2", "covered_L10", "khat_L10", "trace_err_L10", "rho_traditional"})
    CHECK(r.find(name) != nullptr);
  CHECK(r.mean("trace_err_L10") <= 1e-10);
  CHECK_THROWS_AS(r.mean("no_such_metric"), InvalidArgument);
}

TEST_CASE("experiments are reproducible byte for byte") {
  const ExperimentConfig c = small_config();
  const fs::path a = fs::temp_directory_path() / "fadi_det_a", b = fs::temp_directory_path() / "fadi_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_outputs(run_experiment(c), a);
  ExperimentConfig threaded = c;
  threaded.threads = 3;
  write_outputs(run_experiment(threaded), b);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    ++files;
  }
  CHECK(files >= 4);
}

TEST_CASE("adding replicates leaves earlier ones unchanged") {
  ExperimentConfig c = small_config();
  c.reps = 2;
  const ExperimentResult few = run_experiment(c);
  c.reps = 4;
  const ExperimentResult more = run_experiment(c);
  for (std::size_t r = 0; r < 2; ++r) {
    REQUIRE(few.reps[r].values.size() == more.reps[r].values.size());
    for (std::size_t i = 0; i < few.reps[r].values.size(); ++i) {
      CHECK(few.reps[r].values[i].name == more.reps[r].values[i].name);
      CHECK(few.reps[r].values[i].value == more.reps[r].values[i].value);
    }
  }
}

TEST_CASE("summary statistics: binary metrics use the binomial standard error") {
  ExperimentConfig c = small_config();
  c.reps = 6;
  const ExperimentResult r = run_experiment(c);
  const MetricSummary* cov = r.find("covered_L10");
  REQUIRE(cov != nullptr);
  CHECK(cov->binary);
  CHECK(cov->mean >= 0.0);
  CHECK(cov->mean <= 1.0);
  CHECK(cov->se == doctest::Approx(std::sqrt(cov->mean * (1 - cov->mean) / 6.0)));
  const MetricSummary* rho = r.find("rho_fadi_L10");
  CHECK(rho->se == doctest::Approx(rho->sd / std::sqrt(6.0)));
  const auto j = summary_json(r);
  CHECK(j.contains("config"));
  CHECK(j.contains("versions"));
  CHECK(j["seed"].get<std::uint64_t>() == 9);
  CHECK(j["config"]["experiment"]["seed"].get<std::uint64_t>() == 9);
}

TEST_CASE("every model runs through the harness") {
  for (const char* kind : {"dcmm", "gmm", "incomplete"}) {
    CAPTURE(kind);
    ExperimentConfig c = parse_config(std::string("[experiment]\nreps = 1\nmetrics = error, coverage") +
                                      (std::string(kind) == "incomplete" ? "" : ", clustering") + "\n[model]\nkind = " + kind + "\nd = 64\nn = 1300\nm = 4\nK = 3\n[sketch]\nL = 8\n");
    validate(c);
    const ExperimentResult r = run_experiment(c);
    CHECK(r.failures == 0);
    CHECK(r.find("rho_fadi_L8") != nullptr);
  }
}
