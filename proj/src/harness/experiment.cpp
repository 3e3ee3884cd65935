#include "fadi/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>

#include "fadi/aggregate.hpp"
#include "fadi/baselines.hpp"
#include "fadi/chi2.hpp"
#include "fadi/harness/metrics.hpp"
#include "fadi/inference.hpp"
#include "fadi/kernels.hpp"
#include "fadi/parallel.hpp"
#include "fadi/pipeline.hpp"
#include "fadi/rng.hpp"

namespace fadi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string tag(std::size_t L) { return "_L" + std::to_string(L); }

class Recorder {
 public:
  explicit Recorder(std::vector<MetricValue>& out) : out_(out) {}
  void num(const std::string& family, const std::string& name, double v) {
    out_.push_back({family, name, v, false});
  }
  void flag(const std::string& family, const std::string& name, bool v) {
    out_.push_back({family, name, v ? 1.0 : 0.0, true});
  }

 private:
  std::vector<MetricValue>& out_;
};

Vector aligned_row_error(const OrthonormalBasis& est, const OrthonormalBasis& v, std::size_t j) {
  const AlignMatrix h = align_to_truth(est, v);
  const Matrix rotated = matmul(est.mat(), h.H);
  return (rotated.row(Index(j)) - v.mat().row(Index(j))).transpose();
}

struct PairOutcome {
  double stat = 0.0;
  bool ok = false;
};

void record_inference(const ExperimentConfig& cfg, const Dataset& ds, const FadiFit& fit,
                      const OrthonormalBasis& vf, std::size_t L, bool have_small,
                      std::uint64_t master_seed, Recorder& rec) {
  const OrthonormalBasis& v = ds.truth->V;
  const std::size_t K = cfg.K;
  const double crit = chi2_quantile(K, 1.0 - cfg.alpha);
  const bool large_selected =
      cfg.regime == RegimeChoice::Large ||
      (cfg.regime == RegimeChoice::Auto && L * cfg.p >= cfg.d);
  const std::string t = tag(L);
  const CovContext ctx = make_cov_context(ds, vf);
  std::optional<BOmega> b;
  if (have_small) b = build_b_omega(vf, fit.sketches, L);

  auto attempt = [&](const std::string& what, auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const DegenerateError&) {
      rec.flag("inference", "degenerate_" + what + t, true);
      return std::nullopt;
    }
  };

  if (ds.model != ModelKind::DCMM) {
    const AlignMatrix h = align_to_truth(vf, v);
    auto large = attempt("large", [&] { return wald_row(vf, cfg.j, v, h, cov_large(ctx, cfg.j).sigma_hat); });
    std::optional<double> small;
    if (b)
      small = attempt("small", [&] {
        return wald_row(vf, cfg.j, v, h, cov_small(ctx, cfg.j, *b, fit.sketches, master_seed).sigma_hat);
      });
    if (large) {
      rec.num("inference", "wald_large" + t, *large);
      rec.flag("inference", "covered_large" + t, *large <= crit);
    }
    if (small) {
      rec.num("inference", "wald_small" + t, *small);
      rec.flag("inference", "covered_small" + t, *small <= crit);
    }
    const auto& sel = large_selected ? large : small;
    if (sel) rec.flag("inference", "covered" + t, *sel <= crit);
    return;
  }

  auto pair_stat = [&](std::size_t a, std::size_t c, bool use_large) {
    const Matrix s = use_large ? cov_large_pair(ctx, a, c).sigma_hat
                               : cov_small_pair(ctx, a, c, *b, fit.sketches, master_seed).sigma_hat;
    return pairwise_test(vf, a, c, s).statistic;
  };
  struct Spec {
    const char* metric;
    std::size_t other;
    bool reject;  // record rejection (power) instead of acceptance (coverage)
    bool wanted;
  };
  const Spec specs[] = {{"covered", *cfg.jprime, false, cfg.metrics.count("coverage") > 0},
                        {"rejected", *cfg.kalt, true, cfg.metrics.count("power") > 0}};
  for (const Spec& sp : specs) {
    if (!sp.wanted) continue;
    const std::string base = sp.metric;
    auto large = attempt(base + "_large", [&] { return pair_stat(cfg.j, sp.other, true); });
    std::optional<double> small;
    if (b) small = attempt(base + "_small", [&] { return pair_stat(cfg.j, sp.other, false); });
    auto outcome = [&](double stat) { return sp.reject ? stat > crit : stat <= crit; };
    if (large) {
      rec.num("inference", "pairstat_" + base + "_large" + t, *large);
      rec.flag("inference", base + "_large" + t, outcome(*large));
    }
    if (small) {
      rec.num("inference", "pairstat_" + base + "_small" + t, *small);
      rec.flag("inference", base + "_small" + t, outcome(*small));
    }
    const auto& sel = large_selected ? large : small;
    if (sel) rec.flag("inference", base + t, outcome(*sel));
  }
}

RepRecord run_rep(const ExperimentConfig& cfg, std::size_t r, std::size_t inner_threads) {
  RepRecord out;
  out.rep = r;
  Recorder rec(out.values);
  const std::uint64_t seed = derive_key(cfg.seed, "rep", r);
  auto has = [&](const char* m) { return cfg.metrics.count(m) > 0; };

  Dataset ds = make_dataset(cfg, seed, cfg.seed);
  prepare_dataset(cfg, ds);
  const OrthonormalBasis& v = ds.truth->V;
  const std::size_t K = cfg.K;

  std::vector<std::size_t> Ls = cfg.L_values;
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  const bool inference = has("coverage") || has("power");
  bool any_small = false;
  for (auto L : Ls) any_small = any_small || L * cfg.p < cfg.d;
  const bool retain = inference && (cfg.regime == RegimeChoice::Small ||
                                    (cfg.regime == RegimeChoice::Auto && any_small));

  SketchPlan plan;
  plan.p = cfg.p;
  plan.p_prime = cfg.p_prime ? cfg.p_prime : cfg.p;
  plan.L = Ls.back();
  plan.q = cfg.q;
  plan.K = K;
  plan.m = cfg.m;
  plan.master_seed = seed;
  plan.regime = retain ? Regime::SmallLp : Regime::LargeLp;
  FitOptions fo;
  fo.threads = inner_threads;
  const auto t_fit = Clock::now();
  const FadiFit fit = run_fadi(ds, plan, fo);
  const double fit_wall = seconds_since(t_fit);

  std::vector<LocalRank> local;
  if (has("rank")) {
    const double mu0 = cfg.mu0 ? *cfg.mu0 : mu0_default(ds.model, mu0_stats(ds, cfg.p));
    rec.num("rank", "mu0", mu0);
    for (const auto& s : fit.sketches) local.push_back(estimate_rank_local(s.singvals, cfg.p, mu0));
  }

  std::optional<PCEstimate> trad;
  double trad_seconds = 0.0;
  const bool need_trad =
      has("are") || has("clustering") ||
      std::find(cfg.baselines.begin(), cfg.baselines.end(), "traditional") != cfg.baselines.end();
  if (need_trad) {
    const auto t0 = Clock::now();
    trad = traditional_pca(ds, K);
    trad_seconds = seconds_since(t0);
    rec.num("error", "rho_traditional", subspace_dist(trad->basis, v));
  }

  for (auto L : Ls) {
    const std::string t = tag(L);
    const PCEstimate vf = L == fit.plan.L ? fit.vf : refit_prefix(fit, L);
    if (has("error")) {
      rec.num("error", "rho_fadi" + t, subspace_dist(vf.basis, v));
      if (trad) rec.num("error", "rho_fadi_traditional" + t, subspace_dist(vf.basis, trad->basis));
    }
    if (has("invariants")) {
      const ProjectionAverage avg = ProjectionAverage::from_sketches(fit.sketches, L);
      rec.num("error", "trace_err" + t, std::abs(avg.trace() - double(K)));
      if (cfg.d <= 500) {
        const Eigen::MatrixXd dense = avg.materialize();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
        rec.num("error", "eig_min" + t, es.eigenvalues().minCoeff());
        rec.num("error", "eig_max" + t, es.eigenvalues().maxCoeff());
        const PCEstimate exact = exact_pcs(avg, K);
        rec.num("error", "rho_exact" + t, subspace_dist(exact.basis, v));
        rec.num("error", "rho_exact_powered" + t, subspace_dist(exact.basis, vf.basis));
        if (trad)
          rec.num("error", "rho_exact_traditional" + t, subspace_dist(exact.basis, trad->basis));
      }
    }
    if (has("rank")) {
      std::vector<std::size_t> ks;
      for (std::size_t l = 0; l < L; ++l) ks.push_back(local[l].rank);
      const std::size_t khat = median_ceil(ks);
      rec.num("rank", "khat" + t, double(khat));
      rec.flag("rank", "khat_correct" + t, khat == K);
    }
    if (inference) record_inference(cfg, ds, fit, vf.basis, L, retain, seed, rec);
    if (has("are")) {
      const Vector e = aligned_row_error(vf.basis, v, cfg.j);
      for (Index k = 0; k < e.size(); ++k)
        rec.num("are", "row_fadi" + t + "_c" + std::to_string(k), e(k));
    }
    if (has("clustering")) {
      const auto& truth = *ds.truth->labels;
      const std::size_t k = std::set<int>(truth.begin(), truth.end()).size();
      const auto km = kmeans_cluster(vf.basis.mat(), k, derive_key(seed, "cluster", L));
      rec.num("clustering", "miscluster_fadi" + t, misclustering_rate(km.labels, truth));
    }
  }

  if (has("are")) {
    const Vector e = aligned_row_error(trad->basis, v, cfg.j);
    for (Index k = 0; k < e.size(); ++k) rec.num("are", "row_pca_c" + std::to_string(k), e(k));
  }
  if (has("clustering")) {
    const auto& truth = *ds.truth->labels;
    const std::size_t k = std::set<int>(truth.begin(), truth.end()).size();
    const auto km = kmeans_cluster(trad->basis.mat(), k, derive_key(seed, "cluster", 0));
    rec.num("clustering", "miscluster_traditional", misclustering_rate(km.labels, truth));
  }

  for (const auto& b : cfg.baselines) {
    if (b == "fan") {
      std::vector<double> split_s;
      const auto t0 = Clock::now();
      const PCEstimate fan = fan_distributed_pca(ds, K, &split_s);
      const double total = seconds_since(t0);
      double sum = 0.0, mx = 0.0;
      for (double s : split_s) {
        sum += s;
        mx = std::max(mx, s);
      }
      rec.num("error", "rho_fan", subspace_dist(fan.basis, v));
      if (has("timing")) rec.num("timing", "fan_distributed_s", mx + (total - sum));
    } else if (b == "fast_single") {
      const PCEstimate fs = fast_pca_single(ds, K, cfg.p, seed);
      rec.num("error", "rho_fast_single", subspace_dist(fs.basis, v));
    }
  }

  if (has("timing")) {
    rec.num("timing", "fadi_distributed_s", fit.times.distributed());
    rec.num("timing", "fadi_total_s", fit.times.total);
    rec.num("timing", "fadi_wall_s", fit_wall);
    if (need_trad) rec.num("timing", "traditional_s", trad_seconds);
  }
  return out;
}

void summarize(ExperimentResult& res) {
  std::map<std::string, MetricSummary> acc;
  std::map<std::string, std::vector<double>> values;
  for (const auto& rep : res.reps) {
    if (rep.failed) continue;
    for (const auto& mv : rep.values) {
      auto& s = acc[mv.name];
      s.family = mv.family;
      s.name = mv.name;
      s.binary = mv.binary;
      values[mv.name].push_back(mv.value);
    }
  }
  for (auto& [name, s] : acc) {
    const auto& xs = values[name];
    s.count = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / double(s.count);
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = s.count > 1 ? std::sqrt(ss / double(s.count - 1)) : 0.0;
    s.se = s.binary ? std::sqrt(s.mean * (1.0 - s.mean) / double(s.count))
                    : s.sd / std::sqrt(double(s.count));
    res.summary.push_back(s);
  }
  std::sort(res.summary.begin(), res.summary.end(), [](const auto& a, const auto& b) {
    return std::tie(a.family, a.name) < std::tie(b.family, b.name);
  });

  // Relative efficiency from the across-rep covariance of the aligned row errors.
  const auto& cfg = res.config;
  if (!cfg.metrics.count("are")) return;
  const Index K = static_cast<Index>(cfg.K);
  auto gather = [&](const std::string& prefix) -> std::optional<Matrix> {
    std::vector<Vector> rows;
    for (const auto& rep : res.reps) {
      if (rep.failed) continue;
      Vector e = Vector::Zero(K);
      Index found = 0;
      for (const auto& mv : rep.values)
        for (Index k = 0; k < K; ++k)
          if (mv.name == prefix + std::to_string(k)) {
            e(k) = mv.value;
            ++found;
          }
      if (found == K) rows.push_back(e);
    }
    if (rows.size() < 2) return std::nullopt;
    Matrix m(static_cast<Index>(rows.size()), K);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(Index(i)) = rows[i].transpose();
    return m;
  };
  const auto pca = gather("row_pca_c");
  if (!pca) return;
  const Matrix cov_pca = sample_covariance(*pca);
  for (auto L : cfg.L_values) {
    const auto f = gather("row_fadi" + tag(L) + "_c");
    if (!f) continue;
    try {
      res.derived["are" + tag(L)] = are_metric(sample_covariance(*f), cov_pca, cfg.K);
    } catch (const DegenerateError&) {
    }
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t truth_seed) {
  const auto lambda = [&] {
    Vector l(static_cast<Index>(cfg.lambda.size()));
    for (std::size_t k = 0; k < cfg.lambda.size(); ++k) l(Index(k)) = cfg.lambda[k];
    return l;
  };
  switch (cfg.model) {
    case ModelKind::SpikedCov: {
      SpikedParams p;
      p.d = cfg.d;
      p.n = cfg.n;
      p.K = cfg.K;
      p.lambda = lambda();
      p.sigma2 = cfg.sigma2;
      p.m = cfg.m;
      p.axis_aligned = cfg.axis_aligned;
      return generate_spiked(p, seed, truth_seed);
    }
    case ModelKind::DCMM: {
      DcmmParams p;
      p.d = cfg.d;
      p.K = cfg.K;
      p.theta = cfg.theta < 0.0 ? 0.9 : cfg.theta;
      if (cfg.dcmm_layout == "mixed") {
        p.Pi = mixed_membership_pi(cfg.d);
        p.P = mixed_membership_p();
      } else {
        p.Pi = Matrix::Zero(Index(cfg.d), Index(cfg.K));
        const auto off = partition_offsets(cfg.d, cfg.K);
        for (std::size_t k = 0; k < cfg.K; ++k)
          for (std::size_t i = off[k]; i < off[k + 1]; ++i) p.Pi(Index(i), Index(k)) = 1.0;
        p.P = Matrix::Constant(Index(cfg.K), Index(cfg.K), cfg.p_out);
        p.P.diagonal().setConstant(cfg.p_in);
      }
      p.self_loops = cfg.self_loops;
      p.m = cfg.m;
      p.expected_only = cfg.expected_only;
      return generate_dcmm(p, seed);
    }
    case ModelKind::GMM: {
      GmmParams p;
      p.d = cfg.d;
      p.n = cfg.n;
      p.K = cfg.K;
      p.delta0sq = cfg.delta0sq;
      p.m = cfg.m;
      p.noise_sd = cfg.noise_sd;
      return generate_gmm(p, seed, truth_seed);
    }
    case ModelKind::IncompleteMatrix: {
      IncompleteParams p;
      p.d = cfg.d;
      p.K = cfg.K;
      p.lambda = lambda();
      p.theta = cfg.theta < 0.0 ? 0.4 : cfg.theta;
      p.sigma = cfg.sigma;
      p.m = cfg.m;
      return generate_incomplete(p, seed, truth_seed);
    }
  }
  throw InvalidArgument("make_dataset: unknown model");
}

void prepare_dataset(const ExperimentConfig& cfg, Dataset& ds) {
  Step0Options opt;
  opt.kprime = cfg.kprime ? cfg.kprime : cfg.K + 1;
  step0(ds, opt);
}

const MetricSummary* ExperimentResult::find(const std::string& name) const {
  for (const auto& s : summary)
    if (s.name == name) return &s;
  return nullptr;
}

double ExperimentResult::mean(const std::string& name) const {
  const MetricSummary* s = find(name);
  if (!s) throw InvalidArgument("no metric named " + name);
  return s->mean;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  validate(cfg);
  ExperimentResult res;
  res.config = cfg;
  res.reps.resize(cfg.reps);
  const std::size_t threads = resolve_threads(cfg.threads);
  const bool outer = threads > 1 && cfg.reps > 1;
  parallel_for(cfg.reps, outer ? threads : 1, [&](std::size_t r) {
    try {
      res.reps[r] = run_rep(cfg, r, outer ? 1 : threads);
    } catch (const Error& e) {
      res.reps[r] = RepRecord{r, true, e.what(), {}};
    }
  });
  for (const auto& rep : res.reps) res.failures += rep.failed ? 1 : 0;
  summarize(res);
  return res;
}

nlohmann::json summary_json(const ExperimentResult& res) {
  nlohmann::json j;
  j["name"] = res.config.name;
  j["seed"] = res.config.seed;
  j["reps"] = res.config.reps;
  j["failure_count"] = res.failures;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& rep : res.reps)
    if (rep.failed) fails.push_back({{"rep", rep.rep}, {"error", rep.error}});
  j["failures"] = std::move(fails);
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& s : res.summary)
    metrics[s.name] = {{"family", s.family}, {"count", s.count}, {"mean", s.mean},
                       {"sd", s.sd},         {"se", s.se},       {"binary", s.binary}};
  j["metrics"] = std::move(metrics);
  j["derived"] = res.derived;
  j["config"] = to_json(res.config);
  j["versions"] = {{"fadi", "1.0.0"},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"kernels", std::string(kernels::isa_name(kernels::active_isa()))}};
  return j;
}

void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::ofstream> files;
  auto stream = [&](const std::string& family) -> std::ofstream& {
    auto it = files.find(family);
    if (it != files.end()) return it->second;
    std::ofstream os(dir / (family + ".csv"));
    if (!os) throw InvalidArgument("cannot write " + (dir / (family + ".csv")).string());
    os << "rep,metric,value\n";
    return files.emplace(family, std::move(os)).first->second;
  };
  for (const auto& rep : res.reps)
    for (const auto& mv : rep.values)
      stream(mv.family) << rep.rep << ',' << mv.name << ',' << fmt(mv.value) << '\n';
  for (auto& [_, os] : files) os.close();
  std::ofstream js(dir / "summary.json");
  if (!js) throw InvalidArgument("cannot write " + (dir / "summary.json").string());
  js << summary_json(res).dump(2) << '\n';
}

}  // namespace fadi
