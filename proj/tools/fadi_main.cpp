#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fadi/aggregate.hpp"
#include "fadi/baselines.hpp"
#include "fadi/chi2.hpp"
#include "fadi/dataset_io.hpp"
#include "fadi/harness/accounting.hpp"
#include "fadi/harness/config.hpp"
#include "fadi/harness/experiment.hpp"
#include "fadi/inference.hpp"
#include "fadi/kernels.hpp"
#include "fadi/pipeline.hpp"
#include "fadi/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fadi;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

struct Flags {
  std::string config, model, out, data, csv, regime, method = "traditional", dump, L;
  std::size_t d = 0, n = 0, m = 0, p = 0, p_prime = 0, q = 0, K = 0, mc = 0, threads = 0;
  std::size_t j = 0, jprime = 1;
  std::uint64_t seed = 0;
  double mu0 = 0.0;
  bool estimate_rank = false, no_self_loops = false, exact = false, kernels = false;
  std::vector<CLI::Option*> seen;

  bool given(const std::string& flag) const {
    const std::string name = flag.substr(flag.find_first_not_of('-'));
    for (auto* o : seen)
      if (o->check_lname(name) && o->count() > 0) return true;
    return false;
  }
};

void add_shared(CLI::App* app, Flags& f) {
  auto& s = f.seen;
  s.push_back(app->add_option("--config", f.config, "INI configuration file"));
  s.push_back(app->add_option("--model", f.model, "spiked | dcmm | gmm | incomplete"));
  s.push_back(app->add_option("--d", f.d, "dimension"));
  s.push_back(app->add_option("--n", f.n, "sample size"));
  s.push_back(app->add_option("--m", f.m, "number of splits"));
  s.push_back(app->add_option("--p", f.p, "sketch width"));
  s.push_back(app->add_option("--p-prime", f.p_prime, "final sketch width"));
  s.push_back(app->add_option("--L", f.L, "number of sketches (comma list for bench)"));
  s.push_back(app->add_option("--q", f.q, "power iterations"));
  auto* k = app->add_option("--K", f.K, "rank");
  auto* er = app->add_flag("--estimate-rank", f.estimate_rank, "estimate the rank from the sketches");
  k->excludes(er);
  s.push_back(k);
  s.push_back(er);
  s.push_back(app->add_option("--regime", f.regime, "auto | large | small"));
  s.push_back(app->add_option("--seed", f.seed, "master seed"));
  s.push_back(app->add_option("--mc", f.mc, "Monte-Carlo replicates"));
  s.push_back(app->add_option("--out", f.out, "output path"));
  s.push_back(app->add_option("--threads", f.threads, "worker threads (0 = all cores)"));
  s.push_back(app->add_flag("--no-self-loops", f.no_self_loops, "DCMM adjacency without diagonal"));
}

void add_input(CLI::App* app, Flags& f) {
  auto* data = app->add_option("--data", f.data, "dataset directory written by 'generate'");
  auto* csv = app->add_option("--csv", f.csv, "square matrix in CSV (dcmm or incomplete)");
  data->excludes(csv);
  f.seen.push_back(data);
  f.seen.push_back(csv);
}

ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.given("--model")) c.model = parse_model(f.model);
  if (f.given("--d")) c.d = f.d;
  if (f.given("--n")) c.n = f.n;
  if (f.given("--m")) c.m = f.m;
  if (f.given("--K")) c.K = f.K;
  if (f.given("--p")) c.p = f.p;
  if (f.given("--p-prime")) c.p_prime = f.p_prime;
  if (f.given("--q")) c.q = f.q;
  if (f.given("--L")) {
    c.L_values.clear();
    std::stringstream ss(f.L);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        c.L_values.push_back(std::stoul(item));
      } catch (const std::exception&) {
        throw InvalidArgument("--L expects positive integers, got '" + item + "'");
      }
    }
  }
  if (f.given("--regime")) c.regime = parse_regime_choice(f.regime);
  if (f.given("--seed")) c.seed = f.seed;
  if (f.given("--mc")) c.reps = f.mc;
  if (f.given("--out")) c.out = f.out;
  if (f.given("--threads")) c.threads = f.threads;
  if (f.no_self_loops) c.self_loops = false;
  if (f.given("--mu0")) c.mu0 = f.mu0;
  if (c.model == ModelKind::SpikedCov || c.model == ModelKind::GMM)
    if (c.n == 0) c.n = 20 * c.d;
  return c;
}

struct Input {
  Dataset ds;
  bool synthetic = false;
};

Input load_input(const Flags& f, ExperimentConfig& cfg) {
  Input in;
  if (!f.data.empty()) {
    in.ds = load_dataset(f.data);
  } else if (!f.csv.empty()) {
    require(f.given("--model"), "--csv needs --model dcmm or --model incomplete");
    in.ds = import_csv_matrix(f.csv, cfg.model, cfg.m);
    if (cfg.K) in.ds.dims.K = cfg.K;
  } else {
    ExperimentConfig v = cfg;
    validate(v);
    cfg = v;
    in.ds = make_dataset(cfg, derive_key(cfg.seed, "rep", 0), cfg.seed);
    in.synthetic = true;
  }
  Step0Options opt;
  const std::size_t K = in.ds.dims.K ? in.ds.dims.K : cfg.K;
  opt.kprime = cfg.kprime ? cfg.kprime : K + 1;
  if (in.ds.model == ModelKind::SpikedCov) require(K >= 1, "the spiked model needs --K for step 0");
  step0(in.ds, opt);
  return in;
}

SketchPlan plan_from(const Flags& f, const ExperimentConfig& cfg, const Dataset& ds, Regime regime) {
  SketchPlan plan;
  plan.p = cfg.p;
  plan.p_prime = cfg.p_prime;
  plan.L = cfg.max_L();
  plan.q = cfg.q;
  plan.m = ds.splits.size();
  plan.master_seed = cfg.seed;
  plan.regime = regime;
  if (!f.estimate_rank) {
    const std::size_t K = f.given("--K") ? cfg.K : (ds.dims.K ? ds.dims.K : cfg.K);
    require(K >= 1, "rank unknown: pass --K or --estimate-rank");
    plan.K = K;
  }
  return plan;
}

FitOptions fit_options(const Flags& f, const ExperimentConfig& cfg) {
  FitOptions fo;
  fo.threads = cfg.threads;
  fo.exact = f.exact;
  if (f.given("--mu0")) fo.mu0 = f.mu0;
  return fo;
}

void emit(const json& j, const Flags& f, const std::string& file) {
  if (f.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  fs::create_directories(f.out);
  std::ofstream os(fs::path(f.out) / file);
  if (!os) throw InvalidArgument("cannot write " + (fs::path(f.out) / file).string());
  os << j.dump(2) << '\n';
  std::cout << "wrote " << (fs::path(f.out) / file).string() << '\n';
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& a) {
  json rows = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (Index c = 0; c < a.cols(); ++c) r.push_back(a(i, c));
    rows.push_back(std::move(r));
  }
  return rows;
}

void dump_sketches(const FadiFit& fit, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& s : fit.sketches) {
    char name[64];
    BinaryHeader h;
    h.model_tag = kArtifactTag;
    h.d = std::uint64_t(s.Vhat.dim());
    h.index_begin = s.ell;
    h.index_end = s.ell + 1;
    if (s.Yhat.size() > 0) {
      std::snprintf(name, sizeof name, "sketch_%04zu_Y.bin", s.ell);
      write_binary_matrix(dir / name, h, s.Yhat);
    }
    std::snprintf(name, sizeof name, "sketch_%04zu_V.bin", s.ell);
    write_binary_matrix(dir / name, h, s.Vhat.mat());
  }
}

json fit_json(const FadiFit& fit, const Dataset& ds) {
  json j;
  j["K"] = fit.K;
  j["rank_estimated"] = fit.rank_estimated;
  j["plan"] = {{"p", fit.plan.p}, {"p_prime", fit.plan.p_prime}, {"L", fit.plan.L},
               {"q", fit.plan.q}, {"m", fit.plan.m}, {"seed", fit.plan.master_seed},
               {"regime", std::string(regime_name(fit.plan.regime))}};
  j["times"] = {{"distributed_s", fit.times.distributed()}, {"total_s", fit.times.total},
                {"step3_s", fit.times.step3}};
  j["trace"] = ProjectionAverage::from_sketches(fit.sketches).trace();
  if (ds.truth && ds.truth->V.rank() == Index(fit.K)) {
    j["rho_truth"] = subspace_dist(fit.vf.basis, ds.truth->V);
    if (fit.vtilde) j["rho_exact_truth"] = subspace_dist(fit.vtilde->basis, ds.truth->V);
  }
  if (fit.vtilde) j["rho_exact_powered"] = subspace_dist(fit.vtilde->basis, fit.vf.basis);
  return j;
}

int cmd_generate(const Flags& f) {
  ExperimentConfig cfg = build_config(f);
  validate(cfg);
  require(!f.out.empty(), "generate needs --out DIR");
  Dataset ds = make_dataset(cfg, derive_key(cfg.seed, "rep", 0), cfg.seed);
  save_dataset(ds, f.out);
  std::cout << "wrote " << ds.splits.size() << " splits of a " << model_name(ds.model)
            << " dataset (d=" << ds.dims.d << ", n=" << ds.dims.n << ") to " << f.out << '\n';
  return 0;
}

int cmd_fit(const Flags& f) {
  ExperimentConfig cfg = build_config(f);
  Input in = load_input(f, cfg);
  const Regime regime = f.dump.empty() ? Regime::LargeLp : Regime::SmallLp;
  const FadiFit fit = run_fadi(in.ds, plan_from(f, cfg, in.ds, regime), fit_options(f, cfg));
  if (!f.dump.empty()) dump_sketches(fit, f.dump);
  json j = fit_json(fit, in.ds);
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_csv_matrix(fs::path(f.out) / "vf.csv", fit.vf.basis.mat());
    if (fit.vtilde) write_csv_matrix(fs::path(f.out) / "vtilde.csv", fit.vtilde->basis.mat());
  }
  emit(j, f, "fit.json");
  return 0;
}

int cmd_rank(const Flags& f) {
  ExperimentConfig cfg = build_config(f);
  Input in = load_input(f, cfg);
  SketchPlan plan = plan_from(f, cfg, in.ds, Regime::EstimateOnly);
  plan.K.reset();
  require(plan.p > 0, "rank estimation needs --p");
  plan = resolve_plan(plan, in.ds.dims.d);
  const auto sketches = run_sketch_round(in.ds, plan, nullptr, cfg.threads);
  const double mu0 =
      f.given("--mu0") ? f.mu0 : mu0_default(in.ds.model, mu0_stats(in.ds, plan.p));
  std::vector<std::size_t> local;
  std::size_t fallbacks = 0;
  for (const auto& s : sketches) {
    const LocalRank lr = estimate_rank_local(s.singvals, plan.p, mu0);
    local.push_back(lr.rank);
    fallbacks += lr.fallback ? 1 : 0;
  }
  json j;
  j["mu0"] = mu0;
  j["khat"] = median_ceil(local);
  j["local"] = local;
  j["fallbacks"] = fallbacks;
  if (in.ds.truth) j["K_true"] = in.ds.truth->V.rank();
  emit(j, f, "rank.json");
  return 0;
}

int cmd_infer(const Flags& f, bool pair) {
  ExperimentConfig cfg = build_config(f);
  Input in = load_input(f, cfg);
  const std::size_t d = in.ds.dims.d;
  require(f.j < d, "--j out of range");
  if (pair) require(f.jprime < d && f.jprime != f.j, "--jprime out of range");
  bool large = true;
  const std::size_t L = cfg.max_L();
  const std::size_t p = cfg.p ? cfg.p : 12;
  if (cfg.regime == RegimeChoice::Small) large = false;
  if (cfg.regime == RegimeChoice::Auto) large = L * p >= d;
  const FadiFit fit = run_fadi(in.ds, plan_from(f, cfg, in.ds, large ? Regime::LargeLp : Regime::SmallLp),
                               fit_options(f, cfg));
  const CovContext ctx = make_cov_context(in.ds, fit.vf.basis);
  CovEstimate cov;
  if (large) {
    cov = pair ? cov_large_pair(ctx, f.j, f.jprime) : cov_large(ctx, f.j);
  } else {
    const BOmega b = build_b_omega(fit.vf.basis, fit.sketches);
    cov = pair ? cov_small_pair(ctx, f.j, f.jprime, b, fit.sketches, fit.plan.master_seed)
               : cov_small(ctx, f.j, b, fit.sketches, fit.plan.master_seed);
  }
  json j = fit_json(fit, in.ds);
  j["regime"] = large ? "large" : "small";
  j["unsupported"] = cov.unsupported;
  j["j"] = f.j;
  j["sigma_hat"] = mat_json(cov.sigma_hat);
  j["lambda_tilde"] = mat_json(ctx.lambda_tilde);
  const double crit = chi2_quantile(fit.K, 0.95);
  j["chi2_crit_95"] = crit;
  if (pair) {
    const PairTest t = pairwise_test(fit.vf.basis, f.j, f.jprime, cov.sigma_hat);
    j["jprime"] = f.jprime;
    j["statistic"] = t.statistic;
    j["pvalue"] = t.pvalue;
    j["reject_05"] = t.statistic > crit;
  } else {
    j["row"] = vec_json(fit.vf.basis.mat().row(Index(f.j)).transpose());
    if (in.ds.truth && in.ds.truth->V.rank() == Index(fit.K)) {
      const AlignMatrix h = align_to_truth(fit.vf.basis, in.ds.truth->V);
      const double w = wald_row(fit.vf.basis, f.j, in.ds.truth->V, h, cov.sigma_hat);
      j["wald"] = w;
      j["covered_95"] = w <= crit;
    }
  }
  emit(j, f, pair ? "test_pair.json" : "infer.json");
  return 0;
}

int cmd_baseline(const Flags& f) {
  ExperimentConfig cfg = build_config(f);
  Input in = load_input(f, cfg);
  const std::size_t K = f.given("--K") ? cfg.K : (in.ds.dims.K ? in.ds.dims.K : cfg.K);
  require(K >= 1, "baseline needs --K");
  const auto t0 = std::chrono::steady_clock::now();
  PCEstimate est;
  if (f.method == "traditional") est = traditional_pca(in.ds, K);
  else if (f.method == "fan") est = fan_distributed_pca(in.ds, K);
  else if (f.method == "fast_single") est = fast_pca_single(in.ds, K, cfg.p ? cfg.p : default_sketch_width(K), cfg.seed);
  else throw InvalidArgument("unknown --method '" + f.method + "'");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json j;
  j["method"] = std::string(method_name(est.method));
  j["K"] = K;
  j["seconds"] = secs;
  if (est.eigvals) j["eigvals"] = vec_json(*est.eigvals);
  if (in.ds.truth && in.ds.truth->V.rank() == Index(K)) j["rho_truth"] = subspace_dist(est.basis, in.ds.truth->V);
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_csv_matrix(fs::path(f.out) / (f.method + ".csv"), est.basis.mat());
  }
  emit(j, f, "baseline.json");
  return 0;
}

int cmd_kernels() {
  const std::size_t m = 512, k = 512, n = 512;
  Matrix a = Matrix::Random(Index(m), Index(k)), b = Matrix::Random(Index(k), Index(n));
  Matrix c{static_cast<Index>(m), static_cast<Index>(n)};
  for (auto isa : {kernels::Isa::Scalar, kernels::Isa::Avx2, kernels::Isa::Avx512}) {
    if (!kernels::isa_available(isa)) {
      std::cout << kernels::isa_name(isa) << ": unavailable\n";
      continue;
    }
    const int reps = isa == kernels::Isa::Scalar ? 1 : 10;
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
      kernels::gemm(isa, {a.data(), m, k, std::ptrdiff_t(k), 1}, {b.data(), k, n, std::ptrdiff_t(n), 1},
                    c.data(), n, 1.0, 0.0);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
    std::printf("%-7s gemm %zux%zux%zu: %.2f GFLOP/s\n", std::string(kernels::isa_name(isa)).c_str(), m, k, n,
                2.0 * double(m * k * n) / s / 1e9);
  }
  return 0;
}

int cmd_bench(const Flags& f) {
  if (f.kernels) return cmd_kernels();
  ExperimentConfig cfg = build_config(f);
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.out.empty()) {
    write_outputs(res, cfg.out);
    std::cout << "wrote results to " << cfg.out.string() << '\n';
  }
  std::printf("%s: %zu reps, %zu failed, %.1f s\n", cfg.name.c_str(), cfg.reps, res.failures, secs);
  for (const auto& s : res.summary) {
    if (s.family == "are") continue;
    std::printf("  %-34s mean %.6g  se %.3g  (n=%zu)\n", s.name.c_str(), s.mean, s.se, s.count);
  }
  for (const auto& [k, v] : res.derived) std::printf("  %-34s %.6g\n", k.c_str(), v);
  return 0;
}

int cmd_account(const Flags& f) {
  ExperimentConfig cfg = build_config(f);
  require(cfg.d >= 1, "account needs --d");
  require(cfg.K >= 1, "account needs --K");
  SketchPlan plan;
  plan.p = cfg.p;
  plan.p_prime = cfg.p_prime;
  plan.L = cfg.max_L();
  plan.q = cfg.q;
  plan.K = cfg.K;
  const Dims dims{cfg.d, is_sample_split(cfg.model) ? cfg.n : cfg.d, cfg.m, cfg.K};
  emit(to_json(comm_account(cfg.model, plan, dims)), f, "account.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed PCA by repeated Gaussian sketches"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "simulate a dataset and write its splits");
  add_shared(gen, f);

  auto* fit = app.add_subcommand("fit", "estimate the leading eigenspace");
  add_shared(fit, f);
  add_input(fit, f);
  f.seen.push_back(fit->add_option("--mu0", f.mu0, "rank-estimation threshold"));
  fit->add_flag("--exact", f.exact, "also eigendecompose the projection average");
  fit->add_option("--dump-sketches", f.dump, "directory for per-sketch artifacts");

  auto* rank = app.add_subcommand("rank", "estimate the rank");
  add_shared(rank, f);
  add_input(rank, f);
  f.seen.push_back(rank->add_option("--mu0", f.mu0, "threshold (default: model formula)"));

  auto* infer = app.add_subcommand("infer", "asymptotic covariance and Wald statistic of one row");
  add_shared(infer, f);
  add_input(infer, f);
  infer->add_option("--j", f.j, "row index");

  auto* tp = app.add_subcommand("test-pair", "test whether two rows share the same eigenspace row");
  add_shared(tp, f);
  add_input(tp, f);
  tp->add_option("--j", f.j, "first row");
  tp->add_option("--jprime", f.jprime, "second row");

  auto* base = app.add_subcommand("baseline", "run a comparison method");
  add_shared(base, f);
  add_input(base, f);
  base->add_option("--method", f.method, "traditional | fan | fast_single");

  auto* bench = app.add_subcommand("bench", "Monte-Carlo experiment from a configuration");
  add_shared(bench, f);
  bench->add_flag("--kernels", f.kernels, "time the GEMM kernel variants instead");

  auto* account = app.add_subcommand("account", "communication and operation counts");
  add_shared(account, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(f);
    if (*fit) return cmd_fit(f);
    if (*rank) return cmd_rank(f);
    if (*infer) return cmd_infer(f, false);
    if (*tp) return cmd_infer(f, true);
    if (*base) return cmd_baseline(f);
    if (*bench) return cmd_bench(f);
    if (*account) return cmd_account(f);
  } catch (const DegenerateError& e) {
    std::cerr << "numeric degeneracy: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
