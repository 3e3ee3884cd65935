#include "fadi/sketch.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "fadi/kernels.hpp"
#include "fadi/parallel.hpp"
#include "fadi/rng.hpp"

namespace fadi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Caps the width of one batched product so the n_s x width intermediate stays
// modest.
constexpr std::size_t kBatchColumns = 2400;

}  // namespace

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::LargeLp:
      return "large";
    case Regime::SmallLp:
      return "small";
    case Regime::EstimateOnly:
      return "estimate";
  }
  return "large";
}

Regime parse_regime(std::string_view name) {
  if (name == "large" || name == "large-lp" || name == "LargeLp") return Regime::LargeLp;
  if (name == "small" || name == "small-lp" || name == "SmallLp") return Regime::SmallLp;
  if (name == "estimate" || name == "estimate-only" || name == "EstimateOnly")
    return Regime::EstimateOnly;
  throw InvalidArgument("unknown regime '" + std::string(name) + "'");
}

std::size_t default_sketch_width(std::size_t K) {
  return std::max({2 * K, K + 7, std::size_t{12}});
}

SketchPlan resolve_plan(SketchPlan plan, std::size_t d) {
  require(plan.L >= 1, "sketch plan: L must be at least 1");
  require(plan.q >= 1, "sketch plan: q must be at least 1");
  if (plan.p == 0) {
    require(plan.K.has_value(), "sketch plan: p is required when K is unknown");
    plan.p = default_sketch_width(*plan.K);
  }
  if (plan.p_prime == 0) plan.p_prime = plan.p;
  require(plan.p <= d, "sketch plan: p exceeds d");
  if (plan.K) {
    const std::size_t K = *plan.K;
    require(K >= 1, "sketch plan: K must be positive");
    require(K <= plan.p, "sketch plan: K exceeds p");
    require(K <= plan.p_prime, "sketch plan: p' must be at least K");
    if (plan.p < std::max(2 * K, K + 7))
      warn("sketch width p=" + std::to_string(plan.p) + " is below max(2K, K+7)");
  }
  return plan;
}

void SketchResult::set_rank(std::size_t K) {
  require(K <= static_cast<std::size_t>(left.rank()), "set_rank: K exceeds available vectors");
  Vhat = left.leading(static_cast<Index>(K));
}

Matrix gaussian_test_matrix(std::size_t d, std::size_t p, std::uint64_t seed,
                            std::string_view label, std::uint64_t index) {
  require(d >= 1 && p >= 1, "gaussian_test_matrix: empty shape");
  Engine eng = make_stream(seed, label, index);
  Matrix out(static_cast<Index>(d), static_cast<Index>(p));
  fill_normal(eng, out.data(), static_cast<std::size_t>(out.size()));
  return out;
}

Matrix sketch_test_matrix(std::size_t d, std::size_t p, std::uint64_t master_seed,
                          std::size_t ell) {
  return gaussian_test_matrix(d, p, master_seed, "omega", ell);
}

Matrix local_sketch(const SplitOperator& split, const Matrix& omega) { return split.apply(omega); }

Matrix aggregate_sketch(const std::vector<Matrix>& parts, ModelKind model, double correction,
                        const Matrix& omega) {
  require(!parts.empty(), "aggregate_sketch: no parts");
  Matrix sum = parts.front();
  for (std::size_t s = 1; s < parts.size(); ++s) {
    require(parts[s].rows() == sum.rows() && parts[s].cols() == sum.cols(),
            "aggregate_sketch: part shapes differ");
    kernels::axpy(static_cast<std::size_t>(sum.size()), 1.0, parts[s].data(), sum.data());
  }
  if (is_sample_split(model) && correction != 0.0) {
    require(omega.rows() == sum.rows() && omega.cols() == sum.cols(),
            "aggregate_sketch: test matrix shape differs");
    kernels::axpy(static_cast<std::size_t>(sum.size()), -correction, omega.data(), sum.data());
  }
  return sum;
}

SketchResult sketch_pcs(const Matrix& yhat, std::size_t K, bool retain) {
  const std::size_t r = static_cast<std::size_t>(std::min(yhat.rows(), yhat.cols()));
  require(K >= 1 && K <= r, "sketch_pcs: K must lie in [1, min(d, p)]");
  ThinSvd svd = svd_thin(yhat);
  if (svd.s(static_cast<Index>(K) - 1) == 0.0)
    throw DegenerateError("sketch_pcs: sketch has rank below K");
  SketchResult res;
  res.singvals = std::move(svd.s);
  res.left = std::move(svd.u);
  res.Vhat = res.left.leading(static_cast<Index>(K));
  if (retain) res.Yhat = yhat;
  return res;
}

std::vector<SketchResult> run_sketch_round(const Dataset& ds, const SketchPlan& plan,
                                           SketchTimings* timings, std::size_t threads) {
  require(!ds.splits.empty(), "run_sketch_round: dataset has no splits");
  require(plan.p >= 1 && plan.L >= 1, "run_sketch_round: unresolved plan");
  if (ds.model == ModelKind::SpikedCov || ds.model == ModelKind::IncompleteMatrix)
    require(ds.prep.done, "run_sketch_round: step0 has not been applied");
  const std::size_t d = ds.dims.d;
  const std::size_t p = plan.p;
  const std::size_t L = plan.L;
  const std::size_t r = std::min(d, p);
  const std::size_t K = plan.K.value_or(r);
  require(K <= r, "run_sketch_round: K exceeds min(d, p)");

  const std::size_t per_batch = std::max<std::size_t>(1, kBatchColumns / p);
  const std::size_t batches = (L + per_batch - 1) / per_batch;
  std::vector<SketchResult> results(L);
  std::vector<std::vector<double>> split_time(batches, std::vector<double>(ds.splits.size(), 0.0));
  std::vector<double> sketch_time(L, 0.0);

  parallel_for(batches, threads, [&](std::size_t b) {
    const std::size_t l0 = b * per_batch;
    const std::size_t nb = std::min(per_batch, L - l0);
    Matrix omega(static_cast<Index>(d), static_cast<Index>(nb * p));
    for (std::size_t t = 0; t < nb; ++t) {
      omega.middleCols(static_cast<Index>(t * p), static_cast<Index>(p)) =
          sketch_test_matrix(d, p, plan.master_seed, l0 + t);
    }
    // Batched columns give the same per-column arithmetic as one sketch at a
    // time, so results do not depend on the batching.
    Matrix sum;
    for (std::size_t s = 0; s < ds.splits.size(); ++s) {
      const auto t0 = Clock::now();
      Matrix part = local_sketch(ds.splits[s], omega);
      split_time[b][s] += seconds_since(t0);
      if (s == 0) {
        sum = std::move(part);
      } else {
        kernels::axpy(static_cast<std::size_t>(sum.size()), 1.0, part.data(), sum.data());
      }
    }
    if (is_sample_split(ds.model) && ds.correction() != 0.0)
      kernels::axpy(static_cast<std::size_t>(sum.size()), -ds.correction(), omega.data(), sum.data());
    for (std::size_t t = 0; t < nb; ++t) {
      const auto t0 = Clock::now();
      const Matrix y = sum.middleCols(static_cast<Index>(t * p), static_cast<Index>(p));
      SketchResult res = sketch_pcs(y, K, plan.retain_sketches());
      res.ell = l0 + t;
      res.omega_key = derive_key(plan.master_seed, "omega", l0 + t);
      results[l0 + t] = std::move(res);
      sketch_time[l0 + t] = seconds_since(t0);
    }
  });

  if (timings) {
    timings->split_seconds.assign(ds.splits.size(), 0.0);
    for (const auto& bt : split_time)
      for (std::size_t s = 0; s < bt.size(); ++s) timings->split_seconds[s] += bt[s];
    timings->sketch_seconds = std::move(sketch_time);
  }
  return results;
}

}  // namespace fadi
