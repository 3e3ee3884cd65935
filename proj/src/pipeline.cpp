#include "fadi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace fadi {

double StageTimes::distributed() const {
  const double s1 = step1_split.empty() ? 0.0 : *std::max_element(step1_split.begin(), step1_split.end());
  const double s2 = step2_sketch.empty() ? 0.0 : *std::max_element(step2_sketch.begin(), step2_sketch.end());
  return s1 + s2 + step3;
}

FadiFit run_fadi(const Dataset& ds, SketchPlan plan, const FitOptions& opt) {
  const std::size_t d = ds.dims.d;
  if (plan.p == 0 && !plan.K) throw InvalidArgument("run_fadi: p is required when K is estimated");
  plan = resolve_plan(plan, d);
  plan.m = ds.splits.size();

  FadiFit fit;
  SketchTimings st;
  fit.sketches = run_sketch_round(ds, plan, &st, opt.threads);

  if (!plan.K) {
    const double mu0 = opt.mu0 ? *opt.mu0 : mu0_default(ds.model, mu0_stats(ds, plan.p));
    const std::size_t k = estimate_rank(fit.sketches, plan.p, mu0);
    if (k == 0) throw DegenerateError("rank estimate is zero: no signal above the threshold");
    for (auto& s : fit.sketches) s.set_rank(k);
    plan.K = k;
    fit.rank_estimated = true;
    if (plan.p_prime < k) plan.p_prime = plan.p;
  }
  fit.K = *plan.K;
  fit.plan = plan;

  const auto t0 = std::chrono::steady_clock::now();
  const ProjectionAverage avg = ProjectionAverage::from_sketches(fit.sketches);
  fit.vf = powered_pcs(avg, fit.K, plan.p_prime, plan.q, plan.master_seed);
  fit.times.step3 = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opt.exact) fit.vtilde = exact_pcs(avg, fit.K);

  fit.times.step1_split = std::move(st.split_seconds);
  fit.times.step2_sketch = std::move(st.sketch_seconds);
  fit.times.total = std::accumulate(fit.times.step1_split.begin(), fit.times.step1_split.end(), 0.0) +
                    std::accumulate(fit.times.step2_sketch.begin(), fit.times.step2_sketch.end(), 0.0) +
                    fit.times.step3;
  return fit;
}

PCEstimate refit_prefix(const FadiFit& fit, std::size_t count) {
  require(count >= 1 && count <= fit.sketches.size(), "refit_prefix: invalid sketch count");
  const ProjectionAverage avg = ProjectionAverage::from_sketches(fit.sketches, count);
  return powered_pcs(avg, fit.K, fit.plan.p_prime, fit.plan.q, fit.plan.master_seed);
}

}  // namespace fadi
