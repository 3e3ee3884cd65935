#include "fadi/baselines.hpp"

#include <chrono>

namespace fadi {

PCEstimate traditional_pca(const Dataset& ds, std::size_t K, std::size_t dense_limit) {
  require(ds.dims.d <= dense_limit, "traditional_pca: d exceeds the densification limit");
  require(K >= 1 && K <= ds.dims.d, "traditional_pca: K out of range");
  EigPair ep = sym_eig_topk(dense_mhat(ds), static_cast<Index>(K), true);
  return PCEstimate{std::move(ep.vectors), PCMethod::Traditional, std::move(ep.values)};
}

PCEstimate fast_pca_single(const Dataset& ds, std::size_t K, std::size_t p,
                           std::uint64_t master_seed) {
  require(p >= K, "fast_pca_single: p must be at least K");
  SketchPlan plan;
  plan.p = p;
  plan.p_prime = p;
  plan.L = 1;
  plan.K = K;
  plan.m = ds.splits.size();
  plan.master_seed = master_seed;
  plan.regime = Regime::EstimateOnly;
  auto sketches = run_sketch_round(ds, plan);
  return PCEstimate{std::move(sketches.front().Vhat), PCMethod::FastSingle, std::nullopt};
}

PCEstimate fan_distributed_pca(const Dataset& ds, std::size_t K,
                               std::vector<double>* split_seconds, std::size_t dense_limit) {
  require(ds.model == ModelKind::SpikedCov, "fan_distributed_pca: spiked covariance model only");
  require(ds.dims.d <= dense_limit, "fan_distributed_pca: d exceeds the densification limit");
  require(K >= 1 && K <= ds.dims.d, "fan_distributed_pca: K out of range");
  std::vector<OrthonormalBasis> local;
  local.reserve(ds.splits.size());
  if (split_seconds) split_seconds->assign(ds.splits.size(), 0.0);
  for (std::size_t s = 0; s < ds.splits.size(); ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const SplitOperator& sp = ds.splits[s];
    Matrix cov = matmul_tn(sp.data(), sp.data());
    cov /= static_cast<double>(sp.size());
    local.push_back(sym_eig_topk(cov, static_cast<Index>(K), false).vectors);
    if (split_seconds)
      (*split_seconds)[s] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const ProjectionAverage avg(std::move(local));
  PCEstimate est = exact_pcs(avg, K, dense_limit);
  est.method = PCMethod::FanDistributed;
  return est;
}

}  // namespace fadi
