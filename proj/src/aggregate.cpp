#include "fadi/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fadi {

std::string_view method_name(PCMethod m) {
  switch (m) {
    case PCMethod::TildeV:
      return "fadi_exact";
    case PCMethod::TildeVF:
      return "fadi";
    case PCMethod::Traditional:
      return "traditional";
    case PCMethod::FastSingle:
      return "fast_single";
    case PCMethod::FanDistributed:
      return "fan_distributed";
  }
  return "fadi";
}

ProjectionAverage::ProjectionAverage(std::vector<OrthonormalBasis> bases)
    : bases_(std::move(bases)) {
  require(!bases_.empty(), "ProjectionAverage: no bases");
  const Index d = bases_.front().dim();
  rank_ = bases_.front().rank();
  for (const auto& b : bases_)
    require(b.dim() == d && b.rank() == rank_, "ProjectionAverage: bases differ in shape");
  stacked_.resize(d, rank_ * static_cast<Index>(bases_.size()));
  for (std::size_t l = 0; l < bases_.size(); ++l)
    stacked_.middleCols(static_cast<Index>(l) * rank_, rank_) = bases_[l].mat();
}

ProjectionAverage ProjectionAverage::from_sketches(const std::vector<SketchResult>& sketches,
                                                   std::size_t count) {
  if (count == 0) count = sketches.size();
  require(count <= sketches.size(), "ProjectionAverage: not enough sketches");
  std::vector<OrthonormalBasis> bases;
  bases.reserve(count);
  for (std::size_t l = 0; l < count; ++l) bases.push_back(sketches[l].Vhat);
  return ProjectionAverage(std::move(bases));
}

Matrix ProjectionAverage::apply(const Matrix& x) const {
  require(x.rows() == dim(), "proj_avg_apply: row count differs from d");
  const Matrix coef = matmul_tn(stacked_, x);
  Matrix out(x.rows(), x.cols());
  matmul_into(stacked_, coef, out, 1.0 / static_cast<double>(L()), 0.0);
  return out;
}

Matrix ProjectionAverage::materialize() const {
  Matrix s = matmul_nt(stacked_, stacked_);
  s /= static_cast<double>(L());
  return 0.5 * (s + s.transpose());
}

double ProjectionAverage::trace() const {
  return stacked_.squaredNorm() / static_cast<double>(L());
}

Matrix proj_avg_apply(const ProjectionAverage& avg, const Matrix& x) { return avg.apply(x); }

PCEstimate exact_pcs(const ProjectionAverage& avg, std::size_t K, std::size_t dense_limit) {
  require(static_cast<std::size_t>(avg.dim()) <= dense_limit,
          "exact_pcs: d exceeds the densification limit; use powered_pcs");
  require(K >= 1 && K <= static_cast<std::size_t>(avg.dim()), "exact_pcs: K out of range");
  EigPair ep = sym_eig_topk(avg.materialize(), static_cast<Index>(K), false);
  return PCEstimate{std::move(ep.vectors), PCMethod::TildeV, std::move(ep.values)};
}

PCEstimate powered_pcs(const ProjectionAverage& avg, std::size_t K, std::size_t p_prime,
                       std::size_t q, std::uint64_t master_seed) {
  require(K >= 1, "powered_pcs: K must be positive");
  require(p_prime >= K, "powered_pcs: p' must be at least K");
  require(q >= 1, "powered_pcs: q must be at least 1");
  require(p_prime <= static_cast<std::size_t>(avg.dim()), "powered_pcs: p' exceeds d");
  Matrix y = gaussian_test_matrix(static_cast<std::size_t>(avg.dim()), p_prime, master_seed,
                                  "omegaF", 0);
  for (std::size_t it = 0; it < q; ++it) {
    y = avg.apply(y);
    if (y.colwise().norm().minCoeff() < 1e-150) y = orthonormalize(y);
  }
  ThinSvd svd = svd_thin(y);
  return PCEstimate{svd.u.leading(static_cast<Index>(K)), PCMethod::TildeVF, std::nullopt};
}

LocalRank estimate_rank_local(const Vector& singvals, std::size_t p, double mu0) {
  require(mu0 > 0.0, "estimate_rank_local: mu0 must be positive");
  require(p >= 1 && static_cast<std::size_t>(singvals.size()) >= p,
          "estimate_rank_local: need at least p singular values");
  const double thresh = std::sqrt(static_cast<double>(p)) * mu0;
  const double tail = singvals(static_cast<Index>(p) - 1);
  LocalRank out;
  // k = p - 1 always meets the criterion, so reaching it means no earlier k did.
  for (std::size_t k = 0; k + 1 < p; ++k) {
    if (singvals(static_cast<Index>(k)) - tail <= thresh) {
      out.rank = k;
      out.no_signal = (k == 0);
      return out;
    }
  }
  out.rank = p - 1;
  out.fallback = true;
  return out;
}

std::size_t median_ceil(std::vector<std::size_t> values) {
  require(!values.empty(), "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const std::size_t lo = values[n / 2 - 1], hi = values[n / 2];
  return (lo + hi + 1) / 2;
}

std::size_t estimate_rank(const std::vector<SketchResult>& sketches, std::size_t p, double mu0) {
  require(!sketches.empty(), "estimate_rank: no sketches");
  std::vector<std::size_t> locals;
  locals.reserve(sketches.size());
  std::size_t fallbacks = 0;
  for (const auto& s : sketches) {
    const LocalRank lr = estimate_rank_local(s.singvals, p, mu0);
    fallbacks += lr.fallback ? 1 : 0;
    locals.push_back(lr.rank);
  }
  if (fallbacks > 0)
    warn("rank criterion unmet in " + std::to_string(fallbacks) +
         " sketches; p may be too small");
  return median_ceil(std::move(locals));
}

}  // namespace fadi
