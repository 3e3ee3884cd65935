#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fadi/linalg.hpp"
#include "fadi/sketch.hpp"

namespace fadi {

enum class PCMethod { TildeV, TildeVF, Traditional, FastSingle, FanDistributed };

std::string_view method_name(PCMethod m);

struct PCEstimate {
  OrthonormalBasis basis;
  PCMethod method = PCMethod::TildeVF;
  std::optional<Vector> eigvals;
};

// Average of the projectors onto L equal-rank bases, kept in factored form.
class ProjectionAverage {
 public:
  explicit ProjectionAverage(std::vector<OrthonormalBasis> bases);

  // Uses the first `count` sketches (all when count is 0).
  static ProjectionAverage from_sketches(const std::vector<SketchResult>& sketches,
                                         std::size_t count = 0);

  std::size_t L() const { return bases_.size(); }
  Index dim() const { return stacked_.rows(); }
  Index rank() const { return rank_; }
  const std::vector<OrthonormalBasis>& bases() const { return bases_; }

  // (1/L) sum_l B_l (B_l^T X), evaluated as (1/L) W (W^T X) with W = [B_1 ... B_L].
  Matrix apply(const Matrix& x) const;
  Matrix materialize() const;
  double trace() const;

 private:
  std::vector<OrthonormalBasis> bases_;
  Matrix stacked_;
  Index rank_ = 0;
};

Matrix proj_avg_apply(const ProjectionAverage& avg, const Matrix& x);

inline constexpr std::size_t kDenseLimit = 4000;

// Top-K eigenvectors of the materialized average.
PCEstimate exact_pcs(const ProjectionAverage& avg, std::size_t K,
                     std::size_t dense_limit = kDenseLimit);

// Top-K left singular vectors of avg^q Omega_F, Omega_F keyed (seed, "omegaF", 0).
PCEstimate powered_pcs(const ProjectionAverage& avg, std::size_t K, std::size_t p_prime,
                       std::size_t q, std::uint64_t master_seed);

struct LocalRank {
  std::size_t rank = 0;
  bool no_signal = false;  // criterion met at k = 0
  bool fallback = false;   // criterion never met; p - 1 returned
};

LocalRank estimate_rank_local(const Vector& singvals, std::size_t p, double mu0);

// Ceiling of the median of the per-sketch estimates.
std::size_t estimate_rank(const std::vector<SketchResult>& sketches, std::size_t p, double mu0);
std::size_t median_ceil(std::vector<std::size_t> values);

}  // namespace fadi
