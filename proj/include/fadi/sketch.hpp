#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fadi/linalg.hpp"
#include "fadi/models.hpp"

namespace fadi {

enum class Regime { LargeLp, SmallLp, EstimateOnly };

std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);

struct SketchPlan {
  std::size_t p = 0;        // 0 selects the default for K
  std::size_t p_prime = 0;  // 0 selects p
  std::size_t L = 1;
  std::size_t q = 7;
  std::optional<std::size_t> K;
  std::size_t m = 1;
  std::uint64_t master_seed = 0;
  Regime regime = Regime::LargeLp;

  // Sketches are kept only when the small-Lp covariance will need them.
  bool retain_sketches() const { return regime == Regime::SmallLp; }
};

// max(2K, K + 7, 12)
std::size_t default_sketch_width(std::size_t K);

// Fills p and p' defaults, checks ranges and warns when p < max(2K, K + 7).
SketchPlan resolve_plan(SketchPlan plan, std::size_t d);

struct SketchResult {
  std::size_t ell = 0;
  std::uint64_t omega_key = 0;
  Matrix Yhat;             // empty unless retained
  OrthonormalBasis left;   // all min(d, p) left singular vectors
  OrthonormalBasis Vhat;   // leading K of them
  Vector singvals;

  // Re-truncates to a different number of leading vectors.
  void set_rank(std::size_t K);
};

// Entries iid N(0,1) drawn from the (seed, label, index) substream, row-major.
Matrix gaussian_test_matrix(std::size_t d, std::size_t p, std::uint64_t seed,
                            std::string_view label, std::uint64_t index);
// The l-th sketch's test matrix: key (master_seed, "omega", l).
Matrix sketch_test_matrix(std::size_t d, std::size_t p, std::uint64_t master_seed,
                          std::size_t ell);

Matrix local_sketch(const SplitOperator& split, const Matrix& omega);

// Sums parts in the given (split) order, then subtracts correction * Omega for
// the spiked and GMM models.
Matrix aggregate_sketch(const std::vector<Matrix>& parts, ModelKind model, double correction,
                        const Matrix& omega);

SketchResult sketch_pcs(const Matrix& yhat, std::size_t K, bool retain = true);

struct SketchTimings {
  std::vector<double> split_seconds;   // Step-1 work per split, all sketches
  std::vector<double> sketch_seconds;  // Step-2 work per sketch
};

// All L sketches. K may be absent when the regime is EstimateOnly or when rank
// estimation follows; the leading vectors are then set to min(d, p).
std::vector<SketchResult> run_sketch_round(const Dataset& ds, const SketchPlan& plan,
                                           SketchTimings* timings = nullptr,
                                           std::size_t threads = 1);

}  // namespace fadi
