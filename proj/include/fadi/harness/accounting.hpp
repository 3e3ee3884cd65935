#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fadi/models.hpp"
#include "fadi/sketch.hpp"

namespace fadi {

// Message sizes and leading-order operation counts of one FADI run, alongside
// the baselines. Operation counts use the complexity formulas with unit
// constants and the largest actual split size in place of n/m or d/m.
struct CommAccount {
  ModelKind model = ModelKind::SpikedCov;
  std::size_t d = 0, n = 0, m = 0, L = 0, p = 0, p_prime = 0, K = 0, q = 0;
  std::size_t max_split = 0;

  std::uint64_t stage1_message_bytes = 0;  // one d x p local sketch
  std::uint64_t stage1_messages = 0;       // L * m
  std::uint64_t stage1_bytes = 0;
  std::uint64_t stage2_message_bytes = 0;  // one d x K basis
  std::uint64_t stage2_messages = 0;       // L
  std::uint64_t stage2_bytes = 0;
  std::uint64_t total_bytes = 0;

  double step0 = 0.0;
  double step1 = 0.0;  // one (split, sketch) task on the largest split
  double step2 = 0.0;  // aggregation plus truncated SVD of one sketch
  double step3_powered = 0.0;
  std::optional<double> step3_exact;  // sample-split models only
  double fadi = 0.0;                  // critical path, powered estimate
  double fadi_work = 0.0;             // every task summed
  double traditional = 0.0;
  double fast_single = 0.0;
  std::optional<double> fan_distributed;
  double ratio_to_traditional = 0.0;
};

// split_sizes lists n_s (sample-split) or d_s (column-split); empty selects the
// contiguous near-equal partition.
CommAccount comm_account(ModelKind model, const SketchPlan& plan, const Dims& dims,
                         const std::vector<std::size_t>& split_sizes = {});

nlohmann::json to_json(const CommAccount& acc);

}  // namespace fadi
