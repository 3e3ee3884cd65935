#include "fadi/harness/accounting.hpp"

#include <algorithm>
#include <cmath>

namespace fadi {

CommAccount comm_account(ModelKind model, const SketchPlan& plan, const Dims& dims,
                         const std::vector<std::size_t>& split_sizes) {
  require(plan.K.has_value(), "comm_account: K must be known");
  require(dims.d >= 1 && dims.m >= 1, "comm_account: invalid dimensions");
  CommAccount a;
  a.model = model;
  a.d = dims.d;
  a.n = is_sample_split(model) ? dims.n : dims.d;
  a.m = dims.m;
  a.L = plan.L;
  a.K = *plan.K;
  a.p = plan.p ? plan.p : default_sketch_width(a.K);
  a.p_prime = plan.p_prime ? plan.p_prime : a.p;
  a.q = plan.q;

  std::vector<std::size_t> sizes = split_sizes;
  if (sizes.empty()) {
    const auto off = partition_offsets(a.n, a.m);
    for (std::size_t s = 0; s < a.m; ++s) sizes.push_back(off[s + 1] - off[s]);
  }
  require(sizes.size() == a.m, "comm_account: split size count disagrees with m");
  a.max_split = *std::max_element(sizes.begin(), sizes.end());

  const std::uint64_t dbl = sizeof(double);
  a.stage1_message_bytes = std::uint64_t(a.d) * a.p * dbl;
  a.stage1_messages = std::uint64_t(a.L) * a.m;
  a.stage1_bytes = a.stage1_message_bytes * a.stage1_messages;
  a.stage2_message_bytes = std::uint64_t(a.d) * a.K * dbl;
  a.stage2_messages = a.L;
  a.stage2_bytes = a.stage2_message_bytes * a.stage2_messages;
  a.total_bytes = a.stage1_bytes + a.stage2_bytes;

  const double d = double(a.d), n = double(a.n), m = double(a.m), L = double(a.L),
               p = double(a.p), pp = double(a.p_prime), K = double(a.K), q = double(a.q),
               ns = double(a.max_split);
  double sum_split = 0.0;
  for (auto s : sizes) sum_split += double(s);

  switch (model) {
    case ModelKind::SpikedCov: {
      const double kp = K + 1.0;
      a.step0 = kp * kp * ns + kp * kp * m + kp * kp * kp;
      break;
    }
    case ModelKind::IncompleteMatrix:
      a.step0 = d * ns;
      break;
    default:
      a.step0 = 0.0;
  }
  a.step1 = d * ns * p;  // d n_s p or d d_s p
  a.step2 = m * d * p + d * p * p;
  a.step3_powered = d * K * pp * L * q + d * pp * pp;
  if (is_sample_split(model)) a.step3_exact = d * d * p * L + d * d * d;
  a.fadi = a.step0 + a.step1 + a.step2 + a.step3_powered;
  a.fadi_work = a.step0 * (model == ModelKind::IncompleteMatrix ? m : 1.0) +
                L * d * sum_split * p + L * a.step2 + a.step3_powered;
  a.traditional = d * d * n + d * d * d;
  a.fast_single = d * n * K + d * d * K;
  if (is_sample_split(model)) a.fan_distributed = d * d * ns + d * d * d;
  a.ratio_to_traditional = a.fadi / a.traditional;
  return a;
}

nlohmann::json to_json(const CommAccount& a) {
  nlohmann::json j;
  j["model"] = std::string(model_name(a.model));
  j["dims"] = {{"d", a.d}, {"n", a.n}, {"m", a.m}, {"L", a.L}, {"p", a.p},
               {"p_prime", a.p_prime}, {"K", a.K}, {"q", a.q}, {"max_split", a.max_split}};
  j["bytes"] = {{"stage1_message", a.stage1_message_bytes},
                {"stage1_messages", a.stage1_messages},
                {"stage1_total", a.stage1_bytes},
                {"stage2_message", a.stage2_message_bytes},
                {"stage2_messages", a.stage2_messages},
                {"stage2_total", a.stage2_bytes},
                {"total", a.total_bytes}};
  nlohmann::json ops = {{"step0", a.step0},
                        {"step1", a.step1},
                        {"step2", a.step2},
                        {"step3_powered", a.step3_powered},
                        {"fadi", a.fadi},
                        {"fadi_work", a.fadi_work},
                        {"traditional", a.traditional},
                        {"fast_single", a.fast_single},
                        {"ratio_to_traditional", a.ratio_to_traditional}};
  if (a.step3_exact) ops["step3_exact"] = *a.step3_exact;
  if (a.fan_distributed) ops["fan_distributed"] = *a.fan_distributed;
  j["operations"] = std::move(ops);
  return j;
}

}  // namespace fadi
