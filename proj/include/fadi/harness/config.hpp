#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fadi/models.hpp"
#include "fadi/sketch.hpp"

namespace fadi {

// Which covariance estimator backs the coverage and power columns.
// Auto picks the large-Lp form when L p >= d and the small-Lp form otherwise.
enum class RegimeChoice { Auto, Large, Small };

struct ExperimentConfig {
  std::string name = "experiment";

  // [model]
  ModelKind model = ModelKind::SpikedCov;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t m = 1;
  std::size_t K = 0;
  std::vector<double> lambda;  // empty selects (2K, 2K-2, ..., 2)
  double sigma2 = 1.0;
  bool axis_aligned = false;
  std::size_t kprime = 0;      // 0 selects K + 1
  double theta = -1.0;         // < 0 selects the model default
  double delta0sq = -1.0;
  double noise_sd = 1.0;
  double sigma = -1.0;
  bool self_loops = true;
  bool expected_only = false;
  std::string dcmm_layout = "mixed";  // mixed | blocks
  double p_in = 1.0;                  // blocks layout connectivity
  double p_out = 0.2;

  // [sketch]
  std::size_t p = 12;
  std::size_t p_prime = 0;
  std::vector<std::size_t> L_values{1};  // fitted once at the largest, smaller ones as prefixes
  std::size_t q = 7;
  RegimeChoice regime = RegimeChoice::Auto;
  std::optional<double> mu0;

  // [inference]
  std::size_t j = 0;
  std::optional<std::size_t> jprime;  // same profile as j (null pair)
  std::optional<std::size_t> kalt;    // different profile (alternative pair)
  double alpha = 0.05;

  // [baselines]
  std::vector<std::string> baselines;  // traditional, fan, fast_single

  // [experiment]
  std::size_t reps = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::set<std::string> metrics{"error"};
  std::filesystem::path out;

  std::size_t max_L() const;
};

// INI-style file: key = value pairs under [experiment], [model], [sketch],
// [inference] and [baselines]. Unknown sections or keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

// Throws InvalidArgument on inconsistent settings and fills pair defaults.
void validate(ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);

// Known metric families.
const std::set<std::string>& known_metrics();

RegimeChoice parse_regime_choice(const std::string& s);
std::string regime_choice_name(RegimeChoice r);

}  // namespace fadi
