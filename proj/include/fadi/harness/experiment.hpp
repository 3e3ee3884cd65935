#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fadi/harness/config.hpp"
#include "fadi/models.hpp"

namespace fadi {

struct MetricValue {
  std::string family;  // output file stem: error, inference, rank, clustering, are, timing
  std::string name;
  double value = 0.0;
  bool binary = false;  // 0/1 outcome; standard error from the binomial formula
};

struct RepRecord {
  std::size_t rep = 0;
  bool failed = false;
  std::string error;
  std::vector<MetricValue> values;
};

struct MetricSummary {
  std::string family;
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  bool binary = false;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepRecord> reps;
  std::vector<MetricSummary> summary;  // sorted by (family, name)
  std::map<std::string, double> derived;  // cross-rep quantities such as ARE
  std::size_t failures = 0;

  const MetricSummary* find(const std::string& name) const;
  // Mean of a metric; throws when absent.
  double mean(const std::string& name) const;
};

// Dataset of one replicate: data from `seed`, ground truth from `truth_seed`.
Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t truth_seed);

// Step-0 preprocessing with the configuration's index-set size.
void prepare_dataset(const ExperimentConfig& cfg, Dataset& ds);

// Replicate r uses the data seed derive_key(cfg.seed, "rep", r); the truth is
// fixed by cfg.seed. Failed replicates are recorded and skipped.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Long-format <family>.csv files (rep,metric,value) and summary.json.
void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir);

nlohmann::json summary_json(const ExperimentResult& res);

}  // namespace fadi
