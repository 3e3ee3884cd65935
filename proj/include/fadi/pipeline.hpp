#pragma once

#include <optional>
#include <vector>

#include "fadi/aggregate.hpp"
#include "fadi/models.hpp"
#include "fadi/sketch.hpp"

namespace fadi {

struct FitOptions {
  std::optional<double> mu0;  // rank threshold; mu0_default when absent
  bool exact = false;         // also compute the densified-average estimate
  std::size_t threads = 1;
};

struct StageTimes {
  std::vector<double> step1_split;   // per split
  std::vector<double> step2_sketch;  // per sketch
  double step3 = 0.0;
  double total = 0.0;  // summed CPU work, all stages

  // Critical path when splits and sketch servers run concurrently.
  double distributed() const;
};

struct FadiFit {
  SketchPlan plan;  // resolved, with K filled in
  std::vector<SketchResult> sketches;
  std::size_t K = 0;
  bool rank_estimated = false;
  PCEstimate vf;
  std::optional<PCEstimate> vtilde;
  StageTimes times;
};

// Steps 1-3 on a dataset that already went through step0.
FadiFit run_fadi(const Dataset& ds, SketchPlan plan, const FitOptions& opt = {});

// Step 3 only, from the first `count` sketches of an existing fit.
PCEstimate refit_prefix(const FadiFit& fit, std::size_t count);

}  // namespace fadi
