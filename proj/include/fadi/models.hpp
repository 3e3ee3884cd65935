#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fadi/common.hpp"
#include "fadi/linalg.hpp"

namespace fadi {

enum class ModelKind { SpikedCov, DCMM, GMM, IncompleteMatrix };

std::string_view model_name(ModelKind kind);
ModelKind parse_model(std::string_view name);

// Spiked and GMM data are split along samples; DCMM and incomplete-matrix data
// along columns of the d x d observation.
bool is_sample_split(ModelKind kind);

struct GroundTruth {
  OrthonormalBasis V;
  Vector Lambda;
  std::optional<std::vector<int>> labels;
  std::optional<Matrix> Pi;
  std::optional<double> sigma2;
  std::optional<double> theta;
};

// One site's additive share of the target matrix estimate.
class SplitOperator {
 public:
  // Rows [row_begin, row_begin + rows.rows()) of an n x d sample matrix.
  static SplitOperator sample_rows(ModelKind kind, Matrix rows, std::size_t row_begin,
                                   std::size_t global_n);
  // Columns [col_begin, col_begin + block.cols()) of a d x d observation. An empty
  // mask means every entry is observed.
  static SplitOperator column_block(ModelKind kind, Matrix block, std::size_t col_begin,
                                    std::vector<std::uint8_t> mask = {});

  ModelKind model() const { return kind_; }
  bool sample_split() const { return is_sample_split(kind_); }
  const Matrix& data() const { return data_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::size_t begin() const { return begin_; }
  std::size_t size() const;
  std::size_t dim() const;
  std::size_t global_n() const { return global_n_; }

  // Multiplier on the raw product: 1/n (spiked), 1/theta_hat (incomplete), else 1.
  double scale() const { return scale_; }
  void set_scale(double s) { scale_ = s; }

  // Share of the global identity correction carried by this split.
  double identity_share() const { return identity_share_; }
  void set_identity_share(double s) { identity_share_ = s; }

  bool observed(std::size_t row, std::size_t local_col) const;

  // Uncorrected local product: scale * X_s^T (X_s W) or scale * X_s W[block rows].
  Matrix apply(const Matrix& w) const;
  // Dense d x d component, minus the identity share when with_share is set.
  Matrix materialize(bool with_share) const;

 private:
  ModelKind kind_ = ModelKind::SpikedCov;
  Matrix data_;
  std::vector<std::uint8_t> mask_;
  std::size_t begin_ = 0;
  std::size_t global_n_ = 0;
  double scale_ = 1.0;
  double identity_share_ = 0.0;
};

struct Dims {
  std::size_t d = 0;
  std::size_t n = 0;  // sample size for sample-split models, d otherwise
  std::size_t m = 0;
  std::size_t K = 0;  // 0 when unknown
};

struct Step0Result {
  bool done = false;
  double sigma2_hat = 0.0;  // spiked
  double theta_hat = 0.0;   // incomplete
  std::size_t observed_pairs = 0;
  double correction = 0.0;  // multiple of the identity subtracted at aggregation
};

struct Dataset {
  ModelKind model = ModelKind::SpikedCov;
  std::vector<SplitOperator> splits;
  std::optional<GroundTruth> truth;
  Dims dims;
  std::map<std::string, double> params;
  Step0Result prep;

  double correction() const { return prep.correction; }
};

struct SpikedParams {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t K = 0;
  Vector lambda;
  double sigma2 = 1.0;
  std::size_t m = 1;
  bool axis_aligned = false;
};

struct DcmmParams {
  std::size_t d = 0;
  std::size_t K = 0;
  double theta = 0.9;
  Matrix Pi;
  Matrix P;
  bool self_loops = true;
  std::size_t m = 1;
  bool expected_only = false;  // observe M itself (noiseless checks)
};

struct GmmParams {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t K = 0;
  double delta0sq = -1.0;  // < 0 selects n^{2/3}
  std::size_t m = 1;
  double noise_sd = 1.0;
};

struct IncompleteParams {
  std::size_t d = 0;
  std::size_t K = 0;
  Vector lambda;
  double theta = 0.4;
  double sigma = -1.0;  // < 0 selects 8/d
  std::size_t m = 1;
};

// Random draws use keyed substreams: per sample row (spiked, GMM) or per
// column of the upper triangle (DCMM, incomplete), so the data do not depend on
// the number of splits. The ground truth uses truth_seed.
Dataset generate_spiked(const SpikedParams& prm, std::uint64_t seed,
                        std::optional<std::uint64_t> truth_seed = std::nullopt);
Dataset generate_dcmm(const DcmmParams& prm, std::uint64_t seed);
Dataset generate_gmm(const GmmParams& prm, std::uint64_t seed,
                     std::optional<std::uint64_t> truth_seed = std::nullopt);
Dataset generate_incomplete(const IncompleteParams& prm, std::uint64_t seed,
                            std::optional<std::uint64_t> truth_seed = std::nullopt);

// Membership matrix with the seven-block layout of the mixed-membership study.
Matrix mixed_membership_pi(std::size_t d);
// The matching 3 x 3 connectivity matrix.
Matrix mixed_membership_p();

// Contiguous partition of `total` items into m parts; the first total % m parts
// get one extra item. Returns m + 1 offsets.
std::vector<std::size_t> partition_offsets(std::size_t total, std::size_t m);

// Builds splits from a full sample matrix (n x d) or a full d x d observation.
Dataset dataset_from_samples(ModelKind kind, const Matrix& x, std::size_t m);
Dataset dataset_from_square(ModelKind kind, const Matrix& x, std::size_t m,
                            const std::vector<std::uint8_t>& mask = {});

// Same underlying data, m new contiguous splits. Preprocessing is reset.
Dataset resplit(const Dataset& ds, std::size_t m);

struct Step0Options {
  std::size_t kprime = 0;         // spiked: size of the index set (>= K + 1)
  std::vector<std::size_t> index_set;  // overrides the first-kprime default
};

// Sets per-split scales and identity shares and returns the global scalars.
Step0Result step0(Dataset& ds, const Step0Options& opt);

struct Mu0Stats {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::optional<double> theta_hat;
  std::optional<double> sigma0_hat;
};

Mu0Stats mu0_stats(const Dataset& ds, std::size_t p);
double mu0_default(ModelKind kind, const Mu0Stats& st);

// Dense target estimate: sum of split components minus the identity correction.
Matrix dense_mhat(const Dataset& ds);

// Entire sample matrix (sample-split) or d x d observation (column-split).
Matrix gather_data(const Dataset& ds);

}  // namespace fadi
