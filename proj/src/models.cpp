#include "fadi/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fadi/kernels.hpp"
#include "fadi/rng.hpp"

namespace fadi {

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::SpikedCov:
      return "spiked";
    case ModelKind::DCMM:
      return "dcmm";
    case ModelKind::GMM:
      return "gmm";
    case ModelKind::IncompleteMatrix:
      return "incomplete";
  }
  return "spiked";
}

ModelKind parse_model(std::string_view name) {
  if (name == "spiked" || name == "spiked_cov") return ModelKind::SpikedCov;
  if (name == "dcmm") return ModelKind::DCMM;
  if (name == "gmm") return ModelKind::GMM;
  if (name == "incomplete" || name == "incomplete_matrix") return ModelKind::IncompleteMatrix;
  throw InvalidArgument("unknown model '" + std::string(name) + "'");
}

bool is_sample_split(ModelKind kind) {
  return kind == ModelKind::SpikedCov || kind == ModelKind::GMM;
}

// ---------------------------------------------------------------------------
// SplitOperator

SplitOperator SplitOperator::sample_rows(ModelKind kind, Matrix rows, std::size_t row_begin,
                                         std::size_t global_n) {
  require(is_sample_split(kind), "sample_rows: model is column-split");
  require(global_n >= 1, "sample_rows: global n must be positive");
  SplitOperator op;
  op.kind_ = kind;
  op.data_ = std::move(rows);
  op.begin_ = row_begin;
  op.global_n_ = global_n;
  op.scale_ = kind == ModelKind::SpikedCov ? 1.0 / static_cast<double>(global_n) : 1.0;
  return op;
}

SplitOperator SplitOperator::column_block(ModelKind kind, Matrix block, std::size_t col_begin,
                                          std::vector<std::uint8_t> mask) {
  require(!is_sample_split(kind), "column_block: model is sample-split");
  require(mask.empty() || mask.size() == static_cast<std::size_t>(block.size()),
          "column_block: mask size mismatch");
  SplitOperator op;
  op.kind_ = kind;
  op.data_ = std::move(block);
  op.mask_ = std::move(mask);
  op.begin_ = col_begin;
  op.global_n_ = static_cast<std::size_t>(op.data_.rows());
  return op;
}

std::size_t SplitOperator::size() const {
  return static_cast<std::size_t>(sample_split() ? data_.rows() : data_.cols());
}

std::size_t SplitOperator::dim() const {
  return static_cast<std::size_t>(sample_split() ? data_.cols() : data_.rows());
}

bool SplitOperator::observed(std::size_t row, std::size_t local_col) const {
  if (mask_.empty()) return true;
  return mask_[row * static_cast<std::size_t>(data_.cols()) + local_col] != 0;
}

Matrix SplitOperator::apply(const Matrix& w) const {
  const auto d = static_cast<Index>(dim());
  require(w.rows() == d, "local_sketch: test matrix must have d rows");
  Matrix out(d, w.cols());
  if (sample_split()) {
    const Matrix t = matmul(data_, w);
    matmul_tn_into(data_, t, out, scale_, 0.0);
  } else {
    const kernels::ConstView a{data_.data(), static_cast<std::size_t>(data_.rows()),
                               static_cast<std::size_t>(data_.cols()),
                               static_cast<std::ptrdiff_t>(data_.cols()), 1};
    const kernels::ConstView b{w.data() + static_cast<std::ptrdiff_t>(begin_) * w.cols(),
                               static_cast<std::size_t>(data_.cols()),
                               static_cast<std::size_t>(w.cols()),
                               static_cast<std::ptrdiff_t>(w.cols()), 1};
    kernels::gemm(a, b, out.data(), static_cast<std::size_t>(out.cols()), scale_, 0.0);
  }
  return out;
}

Matrix SplitOperator::materialize(bool with_share) const {
  const auto d = static_cast<Index>(dim());
  Matrix out;
  if (sample_split()) {
    out = Matrix(d, d);
    matmul_tn_into(data_, data_, out, scale_, 0.0);
  } else {
    out = Matrix::Zero(d, d);
    out.middleCols(static_cast<Index>(begin_), data_.cols()) = scale_ * data_;
  }
  if (with_share) out.diagonal().array() -= identity_share_;
  return out;
}

// ---------------------------------------------------------------------------
// Splitting helpers

std::vector<std::size_t> partition_offsets(std::size_t total, std::size_t m) {
  require(m >= 1, "number of splits must be positive");
  require(m <= total, "more splits than items to split");
  std::vector<std::size_t> off(m + 1, 0);
  const std::size_t base = total / m;
  const std::size_t extra = total % m;
  for (std::size_t s = 0; s < m; ++s) off[s + 1] = off[s] + base + (s < extra ? 1 : 0);
  return off;
}

Dataset dataset_from_samples(ModelKind kind, const Matrix& x, std::size_t m) {
  require(is_sample_split(kind), "dataset_from_samples: model is column-split");
  const auto n = static_cast<std::size_t>(x.rows());
  Dataset ds;
  ds.model = kind;
  ds.dims = Dims{static_cast<std::size_t>(x.cols()), n, m, 0};
  const auto off = partition_offsets(n, m);
  for (std::size_t s = 0; s < m; ++s) {
    ds.splits.push_back(SplitOperator::sample_rows(
        kind, x.middleRows(static_cast<Index>(off[s]), static_cast<Index>(off[s + 1] - off[s])),
        off[s], n));
  }
  return ds;
}

Dataset dataset_from_square(ModelKind kind, const Matrix& x, std::size_t m,
                            const std::vector<std::uint8_t>& mask) {
  require(!is_sample_split(kind), "dataset_from_square: model is sample-split");
  require(x.rows() == x.cols(), "dataset_from_square: matrix must be square");
  const auto d = static_cast<std::size_t>(x.rows());
  require(mask.empty() || mask.size() == d * d, "dataset_from_square: mask size mismatch");
  Dataset ds;
  ds.model = kind;
  ds.dims = Dims{d, d, m, 0};
  const auto off = partition_offsets(d, m);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t w = off[s + 1] - off[s];
    Matrix block = x.middleCols(static_cast<Index>(off[s]), static_cast<Index>(w));
    std::vector<std::uint8_t> bm;
    if (!mask.empty()) {
      bm.resize(d * w);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < w; ++j) bm[i * w + j] = mask[i * d + off[s] + j];
    }
    ds.splits.push_back(SplitOperator::column_block(kind, std::move(block), off[s], std::move(bm)));
  }
  return ds;
}

Matrix gather_data(const Dataset& ds) {
  require(!ds.splits.empty(), "dataset has no splits");
  const auto d = static_cast<Index>(ds.dims.d);
  if (is_sample_split(ds.model)) {
    Matrix x(static_cast<Index>(ds.dims.n), d);
    for (const auto& sp : ds.splits)
      x.middleRows(static_cast<Index>(sp.begin()), sp.data().rows()) = sp.data();
    return x;
  }
  Matrix x(d, d);
  for (const auto& sp : ds.splits)
    x.middleCols(static_cast<Index>(sp.begin()), sp.data().cols()) = sp.data();
  return x;
}

namespace {

std::vector<std::uint8_t> gather_mask(const Dataset& ds) {
  bool any = false;
  for (const auto& sp : ds.splits) any = any || !sp.mask().empty();
  if (!any) return {};
  const std::size_t d = ds.dims.d;
  std::vector<std::uint8_t> mask(d * d, 1);
  for (const auto& sp : ds.splits) {
    const std::size_t w = sp.size();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < w; ++j) mask[i * d + sp.begin() + j] = sp.observed(i, j) ? 1 : 0;
  }
  return mask;
}

}  // namespace

Dataset resplit(const Dataset& ds, std::size_t m) {
  const Matrix x = gather_data(ds);
  Dataset out = is_sample_split(ds.model) ? dataset_from_samples(ds.model, x, m)
                                          : dataset_from_square(ds.model, x, m, gather_mask(ds));
  out.truth = ds.truth;
  out.params = ds.params;
  out.dims.K = ds.dims.K;
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

Matrix random_orthonormal(std::size_t d, std::size_t k, std::uint64_t seed) {
  Engine eng = make_stream(seed, "truth", 0);
  Matrix g(static_cast<Index>(d), static_cast<Index>(k));
  fill_normal(eng, g.data(), static_cast<std::size_t>(g.size()));
  return svd_thin(g).u.mat();
}

void check_lambda(const Vector& lambda, std::size_t K) {
  require(static_cast<std::size_t>(lambda.size()) == K, "Lambda must have K entries");
  for (Index k = 0; k < lambda.size(); ++k) {
    require(lambda(k) != 0.0, "Lambda entries must be nonzero");
    if (k > 0) require(std::abs(lambda(k)) <= std::abs(lambda(k - 1)), "|Lambda| must be non-increasing");
  }
}

}  // namespace

Dataset generate_spiked(const SpikedParams& prm, std::uint64_t seed,
                        std::optional<std::uint64_t> truth_seed) {
  const std::size_t d = prm.d, n = prm.n, K = prm.K;
  require(K >= 1 && d >= K && n >= d, "generate_spiked: need n >= d >= K >= 1");
  require(prm.m >= 1 && prm.m <= n, "generate_spiked: invalid number of splits");
  require(prm.sigma2 >= 0.0, "generate_spiked: sigma2 must be nonnegative");
  check_lambda(prm.lambda, K);
  for (Index k = 0; k < prm.lambda.size(); ++k)
    require(prm.lambda(k) > 0.0, "generate_spiked: Lambda must be positive");

  Matrix v;
  if (prm.axis_aligned) {
    v = Matrix::Identity(static_cast<Index>(d), static_cast<Index>(K));
  } else {
    v = random_orthonormal(d, K, truth_seed.value_or(seed));
  }
  // Rows are z^T (V diag(sqrt(lambda)))^T + sigma w^T.
  Matrix loading = v;
  for (Index k = 0; k < static_cast<Index>(K); ++k) loading.col(k) *= std::sqrt(prm.lambda(k));
  const double sigma = std::sqrt(prm.sigma2);

  Dataset ds;
  ds.model = ModelKind::SpikedCov;
  ds.dims = Dims{d, n, prm.m, K};
  const auto off = partition_offsets(n, prm.m);
  for (std::size_t s = 0; s < prm.m; ++s) {
    const std::size_t rows = off[s + 1] - off[s];
    Matrix z(static_cast<Index>(rows), static_cast<Index>(K));
    Matrix x(static_cast<Index>(rows), static_cast<Index>(d));
    for (std::size_t r = 0; r < rows; ++r) {
      Engine eng = make_stream(seed, "gen", off[s] + r);
      fill_normal(eng, z.row(static_cast<Index>(r)).data(), K);
      fill_normal(eng, x.row(static_cast<Index>(r)).data(), d);
    }
    x *= sigma;
    x += matmul_nt(z, loading);
    ds.splits.push_back(SplitOperator::sample_rows(ModelKind::SpikedCov, std::move(x), off[s], n));
  }

  GroundTruth t;
  t.V = OrthonormalBasis::adopt(std::move(v));
  t.Lambda = prm.lambda;
  t.sigma2 = prm.sigma2;
  ds.truth = std::move(t);
  ds.params = {{"d", double(d)}, {"n", double(n)}, {"K", double(K)}, {"m", double(prm.m)},
               {"sigma2", prm.sigma2}, {"axis_aligned", prm.axis_aligned ? 1.0 : 0.0}};
  for (Index k = 0; k < prm.lambda.size(); ++k)
    ds.params["lambda" + std::to_string(k + 1)] = prm.lambda(k);
  return ds;
}

Matrix mixed_membership_pi(std::size_t d) {
  require(d >= 8, "mixed_membership_pi: d too small");
  Matrix pi(static_cast<Index>(d), 3);
  const double third = 1.0 / 3.0;
  const std::size_t b1 = d / 6, b2 = d / 3, b3 = d / 2, b4 = 5 * d / 8, b5 = 3 * d / 4,
                    b6 = 7 * d / 8;
  for (std::size_t i = 0; i < d; ++i) {
    Eigen::RowVector3d row;
    if (i < b1) row << 1, 0, 0;
    else if (i < b2) row << 0, 1, 0;
    else if (i < b3) row << 0, 0, 1;
    else if (i < b4) row << 0.6, 0.2, 0.2;
    else if (i < b5) row << 0.2, 0.6, 0.2;
    else if (i < b6) row << 0.2, 0.2, 0.6;
    else row << third, third, third;
    pi.row(static_cast<Index>(i)) = row;
  }
  return pi;
}

Matrix mixed_membership_p() {
  Matrix p(3, 3);
  p << 1.0, 0.2, 0.1, 0.2, 1.0, 0.2, 0.1, 0.2, 1.0;
  return p;
}

Dataset generate_dcmm(const DcmmParams& prm, std::uint64_t seed) {
  const std::size_t d = prm.d, K = prm.K;
  require(K >= 1 && d >= K, "generate_dcmm: need d >= K >= 1");
  require(prm.Pi.rows() == static_cast<Index>(d) && prm.Pi.cols() == static_cast<Index>(K),
          "generate_dcmm: Pi must be d x K");
  require(prm.P.rows() == static_cast<Index>(K) && prm.P.cols() == static_cast<Index>(K),
          "generate_dcmm: P must be K x K");
  require(max_asymmetry(prm.P) <= 1e-12, "generate_dcmm: P must be symmetric");
  require(prm.theta > 0.0, "generate_dcmm: theta must be positive");
  for (Index i = 0; i < prm.Pi.rows(); ++i) {
    require(prm.Pi.row(i).minCoeff() >= 0.0, "generate_dcmm: negative membership");
    require(std::abs(prm.Pi.row(i).sum() - 1.0) <= 1e-9, "generate_dcmm: memberships must sum to 1");
  }
  require(prm.m >= 1 && prm.m <= d, "generate_dcmm: invalid number of splits");

  const Matrix mean = prm.theta * (prm.Pi * prm.P * prm.Pi.transpose());
  if (mean.minCoeff() < 0.0 || mean.maxCoeff() > 1.0)
    throw InvalidArgument("generate_dcmm: edge probabilities outside [0,1]");

  // Truth from the thin QR of Pi: M = theta Q (R P R^T) Q^T.
  const Eigen::MatrixXd pic = prm.Pi;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(pic);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(Index(d), Index(K));
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(Index(K)).triangularView<Eigen::Upper>().toDenseMatrix();
  const Matrix core = prm.theta * (r * Eigen::MatrixXd(prm.P) * r.transpose());
  const Matrix core_sym = 0.5 * (core + core.transpose());
  const EigPair ce = sym_eig_topk(core_sym, static_cast<Index>(K), true);
  for (Index k = 0; k < ce.values.size(); ++k)
    if (std::abs(ce.values(k)) <= 1e-12 * std::abs(ce.values(0)))
      throw InvalidArgument("generate_dcmm: Pi P Pi^T is not of rank K");
  Matrix v = Matrix(q) * ce.vectors.mat();
  fix_column_signs(v);

  Matrix x(static_cast<Index>(d), static_cast<Index>(d));
  if (prm.expected_only) {
    x = mean;
    if (!prm.self_loops) x.diagonal().setZero();
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      Engine eng = make_stream(seed, "gen", j);
      for (std::size_t i = 0; i <= j; ++i) {
        const double u = unif(eng);
        const double a = u < mean(Index(i), Index(j)) ? 1.0 : 0.0;
        x(Index(i), Index(j)) = a;
        x(Index(j), Index(i)) = a;
      }
      if (!prm.self_loops) x(Index(j), Index(j)) = 0.0;
    }
  }

  Dataset ds = dataset_from_square(ModelKind::DCMM, x, prm.m);
  ds.dims.K = K;

  // Node labels: index of the distinct membership profile, by first appearance.
  std::vector<int> labels(d, 0);
  std::vector<Eigen::RowVectorXd> profiles;
  for (std::size_t i = 0; i < d; ++i) {
    const Eigen::RowVectorXd row = prm.Pi.row(Index(i));
    int id = -1;
    for (std::size_t u = 0; u < profiles.size(); ++u)
      if ((profiles[u] - row).cwiseAbs().maxCoeff() == 0.0) id = static_cast<int>(u);
    if (id < 0) {
      profiles.push_back(row);
      id = static_cast<int>(profiles.size() - 1);
    }
    labels[i] = id;
  }

  GroundTruth t;
  t.V = OrthonormalBasis::adopt(std::move(v));
  t.Lambda = ce.values;
  t.labels = std::move(labels);
  t.Pi = prm.Pi;
  t.theta = prm.theta;
  ds.truth = std::move(t);
  ds.params = {{"d", double(d)}, {"K", double(K)}, {"m", double(prm.m)}, {"theta", prm.theta},
               {"self_loops", prm.self_loops ? 1.0 : 0.0},
               {"expected_only", prm.expected_only ? 1.0 : 0.0}};
  return ds;
}

Dataset generate_gmm(const GmmParams& prm, std::uint64_t seed,
                     std::optional<std::uint64_t> truth_seed) {
  const std::size_t d = prm.d, n = prm.n, K = prm.K;
  require(K >= 1 && d >= K, "generate_gmm: need d >= K >= 1");
  require(n > d, "generate_gmm: need n > d");
  require(prm.m >= 1 && prm.m <= n, "generate_gmm: invalid number of splits");
  require(prm.noise_sd >= 0.0, "generate_gmm: noise sd must be nonnegative");
  const double delta0sq = prm.delta0sq < 0.0 ? std::pow(double(n), 2.0 / 3.0) : prm.delta0sq;
  require(delta0sq > 0.0, "generate_gmm: Delta0^2 must be positive");
  const double mean_sd = std::sqrt(delta0sq / (2.0 * double(n)));
  const std::uint64_t tseed = truth_seed.value_or(seed);

  // Cluster sizes: contiguous near-equal blocks of columns.
  const auto coff = partition_offsets(d, K);
  std::vector<int> labels(d, 0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = coff[k]; j < coff[k + 1]; ++j) labels[j] = static_cast<int>(k);
  Matrix f = Matrix::Zero(Index(d), Index(K));
  for (std::size_t j = 0; j < d; ++j) f(Index(j), labels[j]) = 1.0;

  Dataset ds;
  ds.model = ModelKind::GMM;
  ds.dims = Dims{d, n, prm.m, K};
  Matrix gram = Matrix::Zero(Index(K), Index(K));  // Theta^T Theta
  const auto off = partition_offsets(n, prm.m);
  for (std::size_t s = 0; s < prm.m; ++s) {
    const std::size_t rows = off[s + 1] - off[s];
    Matrix means{static_cast<Index>(rows), static_cast<Index>(K)};
    Matrix x{static_cast<Index>(rows), static_cast<Index>(d)};
    for (std::size_t r = 0; r < rows; ++r) {
      Engine teng = make_stream(tseed, "theta", off[s] + r);
      fill_normal(teng, means.row(Index(r)).data(), K);
      Engine eng = make_stream(seed, "gen", off[s] + r);
      fill_normal(eng, x.row(Index(r)).data(), d);
    }
    means *= mean_sd;
    gram += means.transpose() * means;
    x *= prm.noise_sd;
    x += matmul_nt(means, f);
    ds.splits.push_back(SplitOperator::sample_rows(ModelKind::GMM, std::move(x), off[s], n));
  }

  // M = F Theta^T Theta F^T = Ft (D^{1/2} G D^{1/2}) Ft^T with Ft = F D^{-1/2}.
  Vector dsqrt{static_cast<Index>(K)};
  for (std::size_t k = 0; k < K; ++k) dsqrt(Index(k)) = std::sqrt(double(coff[k + 1] - coff[k]));
  const Matrix core = dsqrt.asDiagonal() * gram * dsqrt.asDiagonal();
  const EigPair ce = sym_eig_topk(0.5 * (core + core.transpose()), Index(K), true);
  Matrix ft = f;
  for (std::size_t k = 0; k < K; ++k) ft.col(Index(k)) /= dsqrt(Index(k));
  Matrix v = ft * ce.vectors.mat();
  fix_column_signs(v);

  GroundTruth t;
  t.V = OrthonormalBasis::adopt(std::move(v));
  t.Lambda = ce.values;
  t.labels = std::move(labels);
  ds.truth = std::move(t);
  ds.params = {{"d", double(d)}, {"n", double(n)}, {"K", double(K)}, {"m", double(prm.m)},
               {"delta0sq", delta0sq}, {"noise_var", prm.noise_sd * prm.noise_sd}};
  return ds;
}

Dataset generate_incomplete(const IncompleteParams& prm, std::uint64_t seed,
                            std::optional<std::uint64_t> truth_seed) {
  const std::size_t d = prm.d, K = prm.K;
  require(K >= 1 && d >= K, "generate_incomplete: need d >= K >= 1");
  require(prm.theta > 0.0 && prm.theta <= 1.0, "generate_incomplete: theta must lie in (0,1]");
  const double sigma = prm.sigma < 0.0 ? 8.0 / double(d) : prm.sigma;
  require(prm.m >= 1 && prm.m <= d, "generate_incomplete: invalid number of splits");
  check_lambda(prm.lambda, K);

  Matrix v = random_orthonormal(d, K, truth_seed.value_or(seed));
  const Matrix mean = v * prm.lambda.asDiagonal() * v.transpose();
  const double cut = 4.0 * sigma * std::sqrt(std::log(double(d)));

  Matrix x = Matrix::Zero(Index(d), Index(d));
  std::vector<std::uint8_t> mask(d * d, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    Engine eng = make_stream(seed, "gen", j);
    for (std::size_t i = 0; i <= j; ++i) {
      const double u = unif(eng);
      double eps = sigma * nd(eng);
      if (std::abs(eps) > cut) eps = 0.0;
      if (u < prm.theta) {
        const double val = 0.5 * (mean(Index(i), Index(j)) + mean(Index(j), Index(i))) + eps;
        x(Index(i), Index(j)) = val;
        x(Index(j), Index(i)) = val;
        mask[i * d + j] = 1;
        mask[j * d + i] = 1;
      }
    }
  }

  Dataset ds = dataset_from_square(ModelKind::IncompleteMatrix, x, prm.m, mask);
  ds.dims.K = K;
  GroundTruth t;
  t.V = OrthonormalBasis::adopt(std::move(v));
  t.Lambda = prm.lambda;
  t.sigma2 = sigma * sigma;
  t.theta = prm.theta;
  ds.truth = std::move(t);
  ds.params = {{"d", double(d)}, {"K", double(K)}, {"m", double(prm.m)}, {"theta", prm.theta},
               {"sigma", sigma}};
  for (Index k = 0; k < prm.lambda.size(); ++k)
    ds.params["lambda" + std::to_string(k + 1)] = prm.lambda(k);
  return ds;
}

// ---------------------------------------------------------------------------
// Step 0 and rank thresholds

Step0Result step0(Dataset& ds, const Step0Options& opt) {
  require(!ds.splits.empty(), "step0: dataset has no splits");
  const std::size_t d = ds.dims.d;
  Step0Result res;
  res.done = true;
  switch (ds.model) {
    case ModelKind::SpikedCov: {
      std::vector<Index> idx;
      if (!opt.index_set.empty()) {
        for (std::size_t c : opt.index_set) {
          require(c < d, "step0: index set entry out of range");
          idx.push_back(static_cast<Index>(c));
        }
      } else {
        require(opt.kprime >= 1, "step0: K' must be positive");
        require(opt.kprime <= d, "step0: K' exceeds d");
        for (std::size_t c = 0; c < opt.kprime; ++c) idx.push_back(static_cast<Index>(c));
      }
      if (ds.dims.K > 0) require(idx.size() >= ds.dims.K + 1, "step0: K' must be at least K + 1");
      const Index kp = static_cast<Index>(idx.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kp, kp);
      for (const auto& sp : ds.splits) {
        const Eigen::MatrixXd sub = sp.data()(Eigen::all, idx);
        cov.noalias() += sub.transpose() * sub;
      }
      cov /= static_cast<double>(ds.dims.n);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
      res.sigma2_hat = es.eigenvalues()(0);
      res.correction = res.sigma2_hat;
      for (auto& sp : ds.splits)
        sp.set_identity_share(res.sigma2_hat * double(sp.size()) / double(ds.dims.n));
      break;
    }
    case ModelKind::GMM: {
      const auto it = ds.params.find("noise_var");
      const double tau2 = it == ds.params.end() ? 1.0 : it->second;
      res.correction = tau2 * double(ds.dims.n);
      for (auto& sp : ds.splits) sp.set_identity_share(tau2 * double(sp.size()));
      break;
    }
    case ModelKind::IncompleteMatrix: {
      std::size_t count = 0;
      for (const auto& sp : ds.splits) {
        for (std::size_t jl = 0; jl < sp.size(); ++jl) {
          const std::size_t j = sp.begin() + jl;
          for (std::size_t i = 0; i <= j; ++i) count += sp.observed(i, jl) ? 1 : 0;
        }
      }
      if (count == 0) throw DegenerateError("step0: no observed entries");
      res.observed_pairs = count;
      res.theta_hat = 2.0 * double(count) / (double(d) * double(d + 1));
      for (auto& sp : ds.splits) sp.set_scale(1.0 / res.theta_hat);
      break;
    }
    case ModelKind::DCMM:
      break;
  }
  ds.prep = res;
  return res;
}

Mu0Stats mu0_stats(const Dataset& ds, std::size_t p) {
  Mu0Stats st;
  st.d = ds.dims.d;
  st.n = ds.dims.n;
  st.p = p;
  if (ds.model == ModelKind::DCMM) {
    double sum = 0.0;
    for (const auto& sp : ds.splits) {
      for (std::size_t jl = 0; jl < sp.size(); ++jl) {
        const std::size_t j = sp.begin() + jl;
        for (std::size_t i = 0; i <= j; ++i) sum += sp.data()(Index(i), Index(jl));
      }
    }
    st.theta_hat = sum / (double(st.d) * double(st.d));
  } else if (ds.model == ModelKind::IncompleteMatrix) {
    require(ds.prep.done, "mu0_stats: run step0 first");
    double sq = 0.0;
    for (const auto& sp : ds.splits) {
      for (std::size_t jl = 0; jl < sp.size(); ++jl) {
        const std::size_t j = sp.begin() + jl;
        for (std::size_t i = 0; i <= j; ++i) {
          if (!sp.observed(i, jl)) continue;
          const double v = sp.data()(Index(i), Index(jl));
          sq += v * v;
        }
      }
    }
    st.theta_hat = ds.prep.theta_hat;
    st.sigma0_hat = std::sqrt(sq / double(ds.prep.observed_pairs));
  }
  return st;
}

double mu0_default(ModelKind kind, const Mu0Stats& st) {
  require(st.d >= 2 && st.p >= 1, "mu0_default: need d >= 2 and p >= 1");
  const double d = double(st.d), p = double(st.p), n = double(st.n);
  const double logd = std::log(d);
  switch (kind) {
    case ModelKind::SpikedCov:
      require(st.n >= 1, "mu0_default: sample size required");
      return std::pow(d / std::sqrt(n * p) * logd, 0.75) / 12.0;
    case ModelKind::DCMM:
      if (!st.theta_hat) throw InvalidArgument("mu0_default: average degree statistic required");
      if (!(*st.theta_hat > 0.0)) throw InvalidArgument("mu0_default: average degree is zero");
      return std::sqrt(*st.theta_hat / p) * d * logd / 12.0;
    case ModelKind::GMM:
      require(st.n >= 1, "mu0_default: sample size required");
      return d * logd * logd * std::sqrt(n / p) / 12.0;
    case ModelKind::IncompleteMatrix:
      if (!st.theta_hat || !st.sigma0_hat)
        throw InvalidArgument("mu0_default: observation rate and scale statistics required");
      if (!(*st.theta_hat > 0.0)) throw InvalidArgument("mu0_default: observation rate is zero");
      return d * *st.sigma0_hat * logd / std::sqrt(p * *st.theta_hat) / 12.0;
  }
  return 0.0;
}

Matrix dense_mhat(const Dataset& ds) {
  require(!ds.splits.empty(), "dense_mhat: dataset has no splits");
  const auto d = static_cast<Index>(ds.dims.d);
  Matrix out = Matrix::Zero(d, d);
  for (const auto& sp : ds.splits) out += sp.materialize(false);
  out.diagonal().array() -= ds.correction();
  return out;
}

}  // namespace fadi
