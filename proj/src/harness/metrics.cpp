#include "fadi/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "fadi/linalg.hpp"
#include "fadi/rng.hpp"

namespace fadi {

namespace {

double sq_dist(const Matrix& a, Index i, const Matrix& b, Index k) {
  return (a.row(i) - b.row(k)).squaredNorm();
}

Matrix seed_centers(const Matrix& x, std::size_t k, Engine& eng, bool plusplus) {
  const Index n = x.rows();
  Matrix c(static_cast<Index>(k), x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  if (!plusplus) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> u(j, idx.size() - 1);
      std::swap(idx[j], idx[u(eng)]);
      c.row(Index(j)) = x.row(idx[j]);
    }
    return c;
  }
  c.row(0) = x.row(pick(eng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      d2[std::size_t(i)] = std::min(d2[std::size_t(i)], sq_dist(x, i, c, Index(j - 1)));
      total += d2[std::size_t(i)];
    }
    Index chosen = n - 1;
    if (total > 0.0) {
      double r = unif(eng) * total;
      for (Index i = 0; i < n; ++i) {
        r -= d2[std::size_t(i)];
        if (r < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(eng);
    }
    c.row(Index(j)) = x.row(chosen);
  }
  return c;
}

KMeansResult lloyd(const Matrix& x, Matrix centers, std::size_t max_iter) {
  const Index n = x.rows();
  const Index k = centers.rows();
  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x, i, centers, 0);
      for (Index c = 1; c < k; ++c) {
        const double dd = sq_dist(x, i, centers, c);
        if (dd < bd) {
          bd = dd;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[std::size_t(i)] != best) {
        r.labels[std::size_t(i)] = best;
        changed = true;
      }
    }
    r.iterations = it + 1;
    if (!changed && it > 0) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(r.labels[std::size_t(i)]) += x.row(i);
      ++counts[std::size_t(r.labels[std::size_t(i)])];
    }
    for (Index c = 0; c < k; ++c)
      if (counts[std::size_t(c)] > 0) centers.row(c) = sums.row(c) / double(counts[std::size_t(c)]);
    if (!changed) break;
  }
  r.inertia = 0.0;
  for (Index i = 0; i < n; ++i) r.inertia += sq_dist(x, i, centers, r.labels[std::size_t(i)]);
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans_cluster(const Matrix& points, std::size_t k, std::uint64_t seed,
                            const KMeansOptions& opt) {
  require(k >= 1, "kmeans_cluster: k must be at least 1");
  require(k <= static_cast<std::size_t>(points.rows()), "kmeans_cluster: k exceeds the number of points");
  require(opt.restarts >= 1 && opt.max_iter >= 1, "kmeans_cluster: restarts and iterations must be positive");
  require_finite(points, "kmeans input");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    Engine eng = make_stream(seed, "kmeans", r);
    KMeansResult cur = lloyd(points, seed_centers(points, k, eng, opt.plusplus), opt.max_iter);
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  return best;
}

double misclustering_rate(const std::vector<int>& labels, const std::vector<int>& truth,
                          bool allow_greedy) {
  require(labels.size() == truth.size(), "misclustering_rate: length mismatch");
  if (labels.empty()) return 0.0;
  for (int v : labels) require(v >= 0, "misclustering_rate: negative label");
  for (int v : truth) require(v >= 0, "misclustering_rate: negative label");
  const int ka = *std::max_element(labels.begin(), labels.end()) + 1;
  const int kb = *std::max_element(truth.begin(), truth.end()) + 1;
  const int k = std::max(ka, kb);
  // confusion(a, b): items labelled a that truly belong to b
  std::vector<std::size_t> conf(std::size_t(k) * std::size_t(k), 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    ++conf[std::size_t(labels[i]) * std::size_t(k) + std::size_t(truth[i])];
  std::size_t best_agree = 0;
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::size_t agree = 0;
      for (int a = 0; a < k; ++a) agree += conf[std::size_t(a) * std::size_t(k) + std::size_t(perm[std::size_t(a)])];
      best_agree = std::max(best_agree, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    if (!allow_greedy)
      throw InvalidArgument("misclustering_rate: more than 8 clusters requires approximate matching");
    std::vector<bool> used_a(std::size_t(k), false), used_b(std::size_t(k), false);
    for (int step = 0; step < k; ++step) {
      std::size_t top = 0;
      int ba = -1, bb = -1;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          if (!used_a[std::size_t(a)] && !used_b[std::size_t(b)] &&
              (ba < 0 || conf[std::size_t(a) * std::size_t(k) + std::size_t(b)] > top)) {
            top = conf[std::size_t(a) * std::size_t(k) + std::size_t(b)];
            ba = a;
            bb = b;
          }
      used_a[std::size_t(ba)] = used_b[std::size_t(bb)] = true;
      best_agree += top;
    }
  }
  return 1.0 - double(best_agree) / double(labels.size());
}

double are_metric(const Matrix& cov_fadi, const Matrix& cov_pca, std::size_t K) {
  const Index k = static_cast<Index>(K);
  require(K >= 1, "are_metric: K must be positive");
  require(cov_fadi.rows() == k && cov_fadi.cols() == k && cov_pca.rows() == k && cov_pca.cols() == k,
          "are_metric: covariances must be K x K");
  auto logdet = [](const Matrix& s, const char* what) {
    if (max_asymmetry(s) > 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))
      throw DegenerateError(std::string("are_metric: ") + what + " covariance is not symmetric");
    const Eigen::MatrixXd dense = s;
    Eigen::LLT<Eigen::MatrixXd> llt(dense);
    if (llt.info() != Eigen::Success)
      throw DegenerateError(std::string("are_metric: ") + what + " covariance is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  return std::exp((logdet(cov_fadi, "first") - logdet(cov_pca, "second")) / double(K));
}

Matrix sample_covariance(const Matrix& samples) {
  require(samples.rows() >= 2, "sample_covariance: need at least two samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Matrix c = samples.rowwise() - mean;
  Matrix cov = c.transpose() * c / double(samples.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace fadi
