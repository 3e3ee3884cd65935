#pragma once

#include <cstdint>
#include <vector>

#include "fadi/common.hpp"

namespace fadi {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 100;
  bool plusplus = true;  // false seeds with k distinct random rows
};

// Lloyd iterations on the rows of `points`; the lowest-inertia restart is kept.
KMeansResult kmeans_cluster(const Matrix& points, std::size_t k, std::uint64_t seed,
                            const KMeansOptions& opt = {});

// Smallest fraction of disagreements over all relabelings of `labels`.
// Exhaustive over permutations; more than 8 clusters needs allow_greedy.
double misclustering_rate(const std::vector<int>& labels, const std::vector<int>& truth,
                          bool allow_greedy = false);

// det(cov_fadi)^{1/K} / det(cov_pca)^{1/K}; both must be SPD.
double are_metric(const Matrix& cov_fadi, const Matrix& cov_pca, std::size_t K);

// Sample covariance (divisor count - 1) of the rows of `samples`.
Matrix sample_covariance(const Matrix& samples);

}  // namespace fadi
