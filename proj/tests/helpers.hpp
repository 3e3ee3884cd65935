#pragma once

#include <random>

#include "fadi/common.hpp"
#include "fadi/linalg.hpp"

namespace fadi::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = nd(eng);
  return a;
}

inline Matrix random_orthonormal(Index d, Index k, std::uint64_t seed) {
  return orthonormalize(random_matrix(d, k, seed));
}

inline Matrix random_symmetric(Index d, std::uint64_t seed) {
  Matrix a = random_matrix(d, d, seed);
  return 0.5 * (a + a.transpose());
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1e-300, b.norm());
  return (a - b).norm() / scale;
}

}  // namespace fadi::test
