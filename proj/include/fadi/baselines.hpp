#pragma once

#include <cstdint>
#include <vector>

#include "fadi/aggregate.hpp"
#include "fadi/models.hpp"

namespace fadi {

// Top-K eigenvectors (by magnitude) of the densely assembled target estimate.
PCEstimate traditional_pca(const Dataset& ds, std::size_t K,
                           std::size_t dense_limit = kDenseLimit);

// One Gaussian sketch with the key of sketch 0 under master_seed.
PCEstimate fast_pca_single(const Dataset& ds, std::size_t K, std::size_t p,
                           std::uint64_t master_seed);

// Local PCA of each split's sample covariance, projectors averaged, top-K of the
// average. Per-split wall-clock seconds are written to split_seconds when given.
PCEstimate fan_distributed_pca(const Dataset& ds, std::size_t K,
                               std::vector<double>* split_seconds = nullptr,
                               std::size_t dense_limit = kDenseLimit);

}  // namespace fadi
