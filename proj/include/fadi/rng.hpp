#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fadi {

using Engine = std::mt19937_64;

// Substream key for (seed, purpose label, index). Streams with distinct keys are
// independent, and any stream can be rebuilt from its key alone.
std::uint64_t derive_key(std::uint64_t seed, std::string_view label, std::uint64_t index);

Engine make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index);

void fill_normal(Engine& eng, double* out, std::size_t n);

}  // namespace fadi
