#include "fadi/rng.hpp"

namespace fadi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_key(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(label));
  return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Engine make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return Engine(derive_key(seed, label, index));
}

void fill_normal(Engine& eng, double* out, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = nd(eng);
}

}  // namespace fadi
