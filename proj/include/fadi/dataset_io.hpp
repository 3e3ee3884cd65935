#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fadi/models.hpp"

namespace fadi {

// Binary split file: 64-byte header followed by a row-major double payload and,
// for masked blocks, one byte per entry.
//
//   offset  size  field
//   0       4     magic "FADI"
//   4       4     format version (1)
//   8       4     model tag (0 spiked, 1 dcmm, 2 gmm, 3 incomplete, 255 artifact)
//   12      4     flags (bit 0: mask present)
//   16      8     rows
//   24      8     cols
//   32      8     d
//   40      8     n
//   48      8     index range begin
//   56      8     index range end
struct BinaryHeader {
  std::uint32_t version = 1;
  std::uint32_t model_tag = 0;
  std::uint32_t flags = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::uint64_t d = 0;
  std::uint64_t n = 0;
  std::uint64_t index_begin = 0;
  std::uint64_t index_end = 0;
};

inline constexpr std::uint32_t kArtifactTag = 255;

void write_binary_matrix(const std::filesystem::path& path, const BinaryHeader& header,
                         const Matrix& payload, const std::vector<std::uint8_t>& mask = {});

struct BinaryMatrix {
  BinaryHeader header;
  Matrix payload;
  std::vector<std::uint8_t> mask;
};

BinaryMatrix read_binary_matrix(const std::filesystem::path& path);

// One split_<s>.bin per split plus dataset.json (parameters, truth, file list).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Square matrix from CSV, split by columns. Empty cells or NA mark unobserved
// entries (incomplete-matrix model only).
Dataset import_csv_matrix(const std::filesystem::path& path, ModelKind kind, std::size_t m);

void write_csv_matrix(const std::filesystem::path& path, const Matrix& a);

}  // namespace fadi
