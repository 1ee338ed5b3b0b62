#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "pcseg/descriptors.hpp"

namespace pcseg {

/// Dense row-major float matrix as stored on disk: "RM3DMAT1", u64 rows,
/// u64 cols, then rows * cols little-endian f32.
struct FloatMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

void write_matrix(const FloatMatrix& m, const std::filesystem::path& path);
FloatMatrix read_matrix(const std::filesystem::path& path);

FloatMatrix to_float_matrix(const DescriptorMatrix& d);

/// Learned per-point embeddings as descriptors of kind External, unnormalized.
/// Throws Shape when the row count differs from expected_rows.
DescriptorMatrix load_external_embeddings(const std::filesystem::path& path, std::size_t expected_rows);

}  // namespace pcseg
