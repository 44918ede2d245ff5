#pragma once

#include <cstddef>
#include <filesystem>

#include "clref/nn.hpp"

namespace clref::harness {

struct IdxDataset {
  nn::Batch data;  // rows are images flattened row-major, pixels / 255
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

/// Reads an IDX image file (magic 0x00000803, u8 pixels) and its IDX label
/// file (magic 0x00000801). Throws FormatError with the byte offset on a bad
/// magic number, truncation, a count mismatch, or an empty set.
IdxDataset load_idx_dataset(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

}  // namespace clref::harness
