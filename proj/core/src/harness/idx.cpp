#include "clref/harness/idx.hpp"

#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "clref/error.hpp"

namespace clref::harness {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& what) {
  if (bytes.size() < offset + 4) throw FormatError(what + ": truncated header", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

IdxDataset load_idx_dataset(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  if (be32(images, 0, "images") != 0x00000803u) throw FormatError("images: bad magic number", 0);
  if (be32(labels, 0, "labels") != 0x00000801u) throw FormatError("labels: bad magic number", 0);

  const std::size_t count = be32(images, 4, "images");
  const std::size_t rows = be32(images, 8, "images");
  const std::size_t cols = be32(images, 12, "images");
  const std::size_t label_count = be32(labels, 4, "labels");
  if (count == 0) throw FormatError("images: empty image set", 4);
  if (label_count != count)
    throw FormatError("label count " + std::to_string(label_count) + " does not match image count " +
                          std::to_string(count),
                      4);
  if (rows == 0 || cols == 0) throw FormatError("images: zero image dimension", 8);

  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels) throw FormatError("images: truncated pixel data", images.size());
  if (labels.size() < 8 + count) throw FormatError("labels: truncated label data", labels.size());

  IdxDataset out;
  out.image_rows = rows;
  out.image_cols = cols;
  out.data.inputs = Matrix(count, pixels);
  out.data.labels.resize(count);
  for (std::size_t k = 0; k < count * pixels; ++k) out.data.inputs.data[k] = images[16 + k] / 255.0;
  for (std::size_t k = 0; k < count; ++k) out.data.labels[k] = labels[8 + k];
  return out;
}

}  // namespace clref::harness
