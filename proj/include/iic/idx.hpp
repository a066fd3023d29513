#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"

namespace iic::harness {

namespace detail {

inline std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path + "'", 0);
  }
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be_u32(const std::vector<unsigned char>& bytes,
                                 std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError("'" + path + "' truncated in header: expected 4 bytes",
                      offset);
  }
  return (std::uint32_t(bytes[offset]) << 24) |
         (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) |
         std::uint32_t(bytes[offset + 3]);
}

}  // namespace detail

/// Reads an MNIST-style IDX image/label pair into a regression dataset:
/// pixels scaled to [0, 1], the digit value scaled to [0, 1] as a scalar
/// target (m = 1). Big-endian magic numbers 0x00000803 / 0x00000801.
inline RegressionDataset load_mnist_idx(const std::string& images_path,
                                        const std::string& labels_path) {
  const auto img = detail::read_all_bytes(images_path);
  const auto lab = detail::read_all_bytes(labels_path);

  const std::uint32_t img_magic = detail::read_be_u32(img, 0, images_path);
  if (img_magic != 0x00000803u) {
    throw FormatError("'" + images_path + "' has image magic " +
                          std::to_string(img_magic) + ", expected 2051",
                      0);
  }
  const std::uint32_t count = detail::read_be_u32(img, 4, images_path);
  const std::uint32_t rows = detail::read_be_u32(img, 8, images_path);
  const std::uint32_t cols = detail::read_be_u32(img, 12, images_path);
  const std::size_t pixels = std::size_t(rows) * cols;
  const std::size_t img_expected = 16 + std::size_t(count) * pixels;
  if (img.size() != img_expected) {
    throw FormatError("'" + images_path + "' payload: expected " +
                          std::to_string(img_expected) + " bytes, got " +
                          std::to_string(img.size()),
                      img.size());
  }

  const std::uint32_t lab_magic = detail::read_be_u32(lab, 0, labels_path);
  if (lab_magic != 0x00000801u) {
    throw FormatError("'" + labels_path + "' has label magic " +
                          std::to_string(lab_magic) + ", expected 2049",
                      0);
  }
  const std::uint32_t lab_count = detail::read_be_u32(lab, 4, labels_path);
  if (lab_count != count) {
    throw FormatError("label count " + std::to_string(lab_count) +
                          " does not match image count " +
                          std::to_string(count),
                      4);
  }
  const std::size_t lab_expected = 8 + std::size_t(count);
  if (lab.size() != lab_expected) {
    throw FormatError("'" + labels_path + "' payload: expected " +
                          std::to_string(lab_expected) + " bytes, got " +
                          std::to_string(lab.size()),
                      lab.size());
  }

  Matrix inputs(count, pixels);
  Matrix targets(count, 1);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::size_t px = 0; px < pixels; ++px) {
      inputs(i, px) = img[16 + std::size_t(i) * pixels + px] / 255.0;
    }
    targets(i, 0) = lab[8 + i] / 10.0;
  }
  return RegressionDataset(std::move(inputs), std::move(targets));
}

}  // namespace iic::harness
