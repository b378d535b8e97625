#pragma once

// IDX containers as used by MNIST: big-endian u32 magic (0x0000 08 <ndims>),
// ndims big-endian u32 dimensions, then unsigned bytes.

#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "alphanoise/dataset.hpp"
#include "alphanoise/errors.hpp"

namespace alphanoise {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                               const std::string& path, const char* field) {
  if (bytes.size() < offset + 4) throw FormatError(path + ": truncated before " + field);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

inline std::string hex32(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex;
  s.width(8);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace detail

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<unsigned char> pixels;
};

inline IdxImages read_idx_images(const std::string& path) {
  const auto bytes = detail::read_all_bytes(path);
  const auto magic = detail::read_be32(bytes, 0, path, "magic");
  if (magic != kIdxImagesMagic) {
    throw FormatError(path + ": unexpected magic " + detail::hex32(magic) + " in field 'magic' (expected " +
                      detail::hex32(kIdxImagesMagic) + ")");
  }
  IdxImages img;
  img.count = detail::read_be32(bytes, 4, path, "count");
  img.rows = detail::read_be32(bytes, 8, path, "rows");
  img.cols = detail::read_be32(bytes, 12, path, "cols");
  const std::size_t need = img.count * img.rows * img.cols;
  if (bytes.size() - 16 < need) {
    throw FormatError(path + ": truncated pixel data (field 'count' declares " + std::to_string(img.count) +
                      " images)");
  }
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return img;
}

inline std::vector<unsigned char> read_idx_labels(const std::string& path) {
  const auto bytes = detail::read_all_bytes(path);
  const auto magic = detail::read_be32(bytes, 0, path, "magic");
  if (magic != kIdxLabelsMagic) {
    throw FormatError(path + ": unexpected magic " + detail::hex32(magic) + " in field 'magic' (expected " +
                      detail::hex32(kIdxLabelsMagic) + ")");
  }
  const std::size_t count = detail::read_be32(bytes, 4, path, "count");
  if (bytes.size() - 8 < count) {
    throw FormatError(path + ": truncated label data (field 'count' declares " + std::to_string(count) +
                      " labels)");
  }
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

/// MNIST-style image/label pair; pixels scaled by 1/255, shape (rows, cols, 1).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = read_idx_images(images_path);
  const auto raw_labels = read_idx_labels(labels_path);
  if (raw_labels.size() != images.count) {
    throw FormatError("IDX count mismatch: field 'count' is " + std::to_string(images.count) + " in " +
                      images_path + " but " + std::to_string(raw_labels.size()) + " in " + labels_path);
  }
  std::vector<double> features(images.pixels.size());
  for (std::size_t i = 0; i < features.size(); ++i) features[i] = images.pixels[i] / 255.0;
  std::vector<int> labels(raw_labels.begin(), raw_labels.end());
  return Dataset(std::move(features), {images.rows, images.cols, 1}, std::move(labels), Domain::image,
                 images_path);
}

inline void write_idx_images(const std::string& path, const IdxImages& img) {
  std::string out;
  detail::put_be32(out, kIdxImagesMagic);
  detail::put_be32(out, static_cast<std::uint32_t>(img.count));
  detail::put_be32(out, static_cast<std::uint32_t>(img.rows));
  detail::put_be32(out, static_cast<std::uint32_t>(img.cols));
  out.append(img.pixels.begin(), img.pixels.end());
  std::ofstream f(path, std::ios::binary);
  if (!(f << out)) throw IoError("cannot write " + path);
}

inline void write_idx_labels(const std::string& path, const std::vector<unsigned char>& labels) {
  std::string out;
  detail::put_be32(out, kIdxLabelsMagic);
  detail::put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.append(labels.begin(), labels.end());
  std::ofstream f(path, std::ios::binary);
  if (!(f << out)) throw IoError("cannot write " + path);
}

}  // namespace alphanoise
