#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "alphanoise/errors.hpp"

namespace alphanoise {

enum class SampleFormat { text, f64le };

/// Writes little-endian IEEE-754 doubles, no header.
inline void write_f64le(const std::string& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<double> read_f64le(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> values;
  unsigned char bytes[8];
  while (in.read(reinterpret_cast<char*>(bytes), 8)) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    values.push_back(std::bit_cast<double>(bits));
  }
  if (in.gcount() != 0) throw FormatError(path + ": length is not a multiple of 8 bytes");
  return values;
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One value per line, 17 significant digits.
inline void write_text(const std::string& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (double v : values) out << format_g17(v) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<double> read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    try {
      values.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw FormatError(path + ": not a number: " + line);
    }
  }
  return values;
}

inline void write_samples(const std::string& path, std::span<const double> values, SampleFormat format) {
  if (format == SampleFormat::f64le) {
    write_f64le(path, values);
  } else {
    write_text(path, values);
  }
}

}  // namespace alphanoise
