#pragma once

// NPY v1.0 / v2.0 reader and writer for C-ordered little-endian numeric arrays.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "alphanoise/errors.hpp"
#include "alphanoise/idx.hpp"

namespace alphanoise {

enum class NpyDtype { u8, i32, i64, f32, f64 };

inline std::string_view descr(NpyDtype t) {
  switch (t) {
    case NpyDtype::u8: return "|u1";
    case NpyDtype::i32: return "<i4";
    case NpyDtype::i64: return "<i8";
    case NpyDtype::f32: return "<f4";
    case NpyDtype::f64: return "<f8";
  }
  return "";
}

inline std::size_t item_size(NpyDtype t) {
  switch (t) {
    case NpyDtype::u8: return 1;
    case NpyDtype::i32:
    case NpyDtype::f32: return 4;
    case NpyDtype::i64:
    case NpyDtype::f64: return 8;
  }
  return 0;
}

/// Decoded array. u8 payloads are held scaled by 1/255; everything else as stored.
struct NpyArray {
  std::vector<std::size_t> shape;
  NpyDtype dtype = NpyDtype::f64;
  std::vector<double> values;

  std::size_t size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
};

namespace detail {

inline constexpr char kNpyMagic[] = "\x93NUMPY";

inline std::string npy_value_of(const std::string& header, const std::string& key, const std::string& path) {
  const std::string quoted = "'" + key + "'";
  auto pos = header.find(quoted);
  if (pos == std::string::npos) throw FormatError(path + ": NPY header lacks key " + quoted);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string::npos) throw FormatError(path + ": NPY header key " + quoted + " has no value");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw FormatError(path + ": NPY header truncated");
  std::size_t end = pos;
  if (header[pos] == '\'' || header[pos] == '"') {
    end = header.find(header[pos], pos + 1);
    if (end == std::string::npos) throw FormatError(path + ": unterminated string in NPY header");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) throw FormatError(path + ": unterminated shape tuple in NPY header");
    return header.substr(pos, end - pos + 1);
  }
  end = header.find_first_of(",}", pos);
  return header.substr(pos, end - pos);
}

inline NpyDtype parse_descr(const std::string& d, const std::string& path) {
  if (d == "|u1" || d == "<u1" || d == "u1") return NpyDtype::u8;
  if (d == "<i4") return NpyDtype::i32;
  if (d == "<i8") return NpyDtype::i64;
  if (d == "<f4") return NpyDtype::f32;
  if (d == "<f8") return NpyDtype::f64;
  throw FormatError(path + ": unsupported NPY dtype '" + d + "'");
}

inline std::vector<std::size_t> parse_shape(const std::string& tuple, const std::string& path) {
  std::vector<std::size_t> shape;
  std::size_t i = 1;
  while (i < tuple.size()) {
    while (i < tuple.size() && (tuple[i] == ' ' || tuple[i] == ',')) ++i;
    if (i >= tuple.size() || tuple[i] == ')') break;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tuple.substr(i), &used);
    } catch (const std::exception&) {
      throw FormatError(path + ": bad NPY shape " + tuple);
    }
    shape.push_back(static_cast<std::size_t>(v));
    i += used;
  }
  return shape;
}

inline std::uint64_t load_le_bits(const unsigned char* p, std::size_t width) {
  std::uint64_t bits = 0;
  for (std::size_t b = 0; b < width; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return bits;
}

inline void store_le_bits(std::string& out, std::uint64_t bits, std::size_t width) {
  for (std::size_t b = 0; b < width; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

}  // namespace detail

inline NpyArray decode_npy(const std::vector<unsigned char>& bytes, const std::string& path = "<memory>") {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), detail::kNpyMagic, 6) != 0) {
    throw FormatError(path + ": not an NPY file (bad magic)");
  }
  const int major = bytes[6];
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw FormatError(path + ": truncated NPY header");
    header_len = bytes[8] | (std::size_t{bytes[9]} << 8) | (std::size_t{bytes[10]} << 16) |
                 (std::size_t{bytes[11]} << 24);
    offset = 12;
  } else {
    throw FormatError(path + ": unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len) throw FormatError(path + ": truncated NPY header");
  const std::string header(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                           bytes.begin() + static_cast<std::ptrdiff_t>(offset + header_len));
  if (header.find('{') == std::string::npos || header.find('}') == std::string::npos) {
    throw FormatError(path + ": NPY header is not a dict");
  }

  NpyArray arr;
  arr.dtype = detail::parse_descr(detail::npy_value_of(header, "descr", path), path);
  const std::string fortran = detail::npy_value_of(header, "fortran_order", path);
  if (fortran.find("True") != std::string::npos) throw FormatError(path + ": Fortran-ordered NPY arrays are not supported");
  if (fortran.find("False") == std::string::npos) throw FormatError(path + ": bad fortran_order value '" + fortran + "'");
  arr.shape = detail::parse_shape(detail::npy_value_of(header, "shape", path), path);

  const std::size_t n = arr.size();
  const std::size_t isz = item_size(arr.dtype);
  const std::size_t data_at = offset + header_len;
  if (bytes.size() - data_at < n * isz) throw FormatError(path + ": truncated NPY payload");
  arr.values.resize(n);
  const unsigned char* p = bytes.data() + data_at;
  for (std::size_t i = 0; i < n; ++i, p += isz) {
    switch (arr.dtype) {
      case NpyDtype::u8: arr.values[i] = *p / 255.0; break;
      case NpyDtype::i32:
        arr.values[i] = std::bit_cast<std::int32_t>(static_cast<std::uint32_t>(detail::load_le_bits(p, 4)));
        break;
      case NpyDtype::i64:
        arr.values[i] = static_cast<double>(std::bit_cast<std::int64_t>(detail::load_le_bits(p, 8)));
        break;
      case NpyDtype::f32:
        arr.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::load_le_bits(p, 4)));
        break;
      case NpyDtype::f64: arr.values[i] = std::bit_cast<double>(detail::load_le_bits(p, 8)); break;
    }
  }
  return arr;
}

inline NpyArray load_npy(const std::string& path) { return decode_npy(detail::read_all_bytes(path), path); }

/// Serializes with the header layout numpy itself writes (v1.0, 64-byte aligned).
inline std::string encode_npy(const NpyArray& arr) {
  if (arr.values.size() != arr.size()) throw ParameterError("NPY shape does not match value count");
  std::string dict = "{'descr': '" + std::string(descr(arr.dtype)) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < arr.shape.size(); ++i) {
    if (i) dict += ", ";
    dict += std::to_string(arr.shape[i]);
  }
  if (arr.shape.size() == 1) dict += ",";
  dict += "), }";

  std::size_t prefix = 10;
  std::size_t total = prefix + dict.size() + 1;
  int major = 1;
  if (((total + 63) / 64) * 64 - prefix > 0xffff) {
    major = 2;
    prefix = 12;
    total = prefix + dict.size() + 1;
  }
  const std::size_t padded = ((total + 63) / 64) * 64;
  dict.append(padded - total, ' ');
  dict.push_back('\n');

  std::string out(detail::kNpyMagic, 6);
  out.push_back(static_cast<char>(major));
  out.push_back(0);
  const std::size_t hlen = dict.size();
  out.push_back(static_cast<char>(hlen & 0xff));
  out.push_back(static_cast<char>((hlen >> 8) & 0xff));
  if (major == 2) {
    out.push_back(static_cast<char>((hlen >> 16) & 0xff));
    out.push_back(static_cast<char>((hlen >> 24) & 0xff));
  }
  out += dict;
  out.reserve(out.size() + arr.values.size() * item_size(arr.dtype));
  for (double v : arr.values) {
    switch (arr.dtype) {
      case NpyDtype::u8: {
        const double b = std::round(v * 255.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(b < 0 ? 0 : (b > 255 ? 255 : b))));
        break;
      }
      case NpyDtype::i32:
        detail::store_le_bits(out, std::bit_cast<std::uint32_t>(static_cast<std::int32_t>(v)), 4);
        break;
      case NpyDtype::i64:
        detail::store_le_bits(out, std::bit_cast<std::uint64_t>(static_cast<std::int64_t>(v)), 8);
        break;
      case NpyDtype::f32: detail::store_le_bits(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4); break;
      case NpyDtype::f64: detail::store_le_bits(out, std::bit_cast<std::uint64_t>(v), 8); break;
    }
  }
  return out;
}

inline void save_npy(const std::string& path, const NpyArray& arr) {
  const std::string bytes = encode_npy(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw IoError("cannot write " + path);
  }
}

}  // namespace alphanoise
