#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "alphanoise/dataset.hpp"
#include "alphanoise/errors.hpp"

namespace alphanoise {

namespace detail {

inline std::vector<std::string> split_cells(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == delimiter) {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  if (delimiter == ' ' || delimiter == '\t') {
    std::erase_if(cells, [](const std::string& s) { return s.empty(); });
  }
  return cells;
}

inline bool parse_real(std::string cell, double& out) {
  const auto b = cell.find_first_not_of(" \t");
  if (b == std::string::npos) return false;
  cell = cell.substr(b, cell.find_last_not_of(" \t") - b + 1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

}  // namespace detail

/// UCR-style series table: label first, then the series values.
///
/// Distinct original labels are sorted ascending and remapped to 0..K-1.
inline Dataset load_series_csv(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> features;
  std::vector<double> raw_labels;
  std::size_t width = 0;
  std::size_t row = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_cells(line, delimiter);
    if (cells.size() < 2) throw FormatError(path + ": row " + std::to_string(row) + " has no values");
    if (width == 0) width = cells.size() - 1;
    if (cells.size() - 1 != width) {
      throw FormatError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size() - 1) +
                        " values, expected " + std::to_string(width));
    }
    for (std::size_t col = 0; col < cells.size(); ++col) {
      double v = 0.0;
      if (!detail::parse_real(cells[col], v)) {
        throw FormatError(path + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                          ": not a number: '" + cells[col] + "'");
      }
      if (col == 0) {
        if (v != std::round(v)) {
          throw FormatError(path + ": row " + std::to_string(row) + ", column 1: label is not an integer");
        }
        raw_labels.push_back(v);
      } else {
        features.push_back(v);
      }
    }
  }
  if (raw_labels.empty()) throw FormatError(path + ": no data rows");

  std::vector<std::int64_t> distinct;
  for (double v : raw_labels) distinct.push_back(static_cast<std::int64_t>(v));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> labels;
  labels.reserve(raw_labels.size());
  for (double v : raw_labels) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), static_cast<std::int64_t>(v));
    labels.push_back(static_cast<int>(it - distinct.begin()));
  }
  const std::size_t k = distinct.size();
  return Dataset(std::move(features), {width, 1}, std::move(labels), Domain::series,
                 std::filesystem::path(path).stem().string(), k, std::move(distinct));
}

}  // namespace alphanoise
