#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "alphanoise/errors.hpp"
#include "alphanoise/rng.hpp"
#include "alphanoise/stable.hpp"

namespace alphanoise {

/// image: every feature lies in [0, 1] and noisy copies are clipped.
/// series: features are unbounded and never clipped.
enum class Domain { image, series };

inline const char* to_string(Domain d) { return d == Domain::image ? "image" : "series"; }

inline Domain parse_domain(const std::string& s) {
  if (s == "image") return Domain::image;
  if (s == "series") return Domain::series;
  throw ParameterError("unknown domain '" + s + "' (expected image or series)");
}

/// Labeled samples stored as a row-major (n_samples x n_features) matrix.
///
/// `label_values[id]` is the original label that class id was remapped from;
/// empty when ids are the original labels.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<double> features, std::vector<std::size_t> shape, std::vector<int> labels,
          Domain domain, std::string name = {}, std::size_t n_classes = 0,
          std::vector<std::int64_t> label_values = {})
      : features_(std::move(features)),
        shape_(std::move(shape)),
        labels_(std::move(labels)),
        domain_(domain),
        name_(std::move(name)),
        n_classes_(n_classes),
        label_values_(std::move(label_values)) {
    if (n_classes_ == 0) {
      int top = -1;
      for (int l : labels_) top = std::max(top, l);
      n_classes_ = static_cast<std::size_t>(top + 1);
    }
    validate();
  }

  std::size_t n_samples() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<std::int64_t>& label_values() const noexcept { return label_values_; }
  Domain domain() const noexcept { return domain_; }
  const std::string& name() const noexcept { return name_; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * n_features(), n_features());
  }

  /// Copy with a different name; everything else shared by value.
  Dataset renamed(std::string name) const {
    Dataset d = *this;
    d.name_ = std::move(name);
    return d;
  }

  bool operator==(const Dataset&) const = default;

 private:
  void validate() const {
    if (shape_.empty()) throw ParameterError("dataset shape must have at least one dimension");
    const std::size_t width = n_features();
    if (width == 0) throw ParameterError("dataset samples must have at least one feature");
    if (features_.size() != labels_.size() * width) {
      std::ostringstream msg;
      msg << "dataset has " << features_.size() << " feature values, expected " << labels_.size()
          << " samples x " << width << " features";
      throw ParameterError(msg.str());
    }
    for (int l : labels_) {
      if (l < 0 || static_cast<std::size_t>(l) >= n_classes_) {
        throw ParameterError("dataset label " + std::to_string(l) + " outside [0, n_classes)");
      }
    }
    if (!label_values_.empty() && label_values_.size() != n_classes_) {
      throw ParameterError("label map size differs from class count");
    }
    if (domain_ == Domain::image) {
      for (double v : features_) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("image-domain feature outside [0, 1]");
      }
    } else {
      for (double v : features_) {
        if (std::isnan(v)) throw ParameterError("series-domain feature is NaN");
      }
    }
  }

  std::vector<double> features_;
  std::vector<std::size_t> shape_{1};
  std::vector<int> labels_;
  Domain domain_ = Domain::series;
  std::string name_;
  std::size_t n_classes_ = 0;
  std::vector<std::int64_t> label_values_;
};

/// Rows of `data` at `indices`, in that order.
inline Dataset select_rows(const Dataset& data, std::span<const std::size_t> indices, std::string name = {}) {
  const std::size_t width = data.n_features();
  std::vector<double> features;
  features.reserve(indices.size() * width);
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.n_samples()) throw ParameterError("row index out of range");
    const auto r = data.row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(data.labels()[i]);
  }
  return Dataset(std::move(features), data.shape(), std::move(labels), data.domain(),
                 name.empty() ? data.name() : std::move(name), data.n_classes(), data.label_values());
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

/// Shuffled disjoint partition with floor(fraction * n) rows in the first part.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double fraction, RngStream& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("split fraction must lie in (0, 1)");
  const std::size_t n = data.n_samples();
  const auto first = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (first == 0 || first == n) throw ParameterError("split would leave one side empty");
  const auto idx = shuffled_indices(n, rng);
  const std::span<const std::size_t> all(idx);
  return {select_rows(data, all.first(first)), select_rows(data, all.subspan(first))};
}

/// Isotropic unit-variance Gaussian blobs, one per class, centers spaced
/// `class_separation` apart along a random direction.
inline Dataset synth_gaussians(std::size_t n_per_class, std::size_t n_classes, std::size_t n_features,
                               double class_separation, RngStream& rng) {
  if (n_per_class < 1 || n_classes < 1 || n_features < 1) {
    throw ParameterError("synth_gaussians counts must be at least 1");
  }
  if (!(class_separation >= 0.0)) throw ParameterError("class_separation must be non-negative");
  // Standard normal as a stable alpha = 2 draw scaled by 1/sqrt(2).
  const auto normal = [&rng] { return sample_standard(2.0, rng) / std::numbers::sqrt2; };
  std::vector<double> direction(n_features);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : direction) {
      v = normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : direction) v /= norm;

  std::vector<double> features;
  features.reserve(n_per_class * n_classes * n_features);
  std::vector<int> labels;
  labels.reserve(n_per_class * n_classes);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double offset = class_separation * static_cast<double>(c);
      for (std::size_t j = 0; j < n_features; ++j) features.push_back(offset * direction[j] + normal());
      labels.push_back(static_cast<int>(c));
    }
  }
  return Dataset(std::move(features), {n_features}, std::move(labels), Domain::series, "synthetic", n_classes);
}

}  // namespace alphanoise
