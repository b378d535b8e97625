#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "alphanoise/errors.hpp"

namespace alphanoise {

/// Kolmogorov-Smirnov distance sup_x |F_n(x) - cdf(x)|.
inline double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ParameterError("ks_statistic needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

/// Hill estimator of the tail index from the k largest magnitudes.
inline double tail_index(std::span<const double> samples, std::size_t k) {
  if (k == 0 || k >= samples.size()) throw ParameterError("tail_index needs 0 < k < sample count");
  std::vector<double> mags;
  mags.reserve(samples.size());
  for (double v : samples) {
    if (v != 0.0) mags.push_back(std::abs(v));
  }
  if (mags.size() <= k) throw ParameterError("tail_index needs more than k nonzero magnitudes");
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end(), std::greater<>());
  const double threshold = mags[k];
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(mags[i] / threshold);
  if (!(sum > 0.0)) throw ParameterError("tail_index: top order statistics have zero log-spacings");
  return static_cast<double>(k) / sum;
}

/// Hill estimator with the default k = n / 100.
inline double tail_index(std::span<const double> samples) {
  return tail_index(samples, std::max<std::size_t>(1, samples.size() / 100));
}

inline double median(std::span<const double> samples) {
  if (samples.empty()) throw ParameterError("median of an empty sample");
  std::vector<double> v(samples.begin(), samples.end());
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline double mean(std::span<const double> samples) {
  if (samples.empty()) throw ParameterError("mean of an empty sample");
  double s = 0.0;
  for (double v : samples) s += v;
  return s / static_cast<double>(samples.size());
}

/// Unbiased (n - 1) sample variance; zero for a single value.
inline double sample_variance(std::span<const double> samples) {
  if (samples.empty()) throw ParameterError("variance of an empty sample");
  if (samples.size() == 1) return 0.0;
  const double m = mean(samples);
  double s = 0.0;
  for (double v : samples) s += (v - m) * (v - m);
  return s / static_cast<double>(samples.size() - 1);
}

}  // namespace alphanoise
