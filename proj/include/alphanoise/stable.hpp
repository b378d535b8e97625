#pragma once

// Symmetric alpha-stable laws with characteristic function
//   phi(t) = exp{ i t delta - gamma |t|^alpha },   0 < alpha <= 2.
//
// gamma multiplies |t|^alpha directly, so the linear scale of the law is
// gamma^(1/alpha). At alpha = 2 this is a normal with variance 2 gamma; at
// alpha = 1 a Cauchy with scale gamma. Other conventions put the scale inside
// the power, (gamma |t|)^alpha; values quoted for one convention do not carry
// over to the other when alpha is not 1.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "alphanoise/errors.hpp"
#include "alphanoise/quadrature.hpp"
#include "alphanoise/rng.hpp"

namespace alphanoise {

/// Exponents closer than this to 1 use the Cauchy branch of the sampler.
inline constexpr double kCauchyBranchWidth = 1e-10;

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    std::ostringstream msg;
    msg << "alpha must satisfy 0 < alpha <= 2, got " << alpha;
    throw ParameterError(msg.str());
  }
}

/// (alpha, gamma, delta) of one symmetric stable law. Validated on construction.
class StableParams {
 public:
  StableParams(double alpha, double gamma = 1.0, double delta = 0.0)
      : alpha_(alpha), gamma_(gamma), delta_(delta) {
    check_alpha(alpha);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      std::ostringstream msg;
      msg << "gamma must be a finite positive number, got " << gamma;
      throw ParameterError(msg.str());
    }
    if (!std::isfinite(delta)) throw ParameterError("delta must be finite");
  }

  double alpha() const noexcept { return alpha_; }
  double gamma() const noexcept { return gamma_; }
  double delta() const noexcept { return delta_; }

  /// Multiplier applied to a standard (gamma = 1) draw.
  double scale() const { return std::pow(gamma_, 1.0 / alpha_); }

  bool operator==(const StableParams&) const = default;

 private:
  double alpha_;
  double gamma_;
  double delta_;
};

/// How a user-facing gamma maps onto StableParams.
///
/// dispersion: gamma is the coefficient of |t|^alpha (StableParams as-is).
/// scale:      gamma is a linear scale s with phi(t) = exp{-|s t|^alpha}, i.e.
///             dispersion s^alpha (the convention of scipy's levy_stable).
enum class GammaConvention { dispersion, scale };

inline const char* to_string(GammaConvention c) { return c == GammaConvention::scale ? "scale" : "dispersion"; }

inline GammaConvention parse_gamma_convention(const std::string& s) {
  if (s == "dispersion") return GammaConvention::dispersion;
  if (s == "scale") return GammaConvention::scale;
  throw ParameterError("unknown gamma convention '" + s + "' (expected dispersion or scale)");
}

inline StableParams make_params(double alpha, double gamma, GammaConvention convention, double delta = 0.0) {
  check_alpha(alpha);
  return StableParams(alpha, convention == GammaConvention::scale ? std::pow(gamma, alpha) : gamma, delta);
}

/// Finite mixture of symmetric stable laws.
class StableMixture {
 public:
  StableMixture(std::vector<StableParams> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw ParameterError("mixture needs at least one component");
    if (weights_.size() != components_.size()) {
      throw ParameterError("mixture weights and components differ in length");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw ParameterError("mixture weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture weights must sum to 1");
    cumulative_.reserve(weights_.size());
    double acc = 0.0;
    for (double w : weights_) cumulative_.push_back(acc += w);
  }

  static StableMixture equal_weights(std::vector<StableParams> components) {
    const double w = components.empty() ? 0.0 : 1.0 / static_cast<double>(components.size());
    std::vector<double> weights(components.size(), w);
    if (!weights.empty()) {
      // Absorb rounding into the last weight so the sum is exactly representable near 1.
      double head = 0.0;
      for (std::size_t i = 0; i + 1 < weights.size(); ++i) head += weights[i];
      weights.back() = 1.0 - head;
    }
    return StableMixture(std::move(components), std::move(weights));
  }

  const std::vector<StableParams>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Component index for a uniform draw u in (0, 1).
  std::size_t select(double u) const {
    for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i) {
      if (u < cumulative_[i]) return i;
    }
    return cumulative_.size() - 1;
  }

 private:
  std::vector<StableParams> components_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// One draw from the standard symmetric law exp{-|t|^alpha}
/// (Chambers-Mallows-Stuck with beta = 0).
inline double sample_standard(double alpha, RngStream& rng) {
  check_alpha(alpha);
  const double u = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  if (std::abs(alpha - 1.0) < kCauchyBranchWidth) return std::tan(u);
  const double cos_u = std::cos(u);
  return std::sin(alpha * u) / std::pow(cos_u, 1.0 / alpha) *
         std::pow(std::cos(u - alpha * u) / w, (1.0 - alpha) / alpha);
}

inline double sample_one(const StableParams& params, RngStream& rng) {
  return params.delta() + params.scale() * sample_standard(params.alpha(), rng);
}

inline std::vector<double> sample(const StableParams& params, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(n);
  const double scale = params.scale();
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(params.delta() + scale * sample_standard(params.alpha(), rng));
  }
  return out;
}

struct MixtureDraw {
  double value;
  std::size_t component;
};

inline MixtureDraw draw(const StableMixture& mix, RngStream& rng) {
  const std::size_t k = mix.select(rng.uniform_open());
  return {sample_one(mix.components()[k], rng), k};
}

inline std::vector<double> sample_mixture(const StableMixture& mix, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(mix, rng).value);
  return out;
}

/// Upper integration limit T with exp(-gamma T^alpha) = 1e-12.
inline double pdf_cutoff(const StableParams& params) {
  return std::pow(std::log(1e12) / params.gamma(), 1.0 / params.alpha());
}

/// Density by numerical Fourier inversion of the characteristic function.
///
/// Uses the real cosine form f(x) = (1/pi) int_0^T exp(-gamma t^alpha) cos(t (x - delta)) dt.
/// Panels are no wider than pi/|x - delta| once |x - delta| > 1.
inline double pdf(const StableParams& params, double x) {
  if (!std::isfinite(x)) throw ParameterError("pdf argument must be finite");
  const double u = std::abs(x - params.delta());
  const double alpha = params.alpha();
  const double gamma = params.gamma();
  const double limit = pdf_cutoff(params);

  std::vector<double> edges;
  if (u > 1.0) {
    const double width = std::numbers::pi / u;
    const auto panels = static_cast<std::size_t>(std::ceil(limit / width));
    edges.reserve(panels + 1);
    for (std::size_t i = 0; i < panels; ++i) edges.push_back(static_cast<double>(i) * width);
    edges.push_back(limit);
  } else {
    // Geometric grid resolves the t^alpha cusp at the origin.
    edges.push_back(0.0);
    for (int k = 30; k >= 0; --k) edges.push_back(std::ldexp(limit, -k));
  }

  const auto integrand = [&](double t) { return std::exp(-gamma * std::pow(t, alpha)) * std::cos(t * u); };
  quad::Tolerance tol;
  tol.relative = 1e-9;
  tol.absolute = 1e-13;
  tol.max_subdivisions = 4000 + 4 * static_cast<int>(edges.size());
  return quad::integrate(integrand, edges, tol).value / std::numbers::pi;
}

/// CDF for the two exponents with elementary closed forms (alpha = 1, 2).
inline std::optional<double> closed_form_cdf(const StableParams& params, double x) {
  const double z = x - params.delta();
  if (params.alpha() == 2.0) {
    return 0.5 * std::erfc(-z / (2.0 * std::sqrt(params.gamma())));
  }
  if (params.alpha() == 1.0) {
    return 0.5 + std::atan(z / params.gamma()) / std::numbers::pi;
  }
  return std::nullopt;
}

}  // namespace alphanoise
