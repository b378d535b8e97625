#pragma once

// Noise-augmented training sets and noisy test suites.
//
// Output layout is fixed: the clean copy (when included) comes first, then the
// noisy copies in spec order. Noisy copy k draws from its own child stream
// rng.child("augment-copy", k), so copies can be built in any order.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphanoise/dataset.hpp"
#include "alphanoise/dataset_io.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/rng.hpp"
#include "alphanoise/stable.hpp"

namespace alphanoise {

enum class NoiseKind { clean, single, multiple, mixture };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::clean: return "clean";
    case NoiseKind::single: return "single";
    case NoiseKind::multiple: return "multiple";
    case NoiseKind::mixture: return "mixture";
  }
  return "";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "clean") return NoiseKind::clean;
  if (s == "single") return NoiseKind::single;
  if (s == "multiple") return NoiseKind::multiple;
  if (s == "mixture") return NoiseKind::mixture;
  throw ParameterError("unknown noise kind '" + s + "' (expected clean, single, multiple or mixture)");
}

/// The alpha grid used for single-noise training and testing.
inline const std::vector<double> kStudyAlphas = {2.0, 1.9, 1.5, 1.3, 1.0, 0.9, 0.5};
/// The six exponents combined by the multiple and mixture schemes (0.5 excluded).
inline const std::vector<double> kCombinedAlphas = {2.0, 1.9, 1.5, 1.3, 1.0, 0.9};

/// A training-noise configuration.
///
/// single:   `replication` noisy copies under laws[0]
/// multiple: `copies_per_law` noisy copies under each law
/// mixture:  `replication` noisy copies, each element drawn from the mixture of laws
/// clean:    the base set alone
struct NoiseSpec {
  NoiseKind kind = NoiseKind::clean;
  std::vector<StableParams> laws;
  std::vector<double> weights;  // mixture only; empty means equal weights
  std::size_t replication = 10;
  std::size_t copies_per_law = 2;
  bool include_clean = true;

  static NoiseSpec clean() { return {}; }

  static NoiseSpec single(const StableParams& law, std::size_t replication = 10, bool include_clean = true) {
    NoiseSpec s;
    s.kind = NoiseKind::single;
    s.laws = {law};
    s.replication = replication;
    s.include_clean = include_clean;
    return s;
  }

  static NoiseSpec multiple(std::vector<StableParams> laws, std::size_t copies_per_law = 2,
                            bool include_clean = true) {
    NoiseSpec s;
    s.kind = NoiseKind::multiple;
    s.laws = std::move(laws);
    s.copies_per_law = copies_per_law;
    s.include_clean = include_clean;
    return s;
  }

  static NoiseSpec mixture(std::vector<StableParams> laws, std::size_t replication = 10,
                           bool include_clean = true, std::vector<double> weights = {}) {
    NoiseSpec s;
    s.kind = NoiseKind::mixture;
    s.laws = std::move(laws);
    s.weights = std::move(weights);
    s.replication = replication;
    s.include_clean = include_clean;
    return s;
  }

  /// Same exponents with a shared dispersion and zero location.
  static std::vector<StableParams> laws_for(const std::vector<double>& alphas, double gamma,
                                            GammaConvention convention = GammaConvention::dispersion) {
    std::vector<StableParams> out;
    out.reserve(alphas.size());
    for (double a : alphas) out.push_back(make_params(a, gamma, convention));
    return out;
  }

  void validate() const {
    switch (kind) {
      case NoiseKind::clean: return;
      case NoiseKind::single:
        if (laws.size() != 1) throw ParameterError("single noise takes exactly one law");
        if (replication < 1) throw ParameterError("replication must be at least 1");
        return;
      case NoiseKind::multiple:
        if (laws.empty()) throw ParameterError("multiple noise needs at least one law");
        if (copies_per_law < 1) throw ParameterError("copies_per_law must be at least 1");
        return;
      case NoiseKind::mixture:
        if (laws.empty()) throw ParameterError("mixture noise needs at least one law");
        if (replication < 1) throw ParameterError("replication must be at least 1");
        (void)make_mixture();
        return;
    }
  }

  StableMixture make_mixture() const {
    return weights.empty() ? StableMixture::equal_weights(laws) : StableMixture(laws, weights);
  }

  std::size_t noisy_copies() const {
    switch (kind) {
      case NoiseKind::clean: return 0;
      case NoiseKind::single:
      case NoiseKind::mixture: return replication;
      case NoiseKind::multiple: return copies_per_law * laws.size();
    }
    return 0;
  }

  bool has_clean_copy() const { return kind == NoiseKind::clean || include_clean; }

  std::size_t total_rows(std::size_t n) const { return (noisy_copies() + (has_clean_copy() ? 1 : 0)) * n; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["laws"] = nlohmann::json::array();
    for (const auto& p : laws) j["laws"].push_back({{"alpha", p.alpha()}, {"gamma", p.gamma()}, {"delta", p.delta()}});
    if (!weights.empty()) j["weights"] = weights;
    j["replication"] = replication;
    j["copies_per_law"] = copies_per_law;
    j["include_clean"] = include_clean;
    return j;
  }

  static NoiseSpec from_json(const nlohmann::json& j) {
    NoiseSpec s;
    s.kind = parse_noise_kind(j.at("kind").get<std::string>());
    if (j.contains("laws")) {
      for (const auto& p : j["laws"]) {
        s.laws.emplace_back(p.at("alpha").get<double>(), p.value("gamma", 1.0), p.value("delta", 0.0));
      }
    }
    if (j.contains("weights")) s.weights = j["weights"].get<std::vector<double>>();
    s.replication = j.value("replication", std::size_t{10});
    s.copies_per_law = j.value("copies_per_law", std::size_t{2});
    s.include_clean = j.value("include_clean", true);
    s.validate();
    return s;
  }

  bool operator==(const NoiseSpec&) const = default;
};

struct AugmentedDataset {
  NoiseSpec spec;
  std::size_t base_rows = 0;
  Dataset data;

  /// Row of the base set that augmented row `row` was derived from.
  std::size_t source_row(std::size_t row) const { return row % base_rows; }
};

namespace detail {

inline void clip_unit(std::vector<double>& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

/// Block `copy` of the noisy part of `spec` applied to `base`.
inline Dataset noisy_block(const Dataset& base, const NoiseSpec& spec, std::size_t copy, const RngStream& rng) {
  RngStream stream = rng.child("augment-copy", copy);
  std::vector<double> features = base.features();
  if (spec.kind == NoiseKind::mixture) {
    const StableMixture mix = spec.make_mixture();
    for (double& x : features) x += draw(mix, stream).value;
  } else {
    const std::size_t law = spec.kind == NoiseKind::multiple ? copy / spec.copies_per_law : 0;
    const StableParams& p = spec.laws.at(law);
    const double scale = p.scale();
    for (double& x : features) x += p.delta() + scale * sample_standard(p.alpha(), stream);
  }
  if (base.domain() == Domain::image) clip_unit(features);
  return Dataset(std::move(features), base.shape(), base.labels(), base.domain(), base.name(), base.n_classes(),
                 base.label_values());
}

}  // namespace detail

inline AugmentedDataset augment(const Dataset& base, const NoiseSpec& spec, const RngStream& rng) {
  spec.validate();
  const std::size_t rows = spec.total_rows(base.n_samples());
  std::vector<double> features;
  features.reserve(rows * base.n_features());
  std::vector<int> labels;
  labels.reserve(rows);
  if (spec.has_clean_copy()) {
    features = base.features();
    labels = base.labels();
  }
  for (std::size_t k = 0; k < spec.noisy_copies(); ++k) {
    const Dataset block = detail::noisy_block(base, spec, k, rng);
    features.insert(features.end(), block.features().begin(), block.features().end());
    labels.insert(labels.end(), block.labels().begin(), block.labels().end());
  }
  Dataset data(std::move(features), base.shape(), std::move(labels), base.domain(),
               base.name() + "+" + to_string(spec.kind), base.n_classes(), base.label_values());
  return {spec, base.n_samples(), std::move(data)};
}

/// Persists augment(base, spec, rng) under `dir`. When the materialized size
/// would exceed `byte_budget`, each copy is generated and written as its own
/// NPY shard instead; the stored rows are identical either way.
inline void write_augmented(const std::filesystem::path& dir, const Dataset& base, const NoiseSpec& spec,
                            const RngStream& rng, std::size_t byte_budget = std::size_t{1} << 30) {
  spec.validate();
  const nlohmann::json extra = {{"noise_spec", spec.to_json()}};
  const std::size_t bytes = spec.total_rows(base.n_samples()) * base.n_features() * sizeof(double);
  if (bytes <= byte_budget) {
    save_dataset(dir, augment(base, spec, rng).data, extra);
    return;
  }
  ShardedDatasetWriter writer(dir, base.renamed(base.name() + "+" + to_string(spec.kind)));
  if (spec.has_clean_copy()) writer.append(base);
  for (std::size_t k = 0; k < spec.noisy_copies(); ++k) writer.append(detail::noisy_block(base, spec, k, rng));
  writer.finish(extra);
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string test_set_label(double alpha, double gamma) {
  return "alpha=" + format_number(alpha) + ",gamma=" + format_number(gamma);
}

struct LabeledDataset {
  std::string label;
  Dataset data;
};

/// Clean set followed by one noisy copy per (alpha, gamma) pair, alpha-major.
/// Labels carry gamma as given, whatever the convention.
inline std::vector<LabeledDataset> make_test_suite(const Dataset& base, const std::vector<double>& alphas,
                                                   const std::vector<double>& gammas, const RngStream& rng,
                                                   GammaConvention convention = GammaConvention::dispersion) {
  if (alphas.empty() || gammas.empty()) throw ParameterError("test suite needs at least one alpha and one gamma");
  std::vector<LabeledDataset> suite;
  suite.push_back({"clean", base});
  std::size_t index = 0;
  for (double a : alphas) {
    for (double g : gammas) {
      const auto spec = NoiseSpec::single(make_params(a, g, convention), 1, false);
      suite.push_back({test_set_label(a, g), detail::noisy_block(base, spec, 0, rng.child("test-set", index++))});
    }
  }
  return suite;
}

/// Fraction of elements pinned to 0 or 1 by clipping that were not already there.
inline double clip_fraction(const Dataset& before, const Dataset& after) {
  if (before.n_samples() != after.n_samples() || before.n_features() != after.n_features()) {
    throw ParameterError("clip_fraction needs datasets of identical shape");
  }
  if (after.domain() == Domain::series || after.features().empty()) return 0.0;
  std::size_t clipped = 0;
  const auto& b = before.features();
  const auto& a = after.features();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool at_edge = a[i] == 0.0 || a[i] == 1.0;
    const bool was_edge = b[i] == 0.0 || b[i] == 1.0;
    if (at_edge && !was_edge) ++clipped;
  }
  return static_cast<double>(clipped) / static_cast<double>(a.size());
}

}  // namespace alphanoise
