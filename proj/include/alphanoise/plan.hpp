#pragma once

// Experiment plan files (JSON). Schema, by JSON path:
//
//   /name                      string, optional
//   /gamma_convention          "dispersion" (default) | "scale"; how every gamma in the
//                              plan maps onto the stable law (see GammaConvention)
//   /master_seed               unsigned integer, required
//   /repeats                   integer >= 1, required
//   /data/format               "idx" | "csv" | "npy" | "dataset" | "synthetic", required
//   /data/images, /data/labels training pool (idx: image/label files; npy: feature/label
//                              arrays; csv: /data/path; dataset: /data/path directory)
//   /data/test_images, /data/test_labels, /data/test_path
//                              optional held-out set; without one, the test set is cut
//                              from the training pool
//   /data/train_size, /data/test_size   optional seeded subset sizes (0 = all)
//   /data/delimiter, /data/domain       csv delimiter; domain for npy ("image" default)
//   /data/fallback             optional {"synthetic": {...}} used when the files are missing
//   /data/synthetic            {n_per_class, n_classes, n_features, class_separation}
//   /model                     {width, depth}
//   /train                     {epochs, steps, batch_size, learning_rate, momentum}; steps > 0
//                              gives every trial the same number of updates whatever its
//                              augmented size
//   /training_specs            array of specs; must contain a clean spec and a
//                              single spec with alpha 2. Each spec:
//       label, kind, alphas (single: one value; multiple/mixture: default six),
//       replication, copies_per_law, include_clean, weights (mixture),
//       gamma_grid (explicit list) or gamma_range [lo, hi] + gamma_points (geometric),
//       law_gammas (multiple/mixture: one fixed gamma per law, replaces the grid)
//   /test                      {alphas: [...], gammas: [...]}

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphanoise/augment.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/nn.hpp"

namespace alphanoise {

/// Plan failed schema validation; `violations` lists "<json path>: <problem>".
class PlanError : public ParameterError {
 public:
  explicit PlanError(std::vector<std::string> violations)
      : ParameterError(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid plan:";
    for (const auto& x : v) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> violations_;
};

inline constexpr double kMaxPlanGamma = 10.0;

/// Geometric grid of `points` values from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0 && hi >= lo) || points == 0) throw ParameterError("geometric grid needs 0 < lo <= hi and points >= 1");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  const double ratio = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo * std::exp(ratio * static_cast<double>(i));
  g.back() = hi;
  return g;
}

struct SyntheticSource {
  std::size_t n_per_class = 100;
  std::size_t n_classes = 10;
  std::size_t n_features = 20;
  double class_separation = 4.0;
};

struct DataSource {
  std::string format;
  std::filesystem::path images, labels, path;
  std::filesystem::path test_images, test_labels, test_path;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  char delimiter = ',';
  Domain domain = Domain::image;
  SyntheticSource synthetic;
  std::optional<SyntheticSource> fallback;
};

/// One training configuration and the gamma candidates to try for it.
struct TrainingSpecPlan {
  std::string label;
  NoiseKind kind = NoiseKind::clean;
  std::vector<double> alphas;
  std::vector<double> law_gammas;  // fixed per-law gammas; empty means use the grid
  std::vector<double> weights;
  std::size_t replication = 10;
  std::size_t copies_per_law = 2;
  bool include_clean = true;
  std::vector<double> gamma_grid;  // empty for clean and fixed-gamma specs

  /// Candidates to iterate; a single NaN marks "no gamma".
  std::vector<double> candidates() const {
    if (gamma_grid.empty()) return {std::nan("")};
    return gamma_grid;
  }

  NoiseSpec materialize(double gamma, GammaConvention convention = GammaConvention::dispersion) const {
    NoiseSpec s;
    s.kind = kind;
    s.replication = replication;
    s.copies_per_law = copies_per_law;
    s.include_clean = include_clean;
    s.weights = weights;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      s.laws.push_back(make_params(alphas[i], law_gammas.empty() ? gamma : law_gammas[i], convention));
    }
    s.validate();
    return s;
  }
};

struct ExperimentPlan {
  std::string name;
  GammaConvention gamma_convention = GammaConvention::dispersion;
  std::uint64_t master_seed = 0;
  std::size_t repeats = 5;
  DataSource data;
  std::size_t width = 3;
  std::size_t depth = 3;
  nn::TrainConfig train;
  std::vector<TrainingSpecPlan> specs;
  std::vector<double> test_alphas;
  std::vector<double> test_gammas;
  nlohmann::json source;  // the plan document as given
};

namespace detail {

class PlanReader {
 public:
  std::vector<std::string> errors;

  const nlohmann::json* field(const nlohmann::json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) errors.push_back(path + "/" + key + ": missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const nlohmann::json& obj, const std::string& path, const char* key, bool required) {
    const auto* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      errors.push_back(path + "/" + key + ": expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::size_t> count(const nlohmann::json& obj, const std::string& path, const char* key, bool required,
                                   std::size_t minimum = 0) {
    const auto* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(minimum)) {
      errors.push_back(path + "/" + key + ": expected an integer >= " + std::to_string(minimum));
      return std::nullopt;
    }
    return v->get<std::size_t>();
  }

  std::optional<std::string> text(const nlohmann::json& obj, const std::string& path, const char* key, bool required) {
    const auto* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      errors.push_back(path + "/" + key + ": expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const nlohmann::json& obj, const std::string& path, const char* key,
                                             bool required) {
    const auto* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->empty()) {
      errors.push_back(path + "/" + key + ": expected a non-empty array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        errors.push_back(path + "/" + key + "/" + std::to_string(i) + ": expected a number");
        return std::nullopt;
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  void alphas_in_range(const std::vector<double>& v, const std::string& where) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0 && v[i] <= 2.0)) errors.push_back(where + "/" + std::to_string(i) + ": alpha must satisfy 0 < alpha <= 2");
    }
  }

  void gammas_in_range(const std::vector<double>& v, const std::string& where) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0 && v[i] <= kMaxPlanGamma)) {
        errors.push_back(where + "/" + std::to_string(i) + ": gamma must satisfy 0 < gamma <= 10");
      }
    }
  }

  SyntheticSource synthetic(const nlohmann::json& j, const std::string& path) {
    SyntheticSource s;
    if (!j.is_object()) {
      errors.push_back(path + ": expected an object");
      return s;
    }
    if (auto v = count(j, path, "n_per_class", false, 1)) s.n_per_class = *v;
    if (auto v = count(j, path, "n_classes", false, 2)) s.n_classes = *v;
    if (auto v = count(j, path, "n_features", false, 1)) s.n_features = *v;
    if (auto v = number(j, path, "class_separation", false)) s.class_separation = *v;
    return s;
  }
};

}  // namespace detail

/// Validates `doc` and resolves relative data paths against `base_dir`.
/// Throws PlanError listing every violation found.
inline ExperimentPlan parse_plan(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
  detail::PlanReader r;
  ExperimentPlan plan;
  plan.source = doc;
  if (!doc.is_object()) throw PlanError({"/: plan must be a JSON object"});

  if (auto v = r.text(doc, "", "name", false)) plan.name = *v;
  if (auto v = r.text(doc, "", "gamma_convention", false)) {
    if (*v == "dispersion" || *v == "scale") plan.gamma_convention = parse_gamma_convention(*v);
    else r.errors.push_back("/gamma_convention: expected dispersion or scale");
  }
  if (const auto* v = r.field(doc, "", "master_seed", true)) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      r.errors.push_back("/master_seed: expected a non-negative integer");
    } else {
      plan.master_seed = v->get<std::uint64_t>();
    }
  }
  if (auto v = r.count(doc, "", "repeats", true, 1)) plan.repeats = *v;

  const auto resolve = [&](const std::string& p) -> std::filesystem::path {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  if (const auto* d = r.field(doc, "", "data", true)) {
    auto& src = plan.data;
    if (auto f = r.text(*d, "/data", "format", true)) {
      src.format = *f;
      static const std::vector<std::string> formats = {"idx", "csv", "npy", "dataset", "synthetic"};
      if (std::find(formats.begin(), formats.end(), *f) == formats.end()) {
        r.errors.push_back("/data/format: expected one of idx, csv, npy, dataset, synthetic");
      }
      const bool paired = *f == "idx" || *f == "npy";
      const bool single_path = *f == "csv" || *f == "dataset";
      if (auto v = r.text(*d, "/data", "images", paired)) src.images = resolve(*v);
      if (auto v = r.text(*d, "/data", "labels", paired)) src.labels = resolve(*v);
      if (auto v = r.text(*d, "/data", "path", single_path)) src.path = resolve(*v);
      if (auto v = r.text(*d, "/data", "test_images", false)) src.test_images = resolve(*v);
      if (auto v = r.text(*d, "/data", "test_labels", false)) src.test_labels = resolve(*v);
      if (auto v = r.text(*d, "/data", "test_path", false)) src.test_path = resolve(*v);
      if (*f == "synthetic") {
        if (const auto* s = r.field(*d, "/data", "synthetic", true)) src.synthetic = r.synthetic(*s, "/data/synthetic");
      }
    }
    if (auto v = r.count(*d, "/data", "train_size", false)) src.train_size = *v;
    if (auto v = r.count(*d, "/data", "test_size", false)) src.test_size = *v;
    if (auto v = r.text(*d, "/data", "delimiter", false)) {
      if (v->size() != 1) r.errors.push_back("/data/delimiter: expected a single character");
      else src.delimiter = (*v)[0];
    }
    if (auto v = r.text(*d, "/data", "domain", false)) {
      if (*v == "image" || *v == "series") src.domain = parse_domain(*v);
      else r.errors.push_back("/data/domain: expected image or series");
    }
    if (const auto* fb = r.field(*d, "/data", "fallback", false)) {
      if (const auto* s = r.field(*fb, "/data/fallback", "synthetic", true)) {
        src.fallback = r.synthetic(*s, "/data/fallback/synthetic");
      }
    }
  }

  if (const auto* m = r.field(doc, "", "model", true)) {
    if (auto v = r.count(*m, "/model", "width", true, 1)) plan.width = *v;
    if (auto v = r.count(*m, "/model", "depth", true, 1)) plan.depth = *v;
  }

  if (const auto* t = r.field(doc, "", "train", false)) {
    if (auto v = r.count(*t, "/train", "epochs", false)) plan.train.epochs = *v;
    if (auto v = r.count(*t, "/train", "steps", false)) plan.train.steps = *v;
    if (auto v = r.count(*t, "/train", "batch_size", false, 1)) plan.train.batch_size = *v;
    if (auto v = r.number(*t, "/train", "learning_rate", false)) {
      if (*v > 0.0) plan.train.learning_rate = *v;
      else r.errors.push_back("/train/learning_rate: must be positive");
    }
    if (auto v = r.number(*t, "/train", "momentum", false)) {
      if (*v >= 0.0 && *v < 1.0) plan.train.momentum = *v;
      else r.errors.push_back("/train/momentum: must lie in [0, 1)");
    }
  }

  if (const auto* specs = r.field(doc, "", "training_specs", true)) {
    if (!specs->is_array() || specs->empty()) {
      r.errors.push_back("/training_specs: expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < specs->size(); ++i) {
        const auto& sj = (*specs)[i];
        const std::string path = "/training_specs/" + std::to_string(i);
        TrainingSpecPlan sp;
        if (auto v = r.text(sj, path, "label", true)) sp.label = *v;
        if (auto v = r.text(sj, path, "kind", true)) {
          try {
            sp.kind = parse_noise_kind(*v);
          } catch (const ParameterError&) {
            r.errors.push_back(path + "/kind: expected clean, single, multiple or mixture");
            continue;
          }
        } else {
          continue;
        }
        if (auto v = r.count(sj, path, "replication", false, 1)) sp.replication = *v;
        if (auto v = r.count(sj, path, "copies_per_law", false, 1)) sp.copies_per_law = *v;
        if (const auto* v = r.field(sj, path, "include_clean", false)) {
          if (v->is_boolean()) sp.include_clean = v->get<bool>();
          else r.errors.push_back(path + "/include_clean: expected a boolean");
        }
        if (sp.kind != NoiseKind::clean) {
          const bool combined = sp.kind == NoiseKind::multiple || sp.kind == NoiseKind::mixture;
          if (auto v = r.numbers(sj, path, "alphas", !combined)) sp.alphas = *v;
          else if (combined) sp.alphas = kCombinedAlphas;
          r.alphas_in_range(sp.alphas, path + "/alphas");
          if (sp.kind == NoiseKind::single && sp.alphas.size() != 1) {
            r.errors.push_back(path + "/alphas: single noise takes exactly one alpha");
          }
          if (auto v = r.numbers(sj, path, "weights", false)) sp.weights = *v;
          if (auto v = r.numbers(sj, path, "law_gammas", false)) {
            sp.law_gammas = *v;
            r.gammas_in_range(sp.law_gammas, path + "/law_gammas");
            if (sp.law_gammas.size() != sp.alphas.size()) {
              r.errors.push_back(path + "/law_gammas: needs one gamma per alpha");
            }
          } else if (auto g = r.numbers(sj, path, "gamma_grid", false)) {
            sp.gamma_grid = *g;
            r.gammas_in_range(sp.gamma_grid, path + "/gamma_grid");
          } else if (auto range = r.numbers(sj, path, "gamma_range", false)) {
            const std::size_t points = r.count(sj, path, "gamma_points", false, 1).value_or(6);
            if (range->size() != 2 || !((*range)[0] > 0.0 && (*range)[1] >= (*range)[0])) {
              r.errors.push_back(path + "/gamma_range: expected [lo, hi] with 0 < lo <= hi");
            } else {
              sp.gamma_grid = geometric_grid((*range)[0], (*range)[1], points);
              r.gammas_in_range(sp.gamma_grid, path + "/gamma_range");
            }
          } else {
            r.errors.push_back(path + ": needs gamma_grid, gamma_range or law_gammas");
          }
        }
        for (const auto& other : plan.specs) {
          if (other.label == sp.label) r.errors.push_back(path + "/label: duplicate label '" + sp.label + "'");
        }
        plan.specs.push_back(std::move(sp));
      }
      const bool has_clean = std::any_of(plan.specs.begin(), plan.specs.end(),
                                         [](const auto& s) { return s.kind == NoiseKind::clean; });
      const bool has_gauss = std::any_of(plan.specs.begin(), plan.specs.end(), [](const auto& s) {
        return s.kind == NoiseKind::single && s.alphas.size() == 1 && s.alphas[0] == 2.0;
      });
      if (!has_clean) r.errors.push_back("/training_specs: a clean baseline spec is required");
      if (!has_gauss) r.errors.push_back("/training_specs: a Gaussian (single, alpha 2) baseline spec is required");
    }
  }

  if (const auto* t = r.field(doc, "", "test", true)) {
    if (auto v = r.numbers(*t, "/test", "alphas", true)) {
      plan.test_alphas = *v;
      r.alphas_in_range(*v, "/test/alphas");
    }
    if (auto v = r.numbers(*t, "/test", "gammas", true)) {
      plan.test_gammas = *v;
      r.gammas_in_range(*v, "/test/gammas");
    }
  }

  if (!r.errors.empty()) throw PlanError(std::move(r.errors));
  return plan;
}

inline ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PlanError({std::string("/: not valid JSON: ") + e.what()});
  }
  return parse_plan(doc, path.parent_path());
}

}  // namespace alphanoise
