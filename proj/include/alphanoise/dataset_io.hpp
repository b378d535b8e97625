#pragma once

// Persisted datasets: a directory holding NPY feature/label shards plus a JSON
// sidecar (dataset.json) with name, shape, domain, label map, and any extra
// metadata the producer attaches (e.g. "noise_spec").

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphanoise/dataset.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/npy.hpp"

namespace alphanoise {

inline constexpr const char* kSidecarName = "dataset.json";

namespace detail {

inline nlohmann::json label_map_json(const std::vector<std::int64_t>& label_values) {
  if (label_values.empty()) return nullptr;
  nlohmann::json map = nlohmann::json::array();
  for (std::size_t id = 0; id < label_values.size(); ++id) {
    map.push_back({{"original", label_values[id]}, {"id", id}});
  }
  return map;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

inline std::string shard_name(const char* stem, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%05zu.npy", stem, index);
  return buf;
}

}  // namespace detail

/// Writes a dataset shard by shard; rows of every shard share one layout.
class ShardedDatasetWriter {
 public:
  ShardedDatasetWriter(std::filesystem::path dir, const Dataset& layout) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    sidecar_ = {{"name", layout.name()},
                {"shape", layout.shape()},
                {"domain", to_string(layout.domain())},
                {"n_classes", layout.n_classes()},
                {"label_map", detail::label_map_json(layout.label_values())},
                {"channel_scale", nullptr},
                {"n_samples", 0},
                {"shards", nlohmann::json::array()}};
  }

  void append(const Dataset& block) {
    const std::size_t index = sidecar_["shards"].size();
    const std::string features = detail::shard_name("features", index);
    const std::string labels = detail::shard_name("labels", index);
    write_block(block, features, labels);
    sidecar_["shards"].push_back({{"features", features}, {"labels", labels}});
    sidecar_["n_samples"] = sidecar_["n_samples"].get<std::size_t>() + block.n_samples();
  }

  /// Single unsharded payload named features.npy / labels.npy.
  void write_whole(const Dataset& data) {
    write_block(data, "features.npy", "labels.npy");
    sidecar_["shards"] = nlohmann::json::array({{{"features", "features.npy"}, {"labels", "labels.npy"}}});
    sidecar_["n_samples"] = data.n_samples();
  }

  void finish(const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json doc = sidecar_;
    for (const auto& [key, value] : extra.items()) doc[key] = value;
    detail::write_text_file(dir_ / kSidecarName, doc.dump(2) + "\n");
  }

 private:
  void write_block(const Dataset& block, const std::string& features, const std::string& labels) const {
    NpyArray f;
    f.dtype = NpyDtype::f64;
    f.shape = {block.n_samples()};
    f.shape.insert(f.shape.end(), block.shape().begin(), block.shape().end());
    f.values = block.features();
    save_npy((dir_ / features).string(), f);
    NpyArray l;
    l.dtype = NpyDtype::i64;
    l.shape = {block.n_samples()};
    l.values.assign(block.labels().begin(), block.labels().end());
    save_npy((dir_ / labels).string(), l);
  }

  std::filesystem::path dir_;
  nlohmann::json sidecar_;
};

inline void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  ShardedDatasetWriter writer(dir, data);
  writer.write_whole(data);
  writer.finish(extra);
}

inline nlohmann::json load_sidecar(const std::filesystem::path& dir) {
  std::ifstream in(dir / kSidecarName);
  if (!in) throw IoError("cannot open " + (dir / kSidecarName).string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / kSidecarName).string() + ": " + e.what());
  }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto side = load_sidecar(dir);
  try {
    const auto shape = side.at("shape").get<std::vector<std::size_t>>();
    const Domain domain = parse_domain(side.at("domain").get<std::string>());
    std::vector<std::int64_t> label_values;
    if (side.contains("label_map") && !side["label_map"].is_null()) {
      label_values.resize(side["label_map"].size());
      for (const auto& entry : side["label_map"]) {
        label_values.at(entry.at("id").get<std::size_t>()) = entry.at("original").get<std::int64_t>();
      }
    }
    std::vector<double> features;
    std::vector<int> labels;
    for (const auto& shard : side.at("shards")) {
      const auto f = load_npy((dir / shard.at("features").get<std::string>()).string());
      const auto l = load_npy((dir / shard.at("labels").get<std::string>()).string());
      features.insert(features.end(), f.values.begin(), f.values.end());
      for (double v : l.values) labels.push_back(static_cast<int>(v));
    }
    return Dataset(std::move(features), shape, std::move(labels), domain, side.value("name", std::string{}),
                   side.at("n_classes").get<std::size_t>(), std::move(label_values));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / kSidecarName).string() + ": " + e.what());
  } catch (const ParameterError& e) {
    throw FormatError((dir / kSidecarName).string() + ": " + e.what());
  }
}

/// Feature/label NPY pair such as the corrupted-MNIST benchmark files.
/// Per-sample shape is the feature array's shape minus its leading axis.
inline Dataset load_npy_pair(const std::string& features_path, const std::string& labels_path, Domain domain) {
  auto f = load_npy(features_path);
  const auto l = load_npy(labels_path);
  if (f.shape.size() < 2) throw FormatError(features_path + ": expected a (samples, ...) array");
  if (l.values.size() != f.shape[0]) {
    throw FormatError("NPY sample count mismatch between " + features_path + " and " + labels_path);
  }
  std::vector<std::size_t> shape(f.shape.begin() + 1, f.shape.end());
  std::vector<int> labels;
  labels.reserve(l.values.size());
  for (double v : l.values) labels.push_back(static_cast<int>(v));
  try {
    return Dataset(std::move(f.values), std::move(shape), std::move(labels), domain, features_path);
  } catch (const ParameterError& e) {
    throw FormatError(features_path + ": " + e.what());
  }
}

}  // namespace alphanoise
