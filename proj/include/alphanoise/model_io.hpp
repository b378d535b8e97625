#pragma once

// Model files: JSON {config, layers: [{rows, cols, weights, bias}]}, numbers
// written with 17 significant digits so a load/save cycle is byte-stable.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "alphanoise/errors.hpp"
#include "alphanoise/nn.hpp"
#include "alphanoise/sample_io.hpp"

namespace alphanoise::nn {

namespace detail {

inline void write_array(std::ostringstream& out, const std::vector<double>& v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    if (!std::isfinite(v[i])) throw NumericError("cannot serialize a non-finite parameter");
    out << format_g17(v[i]);
  }
  out << ']';
}

}  // namespace detail

inline std::string model_to_json(const DenseModel& m) {
  std::ostringstream out;
  const auto& c = m.config;
  out << "{\n  \"config\": {\"width\": " << c.width << ", \"depth\": " << c.depth << ", \"n_inputs\": " << c.n_inputs
      << ", \"n_classes\": " << c.n_classes << ", \"activation\": \"relu\", \"init_seed\": " << c.init_seed
      << "},\n  \"layers\": [";
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    out << (i ? ",\n    " : "\n    ") << "{\"rows\": " << l.rows << ", \"cols\": " << l.cols << ", \"weights\": ";
    detail::write_array(out, l.weights);
    out << ", \"bias\": ";
    detail::write_array(out, l.bias);
    out << '}';
  }
  out << "\n  ]\n}\n";
  return out.str();
}

inline DenseModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  try {
    DenseModel m;
    const auto& c = j.at("config");
    m.config.width = c.at("width").get<std::size_t>();
    m.config.depth = c.at("depth").get<std::size_t>();
    m.config.n_inputs = c.at("n_inputs").get<std::size_t>();
    m.config.n_classes = c.at("n_classes").get<std::size_t>();
    m.config.init_seed = c.value("init_seed", std::uint64_t{0});
    if (c.value("activation", std::string("relu")) != "relu") throw FormatError("model file: only relu is supported");
    m.config.validate();
    std::size_t fan_in = m.config.n_inputs;
    for (const auto& lj : j.at("layers")) {
      Layer l{lj.at("rows").get<std::size_t>(), lj.at("cols").get<std::size_t>(),
              lj.at("weights").get<std::vector<double>>(), lj.at("bias").get<std::vector<double>>()};
      if (l.cols != fan_in || l.weights.size() != l.rows * l.cols || l.bias.size() != l.rows) {
        throw FormatError("model file: layer " + std::to_string(m.layers.size()) + " has inconsistent dimensions");
      }
      fan_in = l.rows;
      m.layers.push_back(std::move(l));
    }
    if (m.layers.size() != m.config.depth + 1 || fan_in != m.config.n_classes) {
      throw FormatError("model file: layer chain does not match config");
    }
    for (std::size_t i = 0; i + 1 < m.layers.size(); ++i) {
      if (m.layers[i].rows != m.config.width) throw FormatError("model file: hidden layer width differs from config");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const DenseModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << model_to_json(m))) throw IoError("cannot write " + path.string());
}

inline DenseModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return model_from_json(s.str());
}

}  // namespace alphanoise::nn
