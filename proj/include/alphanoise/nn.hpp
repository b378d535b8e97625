#pragma once

// Fully connected ReLU classifier with softmax output and exact backprop.
// Everything is float64; summation order is fixed so training is deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "alphanoise/dataset.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/rng.hpp"

namespace alphanoise::nn {

struct ModelConfig {
  std::size_t width = 3;
  std::size_t depth = 3;
  std::size_t n_inputs = 784;
  std::size_t n_classes = 10;
  std::uint64_t init_seed = 0;

  void validate() const {
    if (width < 1) throw ParameterError("model width must be at least 1");
    if (depth < 1) throw ParameterError("model depth must be at least 1");
    if (n_inputs < 1) throw ParameterError("model needs at least one input");
    if (n_classes < 2) throw ParameterError("model needs at least two classes");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Distinct (width, depth) shapes explored for the MNIST FCN.
inline const std::vector<std::pair<std::size_t, std::size_t>> kFcnPresets = {
    {3, 3}, {3, 4}, {3, 5}, {10, 3}, {100, 3}};

/// y = W x + b with W stored row-major as (outputs x inputs).
struct Layer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

struct DenseModel {
  ModelConfig config;
  std::vector<Layer> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  template <class F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : layers) {
      for (double w : l.weights) f(w);
      for (double b : l.bias) f(b);
    }
  }

  bool operator==(const DenseModel&) const = default;
};

/// Gradient with the same layout as the model's layers.
using Gradients = std::vector<Layer>;

inline Gradients zeros_like(const DenseModel& model) {
  Gradients g;
  for (const auto& l : model.layers) {
    g.push_back({l.rows, l.cols, std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

/// Uniform(-h, h) weights with h = sqrt(6 / (fan_in + fan_out)); zero biases.
inline DenseModel init(const ModelConfig& config) {
  config.validate();
  DenseModel model{config, {}};
  RngStream rng(config.init_seed, derive_stream_id(0, "init", 0));
  std::size_t fan_in = config.n_inputs;
  for (std::size_t i = 0; i <= config.depth; ++i) {
    const std::size_t fan_out = i == config.depth ? config.n_classes : config.width;
    Layer l{fan_out, fan_in, std::vector<double>(fan_out * fan_in), std::vector<double>(fan_out, 0.0)};
    const double h = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : l.weights) w = h * (2.0 * rng.uniform_open() - 1.0);
    model.layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return model;
}

/// Row-major (rows x cols) matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return std::span<const double>(data).subspan(i * cols, cols); }
};

namespace detail {

inline void affine(const Layer& l, std::span<const double> in, std::span<double> out) {
  for (std::size_t r = 0; r < l.rows; ++r) {
    const double* w = l.weights.data() + r * l.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < l.cols; ++c) acc += w[c] * in[c];
    out[r] = acc + l.bias[r];
  }
}

/// Softmax in place with max subtraction.
inline void softmax(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - top));
  for (double& v : z) v /= sum;
}

/// Per-sample forward pass keeping every layer's activation (post-ReLU for hidden layers).
struct Trace {
  std::vector<std::vector<double>> act;
  std::vector<std::size_t> nonzero;  // indices of nonzero inputs

  explicit Trace(const DenseModel& m) {
    for (const auto& l : m.layers) act.emplace_back(l.rows);
  }
};

/// First layer over the nonzero inputs only; image rows are mostly zeros.
inline void affine_sparse(const Layer& l, std::span<const double> in, const std::vector<std::size_t>& nz,
                          std::span<double> out) {
  for (std::size_t r = 0; r < l.rows; ++r) {
    const double* w = l.weights.data() + r * l.cols;
    double acc = 0.0;
    for (std::size_t c : nz) acc += w[c] * in[c];
    out[r] = acc + l.bias[r];
  }
}

inline void forward_one(const DenseModel& m, std::span<const double> x, Trace& t) {
  std::span<const double> in = x;
  t.nonzero.clear();
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c] != 0.0) t.nonzero.push_back(c);
  }
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    auto& out = t.act[i];
    if (i == 0) affine_sparse(m.layers[0], in, t.nonzero, out);
    else affine(m.layers[i], in, out);
    if (i + 1 < m.layers.size()) {
      for (double& v : out) v = std::max(v, 0.0);
    }
    in = out;
  }
}

inline void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("non-finite input to forward pass");
  }
}

}  // namespace detail

/// Pre-softmax outputs for every row of `batch`.
inline Matrix logits(const DenseModel& model, const Matrix& batch) {
  if (batch.cols != model.config.n_inputs) throw ParameterError("batch width differs from model input count");
  detail::check_finite(batch.data);
  detail::Trace t(model);
  Matrix out{batch.rows, model.config.n_classes, std::vector<double>(batch.rows * model.config.n_classes)};
  for (std::size_t i = 0; i < batch.rows; ++i) {
    detail::forward_one(model, batch.row(i), t);
    std::copy(t.act.back().begin(), t.act.back().end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * out.cols));
  }
  return out;
}

/// Class probabilities, one softmax row per input row.
inline Matrix forward(const DenseModel& model, const Matrix& batch) {
  Matrix p = logits(model, batch);
  for (std::size_t i = 0; i < p.rows; ++i) {
    detail::softmax(std::span<double>(p.data).subspan(i * p.cols, p.cols));
  }
  return p;
}

inline constexpr double kProbabilityFloor = 1e-15;

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

namespace detail {

/// Adds the summed (not averaged) cross-entropy gradient of rows `rows` into `g`; returns summed loss.
template <class RowAt>
double accumulate(const DenseModel& m, std::size_t count, RowAt&& row_at, std::span<const int> labels,
                  Gradients& g, Trace& t, std::vector<std::vector<double>>& delta) {
  const std::size_t L = m.layers.size();
  double loss = 0.0;
  for (std::size_t s = 0; s < count; ++s) {
    const std::span<const double> x = row_at(s);
    forward_one(m, x, t);
    auto& out = t.act.back();
    softmax(out);
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= m.config.n_classes) {
      throw ParameterError("label " + std::to_string(y) + " outside [0, n_classes)");
    }
    loss -= std::log(std::max(out[static_cast<std::size_t>(y)], kProbabilityFloor));

    delta[L - 1].assign(out.begin(), out.end());
    delta[L - 1][static_cast<std::size_t>(y)] -= 1.0;
    for (std::size_t i = L; i-- > 0;) {
      const Layer& layer = m.layers[i];
      Layer& gl = g[i];
      const std::span<const double> in = i == 0 ? x : std::span<const double>(t.act[i - 1]);
      const auto& d = delta[i];
      for (std::size_t r = 0; r < layer.rows; ++r) {
        const double dr = d[r];
        gl.bias[r] += dr;
        if (dr == 0.0) continue;
        double* gw = gl.weights.data() + r * layer.cols;
        if (i == 0) {
          for (std::size_t c : t.nonzero) gw[c] += dr * in[c];
        } else {
          for (std::size_t c = 0; c < layer.cols; ++c) gw[c] += dr * in[c];
        }
      }
      if (i == 0) break;
      auto& prev = delta[i - 1];
      std::fill(prev.begin(), prev.end(), 0.0);
      for (std::size_t r = 0; r < layer.rows; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        const double* w = layer.weights.data() + r * layer.cols;
        for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += w[c] * dr;
      }
      for (std::size_t c = 0; c < prev.size(); ++c) {
        if (t.act[i - 1][c] <= 0.0) prev[c] = 0.0;
      }
    }
  }
  return loss;
}

inline std::vector<std::vector<double>> delta_buffers(const DenseModel& m) {
  std::vector<std::vector<double>> d;
  for (const auto& l : m.layers) d.emplace_back(l.rows);
  return d;
}

inline void scale(Gradients& g, double f) {
  for (auto& l : g) {
    for (double& w : l.weights) w *= f;
    for (double& b : l.bias) b *= f;
  }
}

}  // namespace detail

/// Mean cross-entropy (probabilities floored at 1e-15) and its exact gradient.
inline LossAndGrads loss_and_grads(const DenseModel& model, const Matrix& batch, std::span<const int> labels) {
  if (batch.cols != model.config.n_inputs) throw ParameterError("batch width differs from model input count");
  if (labels.size() != batch.rows) throw ParameterError("label count differs from batch rows");
  if (batch.rows == 0) throw ParameterError("loss_and_grads needs a non-empty batch");
  LossAndGrads out{0.0, zeros_like(model)};
  detail::Trace t(model);
  auto delta = detail::delta_buffers(model);
  const double sum = detail::accumulate(
      model, batch.rows, [&](std::size_t s) { return batch.row(s); }, labels, out.grads, t, delta);
  const double inv = 1.0 / static_cast<double>(batch.rows);
  detail::scale(out.grads, inv);
  out.loss = sum * inv;
  return out;
}

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t steps = 0;  // when > 0: exactly this many updates, epochs ignored (last epoch may be partial)
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;  // 0 gives plain SGD
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ParameterError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  }

  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  DenseModel model;
  std::vector<double> epoch_loss;  // mean training loss seen during each epoch
};

/// Mini-batch SGD (optionally with classical momentum), reshuffled every epoch.
/// Throws TrainingError naming the epoch and batch when the loss turns non-finite.
inline TrainResult train(DenseModel model, const Dataset& data, const TrainConfig& tc) {
  tc.validate();
  if (data.n_features() != model.config.n_inputs) throw ParameterError("dataset width differs from model input count");
  TrainResult result{std::move(model), {}};
  if (tc.steps == 0 && tc.epochs == 0) return result;
  if (data.n_samples() == 0) throw ParameterError("cannot train on an empty dataset");
  DenseModel& m = result.model;
  Gradients velocity = zeros_like(m);
  Gradients grads = zeros_like(m);
  detail::Trace trace(m);
  auto delta = detail::delta_buffers(m);
  const RngStream base(tc.shuffle_seed, derive_stream_id(0, "shuffle", 0));

  const std::size_t n = data.n_samples();
  std::size_t steps_left = tc.steps;
  for (std::size_t epoch = 0; tc.steps > 0 ? steps_left > 0 : epoch < tc.epochs; ++epoch) {
    RngStream rng = base.child("epoch", epoch);
    const auto order = shuffled_indices(n, rng);
    std::vector<int> batch_labels;
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0, batch = 0; start < n; start += tc.batch_size, ++batch) {
      if (tc.steps > 0) {
        if (steps_left == 0) break;
        --steps_left;
      }
      const std::size_t count = std::min(tc.batch_size, n - start);
      seen += count;
      batch_labels.resize(count);
      for (std::size_t s = 0; s < count; ++s) batch_labels[s] = data.labels()[order[start + s]];
      for (auto& l : grads) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
      }
      const double loss = detail::accumulate(
          m, count, [&](std::size_t s) { return data.row(order[start + s]); }, batch_labels, grads, trace, delta);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch " << batch;
        throw TrainingError(msg.str(), epoch, batch);
      }
      epoch_loss += loss;
      const double step = tc.learning_rate / static_cast<double>(count);
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        auto update = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
          for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = tc.momentum * v[k] - step * g[k];
            p[k] += v[k];
          }
        };
        update(m.layers[i].weights, velocity[i].weights, grads[i].weights);
        update(m.layers[i].bias, velocity[i].bias, grads[i].bias);
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(seen));
    bool finite = true;
    m.for_each_parameter([&](double p) { finite = finite && std::isfinite(p); });
    if (!finite) throw TrainingError("training diverged: non-finite parameters after epoch " + std::to_string(epoch), epoch, 0);
  }
  return result;
}

/// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline std::vector<int> predict(const DenseModel& model, const Dataset& data) {
  if (data.n_features() != model.config.n_inputs) throw ParameterError("dataset width differs from model input count");
  detail::check_finite(data.features());
  detail::Trace t(model);
  std::vector<int> out(data.n_samples());
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    detail::forward_one(model, data.row(i), t);
    out[i] = static_cast<int>(argmax(t.act.back()));
  }
  return out;
}

inline double accuracy(const DenseModel& model, const Dataset& data) {
  if (data.n_samples() == 0) throw ParameterError("accuracy of an empty dataset");
  const auto pred = predict(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels()[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

inline constexpr double kSparsityThreshold = 0.01;

/// Fraction of weights and biases with magnitude below `threshold`.
inline double sparsity(const DenseModel& model, double threshold = kSparsityThreshold) {
  if (!(threshold > 0.0)) throw ParameterError("sparsity threshold must be positive");
  std::size_t small = 0;
  model.for_each_parameter([&](double p) { small += std::abs(p) < threshold; });
  const std::size_t total = model.parameter_count();
  return total == 0 ? 0.0 : static_cast<double>(small) / static_cast<double>(total);
}

/// True when some hidden layer outputs zero on every row of `data`. Such a model
/// gets no gradient below that layer and stays at the label prior.
inline bool has_inactive_layer(const DenseModel& model, const Dataset& data) {
  if (data.n_features() != model.config.n_inputs) throw ParameterError("dataset width differs from model input count");
  const std::size_t hidden = model.layers.size() - 1;
  std::vector<bool> active(hidden, false);
  detail::Trace t(model);
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    detail::forward_one(model, data.row(i), t);
    for (std::size_t l = 0; l < hidden; ++l) {
      for (double v : t.act[l]) active[l] = active[l] || v > 0.0;
    }
  }
  return std::find(active.begin(), active.end(), false) != active.end();
}

}  // namespace alphanoise::nn
