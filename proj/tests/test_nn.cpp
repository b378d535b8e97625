#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "alphanoise/dataset.hpp"
#include "alphanoise/model_io.hpp"
#include "alphanoise/nn.hpp"

using namespace alphanoise;
using namespace alphanoise::nn;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  RngStream r(seed);
  Matrix m{rows, cols, std::vector<double>(rows * cols)};
  for (double& v : m.data) v = r.uniform_open() * 2.0 - 1.0;
  return m;
}

Matrix as_matrix(const Dataset& d) { return {d.n_samples(), d.n_features(), d.features()}; }

DenseModel zero_model(const ModelConfig& c) {
  auto m = init(c);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return m;
}

double& param(DenseModel& m, std::size_t layer, bool bias, std::size_t k) {
  return bias ? m.layers[layer].bias[k] : m.layers[layer].weights[k];
}

}  // namespace

TEST(Init, ShapeAndCount) {
  const auto m = init({3, 3, 784, 10, 1});
  EXPECT_EQ(m.parameter_count(), 2419u);  // 784*3+3 + 2*(3*3+3) + 3*10+10
  ASSERT_EQ(m.layers.size(), 4u);
  EXPECT_EQ(m.layers[0].cols, 784u);
  EXPECT_EQ(m.layers[3].rows, 10u);
  for (const auto& l : m.layers) {
    const double h = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    for (double w : l.weights) ASSERT_LE(std::abs(w), h);
    for (double b : l.bias) ASSERT_EQ(b, 0.0);
  }
  EXPECT_EQ(init({1, 1, 1, 2, 0}).parameter_count(), 6u);
}

TEST(Init, DeterministicInSeed) {
  EXPECT_EQ(init({3, 3, 784, 10, 5}), init({3, 3, 784, 10, 5}));
  EXPECT_NE(init({3, 3, 784, 10, 5}), init({3, 3, 784, 10, 6}));
  EXPECT_THROW(init({0, 3, 784, 10, 0}), ParameterError);
  EXPECT_THROW(init({3, 0, 784, 10, 0}), ParameterError);
  EXPECT_THROW(init({3, 3, 784, 1, 0}), ParameterError);
}

TEST(Forward, SoftmaxRowsSumToOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = init({7, 2, 12, 5, seed});
    for (auto& w : m.layers.back().weights) w *= 50.0;  // large logits
    const auto p = forward(m, random_batch(30, 12, seed + 100));
    for (std::size_t i = 0; i < p.rows; ++i) {
      const auto row = p.row(i);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
      for (double v : row) ASSERT_TRUE(v >= 0.0 && std::isfinite(v));
    }
  }
}

TEST(Forward, ZeroModelIsUniform) {
  const auto p = forward(zero_model({3, 3, 6, 4, 0}), random_batch(5, 6, 1));
  for (double v : p.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Forward, ShiftInvariant) {
  auto m = init({4, 2, 5, 3, 2});
  const auto batch = random_batch(10, 5, 3);
  const auto before = forward(m, batch);
  for (auto& b : m.layers.back().bias) b += 123.0;
  const auto after = forward(m, batch);
  for (std::size_t i = 0; i < before.data.size(); ++i) EXPECT_NEAR(before.data[i], after.data[i], 1e-12);
}

TEST(Forward, RejectsBadInput) {
  const auto m = init({3, 1, 4, 2, 0});
  EXPECT_THROW(forward(m, random_batch(2, 5, 0)), ParameterError);
  auto bad = random_batch(2, 4, 0);
  bad.data[3] = NAN;
  EXPECT_THROW(forward(m, bad), NumericError);
}

TEST(Gradients, MatchFiniteDifferences) {
  auto m = init({3, 2, 6, 4, 7});
  for (auto& l : m.layers) {
    for (auto& b : l.bias) b = 0.1;  // keep units away from the ReLU kink
  }
  const auto batch = random_batch(8, 6, 8);
  const std::vector<int> labels = {0, 1, 2, 3, 0, 1, 2, 3};
  const auto analytic = loss_and_grads(m, batch, labels);
  const double h = 1e-5;
  std::size_t checked = 0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    for (bool bias : {false, true}) {
      const std::size_t n = bias ? m.layers[li].bias.size() : m.layers[li].weights.size();
      for (std::size_t k = 0; k < n; ++k) {
        auto plus = m, minus = m;
        param(plus, li, bias, k) += h;
        param(minus, li, bias, k) -= h;
        const double numeric =
            (loss_and_grads(plus, batch, labels).loss - loss_and_grads(minus, batch, labels).loss) / (2 * h);
        const double g = bias ? analytic.grads[li].bias[k] : analytic.grads[li].weights[k];
        const double denom = std::max({std::abs(numeric), std::abs(g), 1e-6});
        EXPECT_LT(std::abs(numeric - g) / denom, 1e-4) << "layer " << li << (bias ? " bias " : " weight ") << k;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, m.parameter_count());
}

TEST(Loss, UniformPredictionGivesLogK) {
  const auto m = zero_model({3, 2, 6, 5, 0});
  const std::vector<int> labels = {0, 4, 2};
  EXPECT_NEAR(loss_and_grads(m, random_batch(3, 6, 1), labels).loss, std::log(5.0), 1e-12);
}

TEST(Loss, NearOptimumGradientVanishes) {
  // Output bias alone drives a confident correct prediction.
  auto m = zero_model({2, 1, 3, 2, 0});
  m.layers.back().bias = {40.0, -40.0};
  const std::vector<int> labels = {0, 0, 0, 0};
  const auto r = loss_and_grads(m, random_batch(4, 3, 2), labels);
  EXPECT_LT(r.loss, 1e-15);
  for (const auto& l : r.grads) {
    for (double g : l.bias) EXPECT_LT(std::abs(g), 1e-12);
  }
}

TEST(Loss, ClippedProbabilityStaysFinite) {
  auto m = zero_model({2, 1, 3, 2, 0});
  m.layers.back().bias = {-800.0, 800.0};
  const std::vector<int> labels = {0};
  const auto r = loss_and_grads(m, random_batch(1, 3, 2), labels);
  EXPECT_NEAR(r.loss, -std::log(kProbabilityFloor), 1e-9);
}

TEST(Training, OneSmallStepLowersLoss) {
  RngStream r(3);
  const auto data = synth_gaussians(20, 3, 4, 3.0, r);
  const auto m = init({5, 2, 4, 3, 1});
  const auto x = as_matrix(data);
  const double before = loss_and_grads(m, x, data.labels()).loss;
  const auto after = train(m, data, {1, 0, data.n_samples(), 1e-3, 0.0, 0}).model;
  EXPECT_LT(loss_and_grads(after, x, data.labels()).loss, before);
}

TEST(Training, ZeroEpochsIsNoOp) {
  RngStream r(3);
  const auto data = synth_gaussians(5, 2, 3, 3.0, r);
  const auto m = init({3, 2, 3, 2, 4});
  const auto out = train(m, data, {0, 0, 4, 0.1, 0.9, 0});
  EXPECT_EQ(out.model, m);
  EXPECT_TRUE(out.epoch_loss.empty());
}

TEST(Training, SeparableReachesHighAccuracy) {
  RngStream r(21);
  const auto data = synth_gaussians(100, 2, 2, 10.0, r);
  const auto out = train(init({8, 2, 2, 2, 3}), data, {200, 0, 16, 0.05, 0.0, 5});
  EXPECT_GE(accuracy(out.model, data), 0.95);
  EXPECT_LT(out.epoch_loss.back(), out.epoch_loss.front());
}

TEST(Training, BitIdenticalAcrossRuns) {
  RngStream r(22);
  const auto data = synth_gaussians(30, 3, 5, 2.0, r);
  const TrainConfig tc{5, 0, 7, 0.05, 0.9, 11};
  const auto a = train(init({4, 3, 5, 3, 2}), data, tc);
  const auto b = train(init({4, 3, 5, 3, 2}), data, tc);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  auto other = tc;
  other.shuffle_seed = 12;
  EXPECT_NE(train(init({4, 3, 5, 3, 2}), data, other).model, a.model);
}

TEST(Training, StepBudget) {
  RngStream r(23);
  const auto data = synth_gaussians(10, 2, 3, 2.0, r);  // 20 rows, batch 8 gives 3 updates per epoch
  const auto seven = train(init({3, 1, 3, 2, 1}), data, {99, 7, 8, 0.01, 0.0, 1});
  EXPECT_EQ(seven.epoch_loss.size(), 3u);  // 3 + 3 + 1
  const auto six = train(init({3, 1, 3, 2, 1}), data, {2, 0, 8, 0.01, 0.0, 1});
  const auto six_steps = train(init({3, 1, 3, 2, 1}), data, {99, 6, 8, 0.01, 0.0, 1});
  EXPECT_EQ(six.model, six_steps.model);
  EXPECT_EQ(six.epoch_loss, six_steps.epoch_loss);
}

TEST(Training, DivergenceRaises) {
  // Finite inputs whose activations overflow to inf.
  const Dataset data({1e300, 1e300, -1e300, 1e300}, {2}, {0, 1}, Domain::series);
  auto m = init({4, 2, 2, 2, 1});
  for (auto& l : m.layers) {
    for (auto& w : l.weights) w = 1e10;
  }
  try {
    train(m, data, {5, 0, 2, 0.1, 0.0, 0});
    ADD_FAILURE() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0, batch 0"), std::string::npos) << e.what();
  }
}

TEST(Training, RejectsBadConfig) {
  RngStream r(25);
  const auto data = synth_gaussians(5, 2, 3, 3.0, r);
  const auto m = init({3, 1, 3, 2, 0});
  EXPECT_THROW(train(m, data, {1, 0, 0, 0.1, 0.0, 0}), ParameterError);
  EXPECT_THROW(train(m, data, {1, 0, 4, 0.0, 0.0, 0}), ParameterError);
  EXPECT_THROW(train(m, data, {1, 0, 4, 0.1, 1.0, 0}), ParameterError);
  EXPECT_THROW(train(init({3, 1, 4, 2, 0}), data, {1, 0, 4, 0.1, 0.0, 0}), ParameterError);
}

TEST(Accuracy, ZeroModelPicksClassZero) {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 4);
  const Dataset d(std::vector<double>(40 * 3, 0.5), {3}, labels, Domain::image);
  EXPECT_DOUBLE_EQ(accuracy(zero_model({2, 2, 3, 4, 0}), d), 0.25);
  const Dataset empty(std::vector<double>{}, {3}, {}, Domain::image, "", 4);
  EXPECT_THROW(accuracy(zero_model({2, 2, 3, 4, 0}), empty), ParameterError);
}

TEST(Sparsity, CountsSmallMagnitudes) {
  DenseModel m;
  m.config = {1, 1, 1, 2, 0};
  m.layers = {Layer{1, 1, {0.005}, {-0.02}}, Layer{2, 1, {0.0, 1.3}, {}}};
  EXPECT_DOUBLE_EQ(sparsity(m), 0.5);
  EXPECT_DOUBLE_EQ(sparsity(zero_model({3, 3, 10, 4, 0})), 1.0);
  EXPECT_THROW(sparsity(m, 0.0), ParameterError);
}

TEST(InactiveLayer, DetectsDeadHiddenLayer) {
  RngStream r(26);
  const auto data = synth_gaussians(5, 2, 3, 3.0, r);
  auto m = init({3, 2, 3, 2, 1});
  for (auto& b : m.layers[0].bias) b = 1.0;
  for (auto& w : m.layers[0].weights) w = 0.0;
  EXPECT_FALSE(has_inactive_layer(m, data));
  for (auto& b : m.layers[1].bias) b = -100.0;
  EXPECT_TRUE(has_inactive_layer(m, data));
}

TEST(ModelIo, JsonRoundTripIsExact) {
  RngStream r(27);
  const auto data = synth_gaussians(10, 3, 4, 2.0, r);
  const auto m = train(init({5, 2, 4, 3, 9}), data, {3, 0, 4, 0.1, 0.5, 2}).model;
  const std::string text = model_to_json(m);
  const auto back = model_from_json(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(model_to_json(back), text);
  const auto path = std::filesystem::temp_directory_path() / "alphanoise-model.json";
  save_model(path, m);
  EXPECT_EQ(load_model(path), m);
  std::filesystem::remove(path);
  EXPECT_THROW(model_from_json("{\"config\": 3}"), FormatError);
}
