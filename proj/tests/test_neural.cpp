/**
 * Copyright 2026 The FedDist Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "feddist/nn.hpp"
#include "test_support.hpp"

namespace feddist {
namespace {

using testing::arch;
using testing::conv;
using testing::dense;
using testing::pool;
using testing::random_model;
using testing::random_windows;
using testing::softmax;

LayerWeights dense_layer(LayerKind kind, std::size_t in, std::size_t out, std::vector<double> w,
                         std::vector<double> b, Activation act = Activation::kNone) {
  return LayerWeights{kind, act, 1, in, out, std::move(w), std::move(b)};
}

TEST(Forward, IdentityLayerOnZeroInputIsUniform) {
  ModelWeights m;
  m.input = {1, 2};
  m.layers.push_back(dense_layer(LayerKind::kDense, 2, 2, {1, 0, 0, 1}, {0, 0}));
  m.layers.push_back(dense_layer(LayerKind::kSoftmaxOutput, 2, 2, {1, 0, 0, 1}, {0, 0}));
  WindowSet batch(1, 2);
  batch.push_back(std::vector<double>{0.0, 0.0}, 0);
  const ProbabilityMatrix p = forward(m, batch);
  EXPECT_DOUBLE_EQ(p.row(0)[0], 0.5);
  EXPECT_DOUBLE_EQ(p.row(0)[1], 0.5);
}

TEST(Forward, RowsSumToOneOverManyRandomSamples) {
  std::size_t samples = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelWeights m = random_model(arch(12, 3, {conv(4, 3), pool(2), dense(6), softmax(5)}), seed, 1.0);
    const WindowSet batch = random_windows(12, 3, 120, 5, seed + 100);
    const ProbabilityMatrix p = forward(m, batch);
    for (std::size_t i = 0; i < p.rows; ++i) {
      double sum = 0.0;
      for (double v : p.row(i)) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
      ++samples;
    }
  }
  EXPECT_GE(samples, 1000u);
}

TEST(Forward, TwoLayerDenseMatchesHandComputedChain) {
  ModelWeights m;
  m.input = {1, 2};
  m.layers.push_back(dense_layer(LayerKind::kDense, 2, 2, {0.5, -1.0, 0.25, 2.0}, {0.1, -0.2}, Activation::kRelu));
  m.layers.push_back(dense_layer(LayerKind::kSoftmaxOutput, 2, 3, {1.0, -1.0, 0.5, 0.3, 0.2, -0.4}, {0.0, 0.1, 0.2}));
  WindowSet batch(1, 2);
  batch.push_back(std::vector<double>{1.0, 2.0}, 0);
  // h = relu([1*0.5 + 2*0.25 + 0.1, 1*-1 + 2*2 - 0.2]) = (1.1, 2.8)
  const double h0 = 1.1;
  const double h1 = 2.8;
  const double z0 = h0 * 1.0 + h1 * 0.3 + 0.0;
  const double z1 = h0 * -1.0 + h1 * 0.2 + 0.1;
  const double z2 = h0 * 0.5 + h1 * -0.4 + 0.2;
  const double s = std::exp(z0) + std::exp(z1) + std::exp(z2);
  const ProbabilityMatrix p = forward(m, batch);
  EXPECT_NEAR(p.row(0)[0], std::exp(z0) / s, 1e-12);
  EXPECT_NEAR(p.row(0)[1], std::exp(z1) / s, 1e-12);
  EXPECT_NEAR(p.row(0)[2], std::exp(z2) / s, 1e-12);
  const auto oracle = testing::dense_chain_oracle(m, {1.0, 2.0});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p.row(0)[c], oracle[c], 1e-12);
}

TEST(Forward, ShapeMismatchNamesTheLayer) {
  const ModelWeights m = random_model(arch(8, 2, {dense(4), softmax(2)}), 1);
  const WindowSet wrong = random_windows(7, 2, 2, 2, 1);
  try {
    forward(m, wrong);
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(Loss, PerfectPredictionIsZero) {
  ProbabilityMatrix p{2, 2, {1.0, 0.0, 0.0, 1.0}};
  const std::vector<int> labels{0, 1};
  EXPECT_LT(loss(p, labels, {}), 1e-6);
}

TEST(Loss, UniformPredictionIsLogC) {
  const std::size_t classes = 7;
  ProbabilityMatrix p{3, classes, std::vector<double>(3 * classes, 1.0 / classes)};
  const std::vector<int> labels{0, 3, 6};
  EXPECT_NEAR(loss(p, labels, {}), std::log(static_cast<double>(classes)), 1e-12);
}

TEST(Loss, WeightedHandArithmetic) {
  ProbabilityMatrix p{2, 2, {0.5, 0.5, 0.75, 0.25}};
  const std::vector<int> labels{0, 1};
  const std::vector<double> weights{1.0, 3.0};
  EXPECT_NEAR(loss(p, labels, weights), (1.0 * std::log(2.0) + 3.0 * std::log(4.0)) / 2.0, 1e-12);
}

TEST(Loss, ZeroProbabilityIsClamped) {
  ProbabilityMatrix p{1, 2, {1.0, 0.0}};
  const std::vector<int> labels{1};
  EXPECT_NEAR(loss(p, labels, {}), -std::log(kLogClampEpsilon), 1e-9);
}

TEST(ClassWeights, BalancedHeuristic) {
  const std::vector<int> labels{0, 0, 0, 1};
  const auto w = balanced_class_weights(labels, 3);
  EXPECT_DOUBLE_EQ(w[0], 4.0 / (3.0 * 3.0));
  EXPECT_DOUBLE_EQ(w[1], 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
}

TEST(TrainLocal, ZeroLearningRateKeepsWeights) {
  const ModelWeights m = random_model(arch(10, 2, {conv(3, 3), pool(2), dense(4), softmax(3)}), 2);
  TrainingConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.local_epochs = 3;
  const TrainResult r = train_local(m, random_windows(10, 2, 20, 3, 5), cfg, 9);
  EXPECT_EQ(r.model, m);
  EXPECT_EQ(r.epoch_losses.size(), 3u);
}

TEST(TrainLocal, FullyFrozenKeepsWeights) {
  const ModelWeights m = random_model(arch(10, 2, {conv(3, 3), pool(2), dense(4), softmax(3)}), 2);
  TrainingConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.frozen_prefix = m.parameterized_layers().size();
  const TrainResult r = train_local(m, random_windows(10, 2, 20, 3, 5), cfg, 9);
  EXPECT_EQ(r.model, m);
}

TEST(TrainLocal, EmptyDatasetIsNoOp) {
  const ModelWeights m = random_model(arch(4, 1, {dense(3), softmax(2)}), 2);
  const TrainResult r = train_local(m, WindowSet(4, 1), TrainingConfig{}, 1);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(TrainLocal, FrozenPrefixIsBitIdenticalForRandomConfigs) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const ModelWeights m =
        random_model(arch(10, 2, {conv(3, 3), pool(2), dense(5), dense(4), softmax(3)}), static_cast<std::uint64_t>(trial));
    TrainingConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.local_epochs = 1 + trial % 3;
    cfg.batch_size = 1 + static_cast<std::size_t>(rng() % 8);
    cfg.frozen_prefix = static_cast<std::size_t>(rng() % 4);
    const TrainResult r = train_local(m, random_windows(10, 2, 16, 3, rng()), cfg, rng());
    const auto params = m.parameterized_layers();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const std::size_t l = params[p];
      if (p < cfg.frozen_prefix) {
        EXPECT_EQ(r.model.layers[l], m.layers[l]) << "trial " << trial << " layer " << l;
      }
    }
    EXPECT_NE(r.model.layers.back(), m.layers.back());
    EXPECT_EQ(r.epoch_losses.size(), cfg.local_epochs);
  }
}

TEST(TrainLocal, DeterministicForFixedSeed) {
  const ModelWeights m = random_model(arch(10, 2, {conv(3, 3), pool(2), dense(4), softmax(3)}), 4);
  const WindowSet data = random_windows(10, 2, 30, 3, 8);
  TrainingConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 4;
  const TrainResult a = train_local(m, data, cfg, 123);
  const TrainResult b = train_local(m, data, cfg, 123);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  const TrainResult c = train_local(m, data, cfg, 124);
  EXPECT_NE(a.model, c.model);
}

// Exhaustive search over directions and thresholds: the set is linearly
// separable iff some (theta, threshold) splits it perfectly.
bool linearly_separable(const WindowSet& data) {
  for (int step = 0; step < 3600; ++step) {
    const double theta = 2.0 * std::numbers::pi * step / 3600.0;
    const double cx = std::cos(theta);
    const double cy = std::sin(theta);
    double max0 = -1e300;
    double min1 = 1e300;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.example(i);
      const double proj = cx * x[0] + cy * x[1];
      if (data.labels[i] == 0) max0 = std::max(max0, proj);
      else min1 = std::min(min1, proj);
    }
    if (max0 < min1) return true;
  }
  return false;
}

TEST(TrainLocal, LearnsLinearlySeparableToySet) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.4);
  WindowSet data(1, 2);
  for (int i = 0; i < 100; ++i) {
    const int label = i % 2;
    const double sx = label == 0 ? -1.5 : 1.5;
    const double sy = label == 0 ? -1.0 : 1.0;
    data.push_back(std::vector<double>{sx + noise(rng), sy + noise(rng)}, label);
  }
  ASSERT_TRUE(linearly_separable(data));
  const ModelWeights m = initialize_model(arch(1, 2, {dense(8), softmax(2)}), 11);
  TrainingConfig cfg;
  cfg.local_epochs = 50;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 8;
  const TrainResult r = train_local(m, data, cfg, 5);
  const auto pred = evaluate(r.model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(data.size()), 0.95);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(TrainLocal, Float32PrecisionRoundsParameters) {
  const ModelWeights m = random_model(arch(6, 1, {dense(4), softmax(2)}), 4);
  TrainingConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.precision = Precision::kFloat32;
  const TrainResult r = train_local(m, random_windows(6, 1, 10, 2, 3), cfg, 1);
  for (const LayerWeights& l : r.model.layers) {
    for (double v : l.weights) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
}

TEST(Proximal, ZeroCoefficientEqualsPlainTraining) {
  const ModelWeights m = random_model(arch(8, 2, {dense(5), softmax(3)}), 6);
  const WindowSet data = random_windows(8, 2, 24, 3, 6);
  TrainingConfig plain;
  plain.learning_rate = 0.05;
  TrainingConfig prox = plain;
  prox.proximal_coefficient = 0.0;
  prox.reference = std::make_shared<const ModelWeights>(random_model(arch(8, 2, {dense(5), softmax(3)}), 99));
  EXPECT_EQ(train_local(m, data, plain, 3).model, train_local(m, data, prox, 3).model);
}

TEST(Proximal, FirstStepAtReferenceMatchesPlainStep) {
  const ModelWeights m = random_model(arch(8, 2, {dense(5), softmax(3)}), 6);
  const WindowSet data = random_windows(8, 2, 24, 3, 6);
  TrainingConfig plain;
  plain.learning_rate = 0.05;
  plain.local_epochs = 1;
  plain.batch_size = data.size();
  TrainingConfig prox = plain;
  prox.proximal_coefficient = 5.0;
  prox.reference = std::make_shared<const ModelWeights>(m);
  EXPECT_EQ(train_local(m, data, plain, 3).model, train_local(m, data, prox, 3).model);
}

TEST(Proximal, ObjectiveAddsHalfMuSquaredDistance) {
  const Architecture a = arch(8, 2, {dense(5), softmax(3)});
  const ModelWeights m = random_model(a, 6);
  const ModelWeights ref = random_model(a, 7);
  const WindowSet data = random_windows(8, 2, 10, 3, 6);
  TrainingConfig plain;
  TrainingConfig prox;
  prox.proximal_coefficient = 0.3;
  prox.reference = std::make_shared<const ModelWeights>(ref);
  double sq = 0.0;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    for (std::size_t j = 0; j < m.layers[i].weights.size(); ++j) {
      sq += std::pow(m.layers[i].weights[j] - ref.layers[i].weights[j], 2);
    }
    for (std::size_t j = 0; j < m.layers[i].bias.size(); ++j) sq += std::pow(m.layers[i].bias[j] - ref.layers[i].bias[j], 2);
  }
  const double base = objective_and_gradient(m, data, plain, nullptr);
  EXPECT_NEAR(objective_and_gradient(m, data, prox, nullptr), base + 0.15 * sq, 1e-10);
  TrainingConfig bad = prox;
  bad.reference.reset();
  EXPECT_THROW(train_local(m, data, bad, 1), ConfigError);
}

TEST(GradientCheck, SingleSoftmaxLayerWithFourParameters) {
  ModelWeights m;
  m.input = {1, 1};
  m.layers.push_back(dense_layer(LayerKind::kSoftmaxOutput, 1, 2, {0.3, -0.7}, {0.1, 0.05}));
  ASSERT_EQ(m.parameter_count(), 4u);
  const WindowSet batch = random_windows(1, 1, 6, 2, 4);
  EXPECT_LT(gradient_check(m, batch, TrainingConfig{}), 1e-4);
}

TEST(GradientCheck, ZeroInputGivesZeroConvGradient) {
  ModelWeights m = initialize_model(arch(8, 2, {conv(3, 3), dense(4), softmax(2)}), 5);
  WindowSet batch(8, 2);
  batch.push_back(std::vector<double>(16, 0.0), 0);
  batch.push_back(std::vector<double>(16, 0.0), 1);
  Gradient g;
  objective_and_gradient(m, batch, TrainingConfig{}, &g);
  const double base = objective_and_gradient(m, batch, TrainingConfig{}, nullptr);
  for (std::size_t j = 0; j < g.weights[0].size(); ++j) {
    EXPECT_EQ(g.weights[0][j], 0.0);
    const double original = m.layers[0].weights[j];
    m.layers[0].weights[j] = original + 1e-4;
    const double plus = objective_and_gradient(m, batch, TrainingConfig{}, nullptr);
    m.layers[0].weights[j] = original - 1e-4;
    const double minus = objective_and_gradient(m, batch, TrainingConfig{}, nullptr);
    m.layers[0].weights[j] = original;
    EXPECT_EQ(plus, base);
    EXPECT_EQ(minus, base);
  }
}

TEST(GradientCheck, EveryLayerKind) {
  const ModelWeights m = random_model(arch(12, 3, {conv(4, 3), pool(2), dense(5), softmax(3)}), 21);
  const WindowSet batch = random_windows(12, 3, 5, 3, 22);
  TrainingConfig cfg;
  cfg.class_weights = {1.0, 2.0, 0.5};
  EXPECT_LT(gradient_check(m, batch, cfg), 1e-4);
  cfg.frozen_prefix = 1;
  EXPECT_LT(gradient_check(m, batch, cfg), 1e-4);
  cfg.proximal_coefficient = 0.7;
  cfg.reference = std::make_shared<const ModelWeights>(random_model(arch(12, 3, {conv(4, 3), pool(2), dense(5), softmax(3)}), 3));
  EXPECT_LT(gradient_check(m, batch, cfg), 1e-4);
}

TEST(GradientCheck, ReferenceShapedModelAtOneEighthScale) {
  const ModelWeights m = random_model(arch(128, 6, {conv(24, 16), pool(4), dense(128), softmax(8)}), 31);
  const WindowSet batch = random_windows(128, 6, 3, 8, 32);
  GradientCheckOptions opts;
  opts.samples_per_tensor = 24;
  opts.seed = 5;
  EXPECT_LT(gradient_check(m, batch, TrainingConfig{}, opts), 1e-4);
}

TEST(GradientCheck, RejectsEpsilonOutsideRange) {
  const ModelWeights m = random_model(arch(4, 1, {dense(3), softmax(2)}), 1);
  const WindowSet batch = random_windows(4, 1, 2, 2, 1);
  EXPECT_THROW(gradient_check(m, batch, TrainingConfig{}, {1e-8, 0, 0}), ConfigError);
  EXPECT_THROW(gradient_check(m, batch, TrainingConfig{}, {1e-2, 0, 0}), ConfigError);
}

TEST(GradientCheck, DeterministicAndRejectsNonFinite) {
  ModelWeights m = random_model(arch(6, 2, {conv(2, 2), dense(3), softmax(2)}), 8);
  const WindowSet batch = random_windows(6, 2, 4, 2, 8);
  EXPECT_EQ(gradient_check(m, batch, TrainingConfig{}), gradient_check(m, batch, TrainingConfig{}));
  m.layers[0].weights[0] = std::nan("");
  EXPECT_THROW(gradient_check(m, batch, TrainingConfig{}), DataError);
}

TEST(Evaluate, ArgmaxAndTieBreak) {
  ProbabilityMatrix p{2, 2, {0.2, 0.8, 0.5, 0.5}};
  EXPECT_EQ(argmax_rows(p), (std::vector<int>{1, 0}));
}

TEST(Evaluate, MatchesBruteForceArgmaxOverForward) {
  const ModelWeights m = random_model(arch(10, 2, {conv(3, 3), pool(2), dense(4), softmax(4)}), 12, 1.0);
  const WindowSet data = random_windows(10, 2, 50, 4, 13);
  const ProbabilityMatrix p = forward(m, data);
  const auto pred = evaluate(m, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int best = 0;
    for (int c = 1; c < 4; ++c) {
      if (p.row(i)[static_cast<std::size_t>(c)] > p.row(i)[static_cast<std::size_t>(best)]) best = c;
    }
    EXPECT_EQ(pred[i], best);
  }
}

}  // namespace
}  // namespace feddist
