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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "feddist/common.hpp"
#include "feddist/dataset.hpp"
#include "feddist/model.hpp"

namespace feddist {

/// Row-major [examples x classes] matrix of class probabilities.
struct ProbabilityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Lower bound applied to the true-class probability inside the logarithm.
inline constexpr double kLogClampEpsilon = 1e-12;

struct TrainingConfig {
  std::size_t local_epochs = 5;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  /// Per-class loss weights; empty means unit weights.
  std::vector<double> class_weights;
  /// Count of leading parameterized layers excluded from updates.
  std::size_t frozen_prefix = 0;
  /// Coefficient mu of the (mu/2)||w - reference||^2 regularizer; 0 disables.
  double proximal_coefficient = 0.0;
  std::shared_ptr<const ModelWeights> reference;
  /// kFloat32 rounds every parameter to single precision after each step.
  Precision precision = Precision::kFloat64;

  void validate(const ModelWeights& model) const;
};

struct TrainResult {
  ModelWeights model;
  std::vector<double> epoch_losses;
};

/// He-uniform initialization for hidden layers, Glorot-uniform for the output,
/// zero biases.
ModelWeights initialize_model(const Architecture& arch, std::uint64_t seed);

ProbabilityMatrix forward(const ModelWeights& model, const WindowSet& batch);

/// Weighted mean of per-example cross-entropy, -w_y * log(max(p_y, eps)),
/// divided by the example count.
double loss(const ProbabilityMatrix& probabilities, std::span<const int> labels,
            std::span<const double> class_weights);

/// Balanced heuristic: total / (classes * count_c). Classes absent from
/// `labels` get weight 1 (they never contribute to the loss).
std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t classes);

/// Mini-batch SGD (no momentum) over `data` for cfg.local_epochs epochs.
/// Batch order is reshuffled every epoch from a stream seeded by `seed`.
/// An empty dataset returns the input model and an empty loss sequence.
TrainResult train_local(const ModelWeights& model, const WindowSet& data, const TrainingConfig& cfg,
                        std::uint64_t seed);

/// Objective (weighted loss plus proximal term) and its gradient over the
/// whole of `batch`, laid out like the model's parameters. Frozen layers get
/// empty gradient vectors.
struct Gradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};
double objective_and_gradient(const ModelWeights& model, const WindowSet& batch,
                              const TrainingConfig& cfg, Gradient* gradient);

struct GradientCheckOptions {
  double epsilon = 1e-5;
  /// Parameters probed per weight/bias tensor; 0 probes every parameter.
  std::size_t samples_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Largest |analytic - numeric| / max(|analytic| + |numeric|, 1e-6) over the
/// probed trainable parameters, numeric gradients from central differences.
double gradient_check(const ModelWeights& model, const WindowSet& batch, const TrainingConfig& cfg,
                      const GradientCheckOptions& options = {});

/// Row-wise argmax; ties resolve to the lowest class index.
std::vector<int> argmax_rows(const ProbabilityMatrix& probabilities);
std::vector<int> evaluate(const ModelWeights& model, const WindowSet& data);

}  // namespace feddist
