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
#include <optional>
#include <vector>

#include "feddist/layer_spec.hpp"

namespace feddist {

/// Parameters of one layer.
///
/// Dense and softmax-output layers store `weights` as [in x out] row-major,
/// where `in` is the flattened fan-in. A dense layer that follows a
/// convolution/pool sees its input flattened channel-major (index c * T + t),
/// so every input channel owns a contiguous block of T rows.
///
/// Conv1d layers store `weights` as [kernel x in x out] row-major with `in`
/// the input channel count (valid padding, stride 1).
///
/// Max-pool layers carry no parameters; `in` and `out` both hold the channel
/// count and `kernel` the pool size (stride equals pool size).
struct LayerWeights {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kRelu;
  std::size_t kernel = 1;
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool parameterized() const { return kind != LayerKind::kMaxPool1d; }
  bool is_output() const { return kind == LayerKind::kSoftmaxOutput; }

  /// Number of incoming weights per unit (excluding bias).
  std::size_t fan_in() const;
  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  /// Weight at (row, unit), rows in storage order of the fan-in.
  double weight(std::size_t row, std::size_t unit) const { return weights[row * out + unit]; }
  double& weight(std::size_t row, std::size_t unit) { return weights[row * out + unit]; }

  bool operator==(const LayerWeights&) const = default;
};

/// An ordered stack of layers plus the input contract. Layer indices used
/// throughout the library are absolute positions in `layers` (pools included);
/// "parameterized ordinal" refers to the position among parameterized layers
/// only.
struct ModelWeights {
  InputShape input;
  std::vector<LayerWeights> layers;

  /// Output width of every layer.
  std::vector<std::size_t> shape_signature() const;
  std::size_t parameter_count() const;
  std::size_t classes() const;

  std::vector<std::size_t> parameterized_layers() const;
  /// Absolute index of the next parameterized layer above `layer`.
  std::optional<std::size_t> successor_of(std::size_t layer) const;

  /// Throws ShapeError naming the first layer whose dimensions are
  /// inconsistent with its predecessor.
  void validate() const;

  bool operator==(const ModelWeights&) const = default;
};

Architecture architecture_of(const ModelWeights& model);

}  // namespace feddist
