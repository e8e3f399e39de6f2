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

#include "feddist/model.hpp"

#include <string>

#include "feddist/common.hpp"

namespace feddist {

std::size_t LayerWeights::fan_in() const {
  switch (kind) {
    case LayerKind::kConv1d:
      return kernel * in;
    case LayerKind::kMaxPool1d:
      return 0;
    default:
      return in;
  }
}

std::vector<std::size_t> ModelWeights::shape_signature() const {
  std::vector<std::size_t> widths;
  widths.reserve(layers.size());
  for (const LayerWeights& layer : layers) widths.push_back(layer.out);
  return widths;
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t total = 0;
  for (const LayerWeights& layer : layers) total += layer.parameter_count();
  return total;
}

std::size_t ModelWeights::classes() const { return layers.empty() ? 0 : layers.back().out; }

std::vector<std::size_t> ModelWeights::parameterized_layers() const {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].parameterized()) indices.push_back(i);
  }
  return indices;
}

std::optional<std::size_t> ModelWeights::successor_of(std::size_t layer) const {
  for (std::size_t i = layer + 1; i < layers.size(); ++i) {
    if (layers[i].parameterized()) return i;
  }
  return std::nullopt;
}

void ModelWeights::validate() const {
  std::size_t length = input.length;
  std::size_t channels = input.channels;
  bool flat = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerWeights& layer = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(layer.kind)) + ")";
    if (layer.out == 0) throw ShapeError(where + ": zero width");
    switch (layer.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kMaxPool1d: {
        if (flat) throw ShapeError(where + ": cannot follow a dense layer");
        if (layer.in != channels) {
          throw ShapeError(where + ": expects " + std::to_string(layer.in) + " input channels, got " +
                           std::to_string(channels));
        }
        if (layer.kernel == 0 || layer.kernel > length) throw ShapeError(where + ": invalid kernel");
        if (layer.kind == LayerKind::kConv1d) {
          length = length - layer.kernel + 1;
        } else {
          if (layer.out != layer.in) throw ShapeError(where + ": pool must preserve channels");
          length /= layer.kernel;
        }
        channels = layer.out;
        break;
      }
      case LayerKind::kDense:
      case LayerKind::kSoftmaxOutput: {
        if (layer.in != length * channels) {
          throw ShapeError(where + ": expects fan-in " + std::to_string(layer.in) + ", got " +
                           std::to_string(length * channels));
        }
        length = 1;
        channels = layer.out;
        flat = true;
        break;
      }
    }
    if (layer.parameterized()) {
      if (layer.weights.size() != layer.fan_in() * layer.out || layer.bias.size() != layer.out) {
        throw ShapeError(where + ": parameter storage does not match its dimensions");
      }
    } else if (!layer.weights.empty() || !layer.bias.empty()) {
      throw ShapeError(where + ": pool layers carry no parameters");
    }
  }
  if (!layers.empty() && !layers.back().is_output()) {
    throw ShapeError("last layer must be a softmax output");
  }
}

Architecture architecture_of(const ModelWeights& model) {
  Architecture arch;
  arch.input = model.input;
  for (const LayerWeights& layer : model.layers) {
    arch.layers.push_back({layer.kind, layer.out, layer.kernel, layer.activation});
  }
  return arch;
}

}  // namespace feddist
