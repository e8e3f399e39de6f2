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

#include "feddist/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace feddist {
namespace {

struct Dims {
  std::size_t length = 0;
  std::size_t channels = 0;
};

// Activations of one example. acts[i] is the input of layer i; acts.back()
// holds the class probabilities.
struct Trace {
  std::vector<std::vector<double>> acts;
  std::vector<Dims> dims;
  std::vector<std::vector<std::size_t>> winners;  // max-pool argmax per output
};

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

void relu_inplace(std::vector<double>& z) {
  for (double& v : z) v = v > 0.0 ? v : 0.0;
}

void dense_forward(const LayerWeights& layer, const std::vector<double>& a, Dims dims,
                   std::vector<double>& out) {
  const std::size_t outs = layer.out;
  out.assign(layer.bias.begin(), layer.bias.end());
  // Channel-major flattening: row c * T + t reads a[t * C + c].
  for (std::size_t c = 0; c < dims.channels; ++c) {
    for (std::size_t t = 0; t < dims.length; ++t) {
      const double v = a[t * dims.channels + c];
      if (v == 0.0) continue;
      const double* w = layer.weights.data() + (c * dims.length + t) * outs;
      for (std::size_t o = 0; o < outs; ++o) out[o] += v * w[o];
    }
  }
}

void conv_forward(const LayerWeights& layer, const std::vector<double>& a, Dims dims,
                  std::vector<double>& out) {
  const std::size_t outs = layer.out;
  const std::size_t out_len = dims.length - layer.kernel + 1;
  const std::size_t span = layer.kernel * dims.channels;
  out.resize(out_len * outs);
  for (std::size_t t = 0; t < out_len; ++t) {
    double* y = out.data() + t * outs;
    std::copy(layer.bias.begin(), layer.bias.end(), y);
    const double* seg = a.data() + t * dims.channels;
    for (std::size_t r = 0; r < span; ++r) {
      const double v = seg[r];
      if (v == 0.0) continue;
      const double* w = layer.weights.data() + r * outs;
      for (std::size_t o = 0; o < outs; ++o) y[o] += v * w[o];
    }
  }
}

void pool_forward(const LayerWeights& layer, const std::vector<double>& a, Dims dims,
                  std::vector<double>& out, std::vector<std::size_t>& winners) {
  const std::size_t out_len = dims.length / layer.kernel;
  const std::size_t c_count = dims.channels;
  out.resize(out_len * c_count);
  winners.resize(out.size());
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t c = 0; c < c_count; ++c) {
      std::size_t best = (t * layer.kernel) * c_count + c;
      for (std::size_t j = 1; j < layer.kernel; ++j) {
        const std::size_t idx = (t * layer.kernel + j) * c_count + c;
        if (a[idx] > a[best]) best = idx;
      }
      out[t * c_count + c] = a[best];
      winners[t * c_count + c] = best;
    }
  }
}

Dims output_dims(const LayerWeights& layer, Dims in) {
  switch (layer.kind) {
    case LayerKind::kConv1d:
      return {in.length - layer.kernel + 1, layer.out};
    case LayerKind::kMaxPool1d:
      return {in.length / layer.kernel, in.channels};
    default:
      return {1, layer.out};
  }
}

void forward_example(const ModelWeights& model, std::span<const double> x, Trace& trace) {
  const std::size_t count = model.layers.size();
  trace.acts.resize(count + 1);
  trace.dims.resize(count + 1);
  trace.winners.resize(count);
  trace.acts[0].assign(x.begin(), x.end());
  trace.dims[0] = {model.input.length, model.input.channels};
  for (std::size_t i = 0; i < count; ++i) {
    const LayerWeights& layer = model.layers[i];
    const std::vector<double>& a = trace.acts[i];
    std::vector<double>& out = trace.acts[i + 1];
    const Dims dims = trace.dims[i];
    switch (layer.kind) {
      case LayerKind::kDense:
        dense_forward(layer, a, dims, out);
        if (layer.activation == Activation::kRelu) relu_inplace(out);
        break;
      case LayerKind::kSoftmaxOutput:
        dense_forward(layer, a, dims, out);
        softmax_inplace(out);
        break;
      case LayerKind::kConv1d:
        conv_forward(layer, a, dims, out);
        if (layer.activation == Activation::kRelu) relu_inplace(out);
        break;
      case LayerKind::kMaxPool1d:
        pool_forward(layer, a, dims, out, trace.winners[i]);
        break;
    }
    trace.dims[i + 1] = output_dims(layer, dims);
  }
}

void check_batch(const ModelWeights& model, const WindowSet& batch) {
  if (model.layers.empty()) throw ShapeError("model has no layers");
  if (batch.empty()) return;
  if (batch.length != model.input.length || batch.channels != model.input.channels) {
    throw ShapeError("layer 0 (" + std::string(to_string(model.layers.front().kind)) + "): expected input " +
                     std::to_string(model.input.length) + "x" + std::to_string(model.input.channels) +
                     ", got " + std::to_string(batch.length) + "x" + std::to_string(batch.channels));
  }
  if (batch.inputs.size() != batch.size() * batch.example_size()) {
    throw ShapeError("batch storage does not match its example count");
  }
}

void check_labels(std::span<const int> labels, std::size_t classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

std::vector<bool> trainable_mask(const ModelWeights& model, std::size_t frozen_prefix) {
  std::vector<bool> mask(model.layers.size(), false);
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].parameterized()) continue;
    mask[i] = ordinal >= frozen_prefix;
    ++ordinal;
  }
  return mask;
}

double class_weight(std::span<const double> weights, int label) {
  return weights.empty() ? 1.0 : weights[static_cast<std::size_t>(label)];
}

// Accumulates the gradient of scale * CE(example) into `grad`, starting from
// the logits of the output layer and stopping at the lowest trainable layer.
void backward_example(const ModelWeights& model, const Trace& trace, int label, double scale,
                      const std::vector<bool>& trainable, std::size_t stop, Gradient& grad,
                      std::vector<double>& delta, std::vector<double>& next) {
  const std::size_t count = model.layers.size();
  delta = trace.acts[count];
  delta[static_cast<std::size_t>(label)] -= 1.0;
  for (double& d : delta) d *= scale;

  for (std::size_t i = count; i-- > stop;) {
    const LayerWeights& layer = model.layers[i];
    const std::vector<double>& a = trace.acts[i];
    const std::vector<double>& y = trace.acts[i + 1];
    const Dims dims = trace.dims[i];
    const bool need_dx = i > stop;
    if (layer.activation == Activation::kRelu &&
        (layer.kind == LayerKind::kDense || layer.kind == LayerKind::kConv1d)) {
      for (std::size_t j = 0; j < delta.size(); ++j) {
        if (!(y[j] > 0.0)) delta[j] = 0.0;
      }
    }
    next.assign(need_dx ? a.size() : 0, 0.0);
    const std::size_t outs = layer.out;
    switch (layer.kind) {
      case LayerKind::kDense:
      case LayerKind::kSoftmaxOutput: {
        double* gw = trainable[i] ? grad.weights[i].data() : nullptr;
        for (std::size_t c = 0; c < dims.channels; ++c) {
          for (std::size_t t = 0; t < dims.length; ++t) {
            const std::size_t r = c * dims.length + t;
            const double v = a[t * dims.channels + c];
            const double* w = layer.weights.data() + r * outs;
            if (gw != nullptr && v != 0.0) {
              double* g = gw + r * outs;
              for (std::size_t o = 0; o < outs; ++o) g[o] += v * delta[o];
            }
            if (need_dx) {
              double s = 0.0;
              for (std::size_t o = 0; o < outs; ++o) s += w[o] * delta[o];
              next[t * dims.channels + c] = s;
            }
          }
        }
        if (trainable[i]) {
          for (std::size_t o = 0; o < outs; ++o) grad.bias[i][o] += delta[o];
        }
        break;
      }
      case LayerKind::kConv1d: {
        const std::size_t out_len = dims.length - layer.kernel + 1;
        const std::size_t span = layer.kernel * dims.channels;
        double* gw = trainable[i] ? grad.weights[i].data() : nullptr;
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* d = delta.data() + t * outs;
          const double* seg = a.data() + t * dims.channels;
          double* dseg = need_dx ? next.data() + t * dims.channels : nullptr;
          for (std::size_t r = 0; r < span; ++r) {
            const double v = seg[r];
            const double* w = layer.weights.data() + r * outs;
            if (gw != nullptr && v != 0.0) {
              double* g = gw + r * outs;
              for (std::size_t o = 0; o < outs; ++o) g[o] += v * d[o];
            }
            if (dseg != nullptr) {
              double s = 0.0;
              for (std::size_t o = 0; o < outs; ++o) s += w[o] * d[o];
              dseg[r] += s;
            }
          }
          if (trainable[i]) {
            for (std::size_t o = 0; o < outs; ++o) grad.bias[i][o] += d[o];
          }
        }
        break;
      }
      case LayerKind::kMaxPool1d: {
        if (need_dx) {
          const std::vector<std::size_t>& win = trace.winners[i];
          for (std::size_t j = 0; j < delta.size(); ++j) next[win[j]] += delta[j];
        }
        break;
      }
    }
    if (!need_dx) break;
    delta.swap(next);
  }
}

double data_objective(const ModelWeights& model, const WindowSet& data, std::span<const std::size_t> indices,
                      const TrainingConfig& cfg, const std::vector<bool>& trainable, std::size_t stop,
                      Gradient* grad) {
  Trace trace;
  std::vector<double> delta;
  std::vector<double> next;
  const double inv = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  for (std::size_t idx : indices) {
    forward_example(model, data.example(idx), trace);
    const int label = data.labels[idx];
    const double w = class_weight(cfg.class_weights, label);
    const double p = trace.acts.back()[static_cast<std::size_t>(label)];
    total += -w * std::log(std::max(p, kLogClampEpsilon));
    if (grad != nullptr && stop < model.layers.size()) {
      backward_example(model, trace, label, w * inv, trainable, stop, *grad, delta, next);
    }
  }
  return total * inv;
}

double proximal_term(const ModelWeights& model, const TrainingConfig& cfg, const std::vector<bool>& trainable,
                     Gradient* grad) {
  if (cfg.proximal_coefficient == 0.0) return 0.0;
  const ModelWeights& ref = *cfg.reference;
  const double mu = cfg.proximal_coefficient;
  double sq = 0.0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!trainable[i]) continue;
    const LayerWeights& layer = model.layers[i];
    const LayerWeights& anchor = ref.layers[i];
    for (std::size_t j = 0; j < layer.weights.size(); ++j) {
      const double diff = layer.weights[j] - anchor.weights[j];
      sq += diff * diff;
      if (grad != nullptr) grad->weights[i][j] += mu * diff;
    }
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
      const double diff = layer.bias[j] - anchor.bias[j];
      sq += diff * diff;
      if (grad != nullptr) grad->bias[i][j] += mu * diff;
    }
  }
  return 0.5 * mu * sq;
}

Gradient zero_gradient(const ModelWeights& model, const std::vector<bool>& trainable) {
  Gradient grad;
  grad.weights.resize(model.layers.size());
  grad.bias.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!trainable[i]) continue;
    grad.weights[i].assign(model.layers[i].weights.size(), 0.0);
    grad.bias[i].assign(model.layers[i].bias.size(), 0.0);
  }
  return grad;
}

void reset(Gradient& grad) {
  for (auto& w : grad.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : grad.bias) std::fill(b.begin(), b.end(), 0.0);
}

std::size_t first_trainable(const std::vector<bool>& trainable) {
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    if (trainable[i]) return i;
  }
  return trainable.size();
}

bool same_shape(const ModelWeights& a, const ModelWeights& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weights.size() != b.layers[i].weights.size() ||
        a.layers[i].bias.size() != b.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

void TrainingConfig::validate(const ModelWeights& model) const {
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (proximal_coefficient < 0.0 || !std::isfinite(proximal_coefficient)) {
    throw ConfigError("proximal_coefficient must be >= 0");
  }
  if (proximal_coefficient > 0.0 && (!reference || !same_shape(*reference, model))) {
    throw ConfigError("proximal term needs shape-compatible reference weights");
  }
  if (frozen_prefix > model.parameterized_layers().size()) {
    throw ConfigError("frozen_prefix exceeds the parameterized layer count");
  }
  if (!class_weights.empty()) {
    if (class_weights.size() != model.classes()) throw ConfigError("one class weight per class required");
    for (double w : class_weights) {
      if (!(w > 0.0)) throw ConfigError("class weights must be positive");
    }
  }
}

ModelWeights initialize_model(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  ModelWeights model;
  model.input = arch.input;
  std::size_t length = arch.input.length;
  std::size_t channels = arch.input.channels;
  for (const LayerSpec& spec : arch.layers) {
    LayerWeights layer;
    layer.kind = spec.kind;
    layer.activation = spec.kind == LayerKind::kSoftmaxOutput ? Activation::kNone : spec.activation;
    layer.kernel = spec.kernel;
    switch (spec.kind) {
      case LayerKind::kConv1d:
        layer.in = channels;
        layer.out = spec.width;
        length = length - spec.kernel + 1;
        channels = spec.width;
        break;
      case LayerKind::kMaxPool1d:
        layer.in = layer.out = channels;
        length /= spec.kernel;
        break;
      default:
        layer.kernel = 1;
        layer.in = length * channels;
        layer.out = spec.width;
        length = 1;
        channels = spec.width;
        break;
    }
    if (layer.parameterized()) {
      const double fan_in = static_cast<double>(layer.fan_in());
      const double limit = layer.is_output() ? std::sqrt(6.0 / (fan_in + static_cast<double>(layer.out)))
                                             : std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> dist(-limit, limit);
      layer.weights.resize(layer.fan_in() * layer.out);
      for (double& w : layer.weights) w = dist(rng);
      layer.bias.assign(layer.out, 0.0);
    }
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

ProbabilityMatrix forward(const ModelWeights& model, const WindowSet& batch) {
  model.validate();
  check_batch(model, batch);
  ProbabilityMatrix probs;
  probs.rows = batch.size();
  probs.cols = model.classes();
  probs.values.resize(probs.rows * probs.cols);
  Trace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_example(model, batch.example(i), trace);
    std::copy(trace.acts.back().begin(), trace.acts.back().end(), probs.values.begin() + i * probs.cols);
  }
  return probs;
}

double loss(const ProbabilityMatrix& probabilities, std::span<const int> labels,
            std::span<const double> class_weights) {
  if (labels.size() != probabilities.rows) throw DataError("label count does not match probability rows");
  if (labels.empty()) return 0.0;
  check_labels(labels, probabilities.cols);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probabilities.row(i)[static_cast<std::size_t>(labels[i])];
    total += -class_weight(class_weights, labels[i]) * std::log(std::max(p, kLogClampEpsilon));
  }
  return total / static_cast<double>(labels.size());
}

std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (int y : labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < classes) ++counts[static_cast<std::size_t>(y)];
  }
  std::vector<double> weights(classes, 1.0);
  const double total = static_cast<double>(labels.size());
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] > 0) weights[c] = total / (static_cast<double>(classes) * static_cast<double>(counts[c]));
  }
  return weights;
}

double objective_and_gradient(const ModelWeights& model, const WindowSet& batch, const TrainingConfig& cfg,
                              Gradient* gradient) {
  model.validate();
  check_batch(model, batch);
  check_labels(batch.labels, model.classes());
  const std::vector<bool> trainable = trainable_mask(model, cfg.frozen_prefix);
  if (gradient != nullptr) *gradient = zero_gradient(model, trainable);
  if (batch.empty()) return 0.0;
  std::vector<std::size_t> indices(batch.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  double value = data_objective(model, batch, indices, cfg, trainable, first_trainable(trainable), gradient);
  value += proximal_term(model, cfg, trainable, gradient);
  return value;
}

TrainResult train_local(const ModelWeights& model, const WindowSet& data, const TrainingConfig& cfg,
                        std::uint64_t seed) {
  model.validate();
  cfg.validate(model);
  TrainResult result{model, {}};
  if (data.empty()) return result;
  check_batch(model, data);
  check_labels(data.labels, model.classes());

  ModelWeights& w = result.model;
  const std::vector<bool> trainable = trainable_mask(w, cfg.frozen_prefix);
  const std::size_t stop = first_trainable(trainable);
  Gradient grad = zero_gradient(w, trainable);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool step = cfg.learning_rate != 0.0 && stop < w.layers.size();
  const bool round_f32 = cfg.precision == Precision::kFloat32;

  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      reset(grad);
      const double batch_loss = data_objective(w, data, batch, cfg, trainable, stop, step ? &grad : nullptr);
      epoch_total += batch_loss * static_cast<double>(batch.size());
      if (!step) continue;
      proximal_term(w, cfg, trainable, &grad);
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < w.layers.size(); ++i) {
        if (!trainable[i]) continue;
        LayerWeights& layer = w.layers[i];
        for (std::size_t j = 0; j < layer.weights.size(); ++j) layer.weights[j] -= lr * grad.weights[i][j];
        for (std::size_t j = 0; j < layer.bias.size(); ++j) layer.bias[j] -= lr * grad.bias[i][j];
        if (round_f32) {
          for (double& v : layer.weights) v = static_cast<double>(static_cast<float>(v));
          for (double& v : layer.bias) v = static_cast<double>(static_cast<float>(v));
        }
      }
    }
    result.epoch_losses.push_back(epoch_total / static_cast<double>(data.size()));
  }
  return result;
}

double gradient_check(const ModelWeights& model, const WindowSet& batch, const TrainingConfig& cfg,
                      const GradientCheckOptions& options) {
  if (!(options.epsilon > 1e-7 && options.epsilon < 1e-3)) {
    throw ConfigError("gradient_check epsilon must lie in (1e-7, 1e-3)");
  }
  for (const LayerWeights& layer : model.layers) {
    for (double v : layer.weights) {
      if (!std::isfinite(v)) throw DataError("non-finite parameter in model");
    }
    for (double v : layer.bias) {
      if (!std::isfinite(v)) throw DataError("non-finite parameter in model");
    }
  }
  Gradient analytic;
  objective_and_gradient(model, batch, cfg, &analytic);

  ModelWeights probe = model;
  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  auto check_tensor = [&](std::size_t layer, bool is_bias) {
    std::vector<double>& params = is_bias ? probe.layers[layer].bias : probe.layers[layer].weights;
    const std::vector<double>& grads = is_bias ? analytic.bias[layer] : analytic.weights[layer];
    std::vector<std::size_t> picks(params.size());
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    if (options.samples_per_tensor > 0 && options.samples_per_tensor < picks.size()) {
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(options.samples_per_tensor);
      std::sort(picks.begin(), picks.end());
    }
    for (std::size_t j : picks) {
      const double a = grads[j];
      if (!std::isfinite(a)) {
        throw DataError("non-finite gradient at layer " + std::to_string(layer) + (is_bias ? " bias[" : " weights[") +
                        std::to_string(j) + "]");
      }
      const double original = params[j];
      params[j] = original + options.epsilon;
      const double plus = objective_and_gradient(probe, batch, cfg, nullptr);
      params[j] = original - options.epsilon;
      const double minus = objective_and_gradient(probe, batch, cfg, nullptr);
      params[j] = original;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      worst = std::max(worst, rel);
    }
  };
  const std::vector<bool> trainable = trainable_mask(model, cfg.frozen_prefix);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!trainable[i]) continue;
    check_tensor(i, false);
    check_tensor(i, true);
  }
  return worst;
}

std::vector<int> argmax_rows(const ProbabilityMatrix& probabilities) {
  std::vector<int> out(probabilities.rows, 0);
  for (std::size_t i = 0; i < probabilities.rows; ++i) {
    const auto row = probabilities.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> evaluate(const ModelWeights& model, const WindowSet& data) {
  return argmax_rows(forward(model, data));
}

}  // namespace feddist
