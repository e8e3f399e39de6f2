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

#include "feddist/fabric.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace feddist {
namespace {

std::string layer_name(const ModelWeights& model, std::size_t i) {
  return "layer " + std::to_string(i) + " (" + std::string(to_string(model.layers[i].kind)) + ")";
}

const LayerWeights& parameterized_layer(const ModelWeights& model, std::size_t layer) {
  if (layer >= model.layers.size()) throw ShapeError("layer index " + std::to_string(layer) + " out of range");
  const LayerWeights& l = model.layers[layer];
  if (!l.parameterized()) throw ShapeError(layer_name(model, layer) + " has no parameters");
  return l;
}

// Adds a unit column to a [rows x out] row-major matrix.
std::vector<double> add_column(const std::vector<double>& matrix, std::size_t rows, std::size_t out,
                               std::span<const double> column) {
  std::vector<double> grown;
  grown.reserve(rows * (out + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto first = matrix.begin() + static_cast<std::ptrdiff_t>(r * out);
    grown.insert(grown.end(), first, first + static_cast<std::ptrdiff_t>(out));
    grown.push_back(column[r]);
  }
  return grown;
}

// Gives `successor` a new input unit at the tail, fed through `rows`
// ([rows_per_unit x successor.out]).
void add_input_unit(LayerWeights& successor, std::size_t rows_per_unit, std::span<const double> rows) {
  const std::size_t outs = successor.out;
  if (successor.kind == LayerKind::kConv1d) {
    const std::size_t old_in = successor.in;
    std::vector<double> grown;
    grown.reserve(successor.kernel * (old_in + 1) * outs);
    for (std::size_t j = 0; j < successor.kernel; ++j) {
      const auto first = successor.weights.begin() + static_cast<std::ptrdiff_t>(j * old_in * outs);
      grown.insert(grown.end(), first, first + static_cast<std::ptrdiff_t>(old_in * outs));
      grown.insert(grown.end(), rows.begin() + static_cast<std::ptrdiff_t>(j * outs),
                   rows.begin() + static_cast<std::ptrdiff_t>((j + 1) * outs));
    }
    successor.weights = std::move(grown);
    successor.in = old_in + 1;
  } else {
    successor.weights.insert(successor.weights.end(), rows.begin(), rows.end());
    successor.in += rows_per_unit;
  }
}

void check_same_shape(std::span<const ModelWeights* const> models) {
  const ModelWeights& first = *models.front();
  for (std::size_t k = 1; k < models.size(); ++k) {
    const ModelWeights& other = *models[k];
    if (other.layers.size() != first.layers.size() || other.input != first.input) {
      throw ShapeError("model " + std::to_string(k) + " has a different layer count or input shape");
    }
    for (std::size_t i = 0; i < first.layers.size(); ++i) {
      const LayerWeights& a = first.layers[i];
      const LayerWeights& b = other.layers[i];
      if (a.kind != b.kind || a.kernel != b.kernel || a.in != b.in || a.out != b.out ||
          a.weights.size() != b.weights.size() || a.bias.size() != b.bias.size()) {
        throw ShapeError("shape mismatch at " + layer_name(first, i) + " of model " + std::to_string(k));
      }
    }
  }
}

void check_fractions(std::size_t models, std::span<const double> fractions) {
  if (models == 0) throw ShapeError("cannot average zero models");
  if (fractions.size() != models) throw ConfigError("one fraction per model required");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("fractions must be finite and non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("fractions sum to " + std::to_string(sum) + ", not 1");
}

void average_vector(std::vector<double>& out, std::span<const ModelWeights* const> models,
                    std::span<const double> fractions, std::size_t layer, bool bias) {
  const std::size_t n = out.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto value = [&](std::size_t k) {
      const LayerWeights& l = models[k]->layers[layer];
      return bias ? l.bias[j] : l.weights[j];
    };
    const double first = value(0);
    bool identical = true;
    for (std::size_t k = 1; k < models.size() && identical; ++k) identical = value(k) == first;
    if (identical) {
      out[j] = first;
      continue;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < models.size(); ++k) acc += fractions[k] * value(k);
    out[j] = acc;
  }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

void put_value(std::vector<std::uint8_t>& out, double v, Precision precision) {
  if (precision == Precision::kFloat32) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  } else {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffULL) throw ShapeError("dimension too large for the container");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t read(std::size_t width) {
    if (pos_ + width > bytes_.size()) throw DataError("truncated model container at byte " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }

  double read_value(Precision precision) {
    if (precision == Precision::kFloat32) {
      return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(read(4))));
    }
    return std::bit_cast<double>(read(8));
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

NeuronVector neuron_vector(const LayerWeights& layer, std::size_t unit, NeuronOrigin origin) {
  if (!layer.parameterized()) throw ShapeError("pool layers have no neurons");
  if (unit >= layer.out) {
    throw ShapeError("unit " + std::to_string(unit) + " out of range for width " + std::to_string(layer.out));
  }
  NeuronVector nv;
  nv.origin = origin;
  const std::size_t fan_in = layer.fan_in();
  nv.values.reserve(fan_in + 1);
  for (std::size_t r = 0; r < fan_in; ++r) nv.values.push_back(layer.weight(r, unit));
  nv.values.push_back(layer.bias[unit]);
  return nv;
}

void write_neuron(LayerWeights& layer, std::size_t unit, std::span<const double> values) {
  if (!layer.parameterized() || unit >= layer.out) throw ShapeError("unit out of range");
  const std::size_t fan_in = layer.fan_in();
  if (values.size() != fan_in + 1) throw ShapeError("neuron vector length does not match fan-in + 1");
  for (std::size_t r = 0; r < fan_in; ++r) layer.weight(r, unit) = values[r];
  layer.bias[unit] = values[fan_in];
}

std::size_t successor_rows_per_unit(const ModelWeights& model, std::size_t layer) {
  const LayerWeights& l = parameterized_layer(model, layer);
  const auto succ = model.successor_of(layer);
  if (!succ) throw ShapeError(layer_name(model, layer) + " has no successor");
  const LayerWeights& s = model.layers[*succ];
  if (s.kind == LayerKind::kConv1d) return s.kernel;
  if (s.in % l.out != 0) throw ShapeError(layer_name(model, *succ) + " fan-in is not a multiple of its input width");
  return s.in / l.out;
}

std::vector<double> successor_rows(const ModelWeights& model, std::size_t layer, std::size_t unit) {
  const LayerWeights& l = parameterized_layer(model, layer);
  if (unit >= l.out) throw ShapeError("unit out of range");
  const std::size_t per_unit = successor_rows_per_unit(model, layer);
  const LayerWeights& s = model.layers[*model.successor_of(layer)];
  std::vector<double> rows;
  rows.reserve(per_unit * s.out);
  for (std::size_t q = 0; q < per_unit; ++q) {
    const std::size_t r = s.kind == LayerKind::kConv1d ? q * s.in + unit : unit * per_unit + q;
    const auto first = s.weights.begin() + static_cast<std::ptrdiff_t>(r * s.out);
    rows.insert(rows.end(), first, first + static_cast<std::ptrdiff_t>(s.out));
  }
  return rows;
}

ModelWeights weighted_average(std::span<const ModelWeights* const> models, std::span<const double> fractions) {
  check_fractions(models.size(), fractions);
  check_same_shape(models);
  ModelWeights out = *models.front();
  average_layers_into(out, models, fractions, 0);
  return out;
}

ModelWeights weighted_average(std::span<const ModelWeights> models, std::span<const double> fractions) {
  std::vector<const ModelWeights*> ptrs;
  ptrs.reserve(models.size());
  for (const ModelWeights& m : models) ptrs.push_back(&m);
  return weighted_average(std::span<const ModelWeights* const>(ptrs), fractions);
}

void average_layers_into(ModelWeights& target, std::span<const ModelWeights* const> models,
                         std::span<const double> fractions, std::size_t first_layer) {
  check_fractions(models.size(), fractions);
  check_same_shape(models);
  if (target.layers.size() != models.front()->layers.size()) throw ShapeError("target layer count differs");
  for (std::size_t i = first_layer; i < target.layers.size(); ++i) {
    const LayerWeights& ref = models.front()->layers[i];
    LayerWeights& dst = target.layers[i];
    if (dst.weights.size() != ref.weights.size() || dst.bias.size() != ref.bias.size() || dst.in != ref.in ||
        dst.out != ref.out) {
      throw ShapeError("shape mismatch at " + layer_name(target, i) + " of the aggregation target");
    }
    average_vector(dst.weights, models, fractions, i, false);
    average_vector(dst.bias, models, fractions, i, true);
  }
}

ModelWeights append_neuron(const ModelWeights& model, std::size_t layer, std::span<const double> source,
                           std::span<const double> rows) {
  const LayerWeights& l = parameterized_layer(model, layer);
  if (l.is_output()) throw ShapeError("the softmax output layer cannot grow");
  if (source.size() != l.fan_in() + 1) {
    throw ShapeError("source neuron has " + std::to_string(source.size()) + " values, " + layer_name(model, layer) +
                     " needs " + std::to_string(l.fan_in() + 1));
  }
  const std::size_t per_unit = successor_rows_per_unit(model, layer);
  const std::size_t succ = *model.successor_of(layer);
  if (rows.size() != per_unit * model.layers[succ].out) {
    throw ShapeError("successor rows have " + std::to_string(rows.size()) + " values, expected " +
                     std::to_string(per_unit * model.layers[succ].out));
  }
  ModelWeights grown = model;
  LayerWeights& target = grown.layers[layer];
  target.weights = add_column(target.weights, target.fan_in(), target.out, source.first(target.fan_in()));
  target.bias.push_back(source.back());
  target.out += 1;
  for (std::size_t i = layer + 1; i < succ; ++i) {
    grown.layers[i].in += 1;
    grown.layers[i].out += 1;
  }
  add_input_unit(grown.layers[succ], per_unit, rows);
  grown.validate();
  return grown;
}

ModelWeights conform_to_shape(const ModelWeights& client, const ModelWeights& server, std::size_t layer,
                              std::span<const GrownUnit> grown) {
  if (client.layers.size() != server.layers.size() || client.input != server.input) {
    throw ShapeError("client and server have different layer stacks");
  }
  const LayerWeights& server_layer = parameterized_layer(server, layer);
  if (server_layer.is_output()) throw ShapeError("the softmax output layer cannot grow");
  const std::size_t succ = *server.successor_of(layer);

  ModelWeights out = client;
  for (std::size_t i = 0; i < succ; ++i) out.layers[i] = server.layers[i];

  LayerWeights& cs = out.layers[succ];
  const LayerWeights& ss = server.layers[succ];
  if (cs.kind != ss.kind || cs.out != ss.out || cs.kernel != ss.kernel) {
    throw ShapeError("incompatible growth: " + layer_name(server, succ) + " differs beyond appended inputs");
  }
  if (cs.in != ss.in) {
    const std::size_t old_width = client.layers[layer].out;
    if (server_layer.out != old_width + grown.size()) {
      throw ShapeError("incompatible growth: server width " + std::to_string(server_layer.out) + " != client width " +
                       std::to_string(old_width) + " + " + std::to_string(grown.size()) + " grown units");
    }
    const std::size_t per_unit = successor_rows_per_unit(server, layer);
    for (std::size_t g = 0; g < grown.size(); ++g) {
      if (grown[g].unit != old_width + g) throw ShapeError("incompatible growth: grown units must be trailing");
      if (grown[g].successor_rows.size() != per_unit * cs.out) {
        throw ShapeError("incompatible growth: successor rows of unit " + std::to_string(grown[g].unit) +
                         " have the wrong length");
      }
      add_input_unit(cs, per_unit, grown[g].successor_rows);
    }
    if (cs.in != ss.in) throw ShapeError("incompatible growth: successor fan-in still differs");
  }
  out.validate();
  return out;
}

std::size_t layer_byte_size(const LayerWeights& layer, Precision precision) {
  return kLayerRecordBytes + layer.parameter_count() * bytes_per_value(precision);
}

std::size_t byte_size(const ModelWeights& model, Precision precision) {
  std::size_t total = kContainerHeaderBytes;
  for (const LayerWeights& layer : model.layers) total += layer_byte_size(layer, precision);
  return total;
}

std::vector<std::uint8_t> serialize(const ModelWeights& model, Precision precision) {
  std::vector<std::uint8_t> out;
  out.reserve(byte_size(model, precision));
  out.insert(out.end(), {'F', 'D', 'M', 'W'});
  put_u16(out, kContainerVersion);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_value(precision)));
  put_u32(out, checked_u32(model.input.length));
  put_u32(out, checked_u32(model.input.channels));
  put_u32(out, checked_u32(model.layers.size()));
  for (const LayerWeights& layer : model.layers) {
    out.push_back(static_cast<std::uint8_t>(layer.kind));
    out.push_back(static_cast<std::uint8_t>(layer.activation));
    put_u16(out, 0);
    put_u32(out, checked_u32(layer.kernel));
    put_u32(out, checked_u32(layer.in));
    put_u32(out, checked_u32(layer.out));
    for (double v : layer.weights) put_value(out, v, precision);
    for (double v : layer.bias) put_value(out, v, precision);
  }
  return out;
}

ModelWeights deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kContainerHeaderBytes || bytes[0] != 'F' || bytes[1] != 'D' || bytes[2] != 'M' ||
      bytes[3] != 'W') {
    throw DataError("not a model container (bad magic)");
  }
  Reader reader(bytes.subspan(4));
  const auto version = reader.read(2);
  if (version != kContainerVersion) throw DataError("unsupported container version " + std::to_string(version));
  const auto width = reader.read(2);
  if (width != 4 && width != 8) throw DataError("unsupported value width " + std::to_string(width));
  const Precision precision = width == 4 ? Precision::kFloat32 : Precision::kFloat64;
  ModelWeights model;
  model.input.length = reader.read(4);
  model.input.channels = reader.read(4);
  const auto count = reader.read(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    LayerWeights layer;
    const auto kind = reader.read(1);
    if (kind < 1 || kind > 4) throw DataError("unknown layer kind tag " + std::to_string(kind));
    layer.kind = static_cast<LayerKind>(kind);
    const auto act = reader.read(1);
    if (act > 1) throw DataError("unknown activation tag " + std::to_string(act));
    layer.activation = static_cast<Activation>(act);
    reader.read(2);
    layer.kernel = reader.read(4);
    layer.in = reader.read(4);
    layer.out = reader.read(4);
    if (layer.parameterized()) {
      layer.weights.resize(layer.fan_in() * layer.out);
      for (double& v : layer.weights) v = reader.read_value(precision);
      layer.bias.resize(layer.out);
      for (double& v : layer.bias) v = reader.read_value(precision);
    }
    model.layers.push_back(std::move(layer));
  }
  if (!reader.done()) throw DataError("trailing bytes after the last layer record");
  if (!model.layers.empty()) model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const ModelWeights& model, Precision precision) {
  const auto bytes = serialize(model, precision);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelWeights load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::uint64_t content_hash(const ModelWeights& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : serialize(model, Precision::kFloat64)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string shape_dump(const ModelWeights& model) {
  std::ostringstream os;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerWeights& l = model.layers[i];
    os << i << ' ' << to_string(l.kind) << " in=" << l.in << " out=" << l.out;
    if (l.kind == LayerKind::kConv1d || l.kind == LayerKind::kMaxPool1d) os << " kernel=" << l.kernel;
    os << '\n';
  }
  return os.str();
}

std::size_t shape_notice_bytes(const ModelWeights& model) { return 8 + 4 * model.layers.size(); }

double parameter_distance(const ModelWeights& a, const ModelWeights& b) {
  if (a.layers.size() != b.layers.size()) throw ShapeError("models have different layer counts");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const LayerWeights& x = a.layers[i];
    const LayerWeights& y = b.layers[i];
    if (x.weights.size() != y.weights.size() || x.bias.size() != y.bias.size()) {
      throw ShapeError("shape mismatch at layer " + std::to_string(i));
    }
    for (std::size_t j = 0; j < x.weights.size(); ++j) sq += (x.weights[j] - y.weights[j]) * (x.weights[j] - y.weights[j]);
    for (std::size_t j = 0; j < x.bias.size(); ++j) sq += (x.bias[j] - y.bias[j]) * (x.bias[j] - y.bias[j]);
  }
  return std::sqrt(sq);
}

}  // namespace feddist
