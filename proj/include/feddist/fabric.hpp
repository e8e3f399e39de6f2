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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feddist/common.hpp"
#include "feddist/model.hpp"

namespace feddist {

/// Where a neuron vector was read from. client == -1 denotes the server.
struct NeuronOrigin {
  int client = -1;
  std::size_t layer = 0;
  std::size_t unit = 0;

  bool operator==(const NeuronOrigin&) const = default;
};

/// A unit's incoming weights in storage order (dense: row index ascending;
/// conv: kernel position major, input channel minor) followed by its bias.
struct NeuronVector {
  std::vector<double> values;
  NeuronOrigin origin;
};

NeuronVector neuron_vector(const LayerWeights& layer, std::size_t unit, NeuronOrigin origin = {});
void write_neuron(LayerWeights& layer, std::size_t unit, std::span<const double> values);

/// Rows of the successor layer's incoming matrix that read from one unit of
/// `layer`. A dense successor of a dense layer has 1, a dense successor of a
/// conv/pool stack has the pooled time length, a conv successor has its kernel.
std::size_t successor_rows_per_unit(const ModelWeights& model, std::size_t layer);

/// The successor weights fed by `unit`, flattened [rows_per_unit x successor out].
std::vector<double> successor_rows(const ModelWeights& model, std::size_t layer, std::size_t unit);

/// Fraction-weighted sum of shape-identical models. Scalars that are
/// bit-identical across all inputs are copied through unchanged, so the
/// aggregate of identical models is exactly that model.
ModelWeights weighted_average(std::span<const ModelWeights* const> models,
                              std::span<const double> fractions);
ModelWeights weighted_average(std::span<const ModelWeights> models,
                              std::span<const double> fractions);

/// Overwrites layers [first_layer, end) of `target` with the weighted average
/// of the same layers in `models`.
void average_layers_into(ModelWeights& target, std::span<const ModelWeights* const> models,
                         std::span<const double> fractions, std::size_t first_layer);

/// Appends one unit at the tail of `layer`. `source` provides incoming weights
/// and bias; `rows` ([rows_per_unit x successor out]) become the new unit's
/// outgoing weights in the successor layer. Pools in between widen with it.
ModelWeights append_neuron(const ModelWeights& model, std::size_t layer,
                           std::span<const double> source, std::span<const double> rows);

struct GrownUnit {
  std::size_t unit = 0;
  std::vector<double> successor_rows;
};

/// Makes a client dimension-compatible with a server that appended `grown`
/// units to `layer`: client layers up to and including `layer` become the
/// server's, the successor gains the provided rows, everything above stays.
/// Idempotent.
ModelWeights conform_to_shape(const ModelWeights& client, const ModelWeights& server,
                              std::size_t layer, std::span<const GrownUnit> grown);

// Container layout, little-endian:
//   header  : "FDMW" | u16 version | u16 value width | u32 input length
//             | u32 input channels | u32 layer count               (20 bytes)
//   layer   : u8 kind | u8 activation | u16 reserved | u32 kernel | u32 in
//             | u32 out                                            (16 bytes)
//             then weights, then bias, as value-width floats row-major.
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 20;
inline constexpr std::size_t kLayerRecordBytes = 16;

std::size_t layer_byte_size(const LayerWeights& layer, Precision precision);
std::size_t byte_size(const ModelWeights& model, Precision precision);

std::vector<std::uint8_t> serialize(const ModelWeights& model, Precision precision);
ModelWeights deserialize(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const ModelWeights& model, Precision precision);
ModelWeights load_model(const std::filesystem::path& path);

/// FNV-1a over the 64-bit container.
std::uint64_t content_hash(const ModelWeights& model);

/// One line per layer: "<index> <kind> in=<fan-in> out=<width>".
std::string shape_dump(const ModelWeights& model);

/// Shape notice sent alongside every FedDist download: u32 round, u32 layer
/// count, one u32 width per layer.
std::size_t shape_notice_bytes(const ModelWeights& model);

/// Euclidean norm of the parameter difference; shapes must match.
double parameter_distance(const ModelWeights& a, const ModelWeights& b);

}  // namespace feddist
