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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "feddist/common.hpp"
#include "feddist/dataset.hpp"

namespace feddist {

inline constexpr std::size_t kSensorChannels = 6;
inline constexpr std::size_t kDefaultWindowLength = 128;
inline constexpr std::size_t kDefaultWindowStep = 64;

/// Six synchronized streams (ax, ay, az, gx, gy, gz) with per-sample labels.
struct SensorSeries {
  double sample_rate = 50.0;
  std::array<std::vector<double>, kSensorChannels> channels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void validate() const;
};

struct NormalizedSeries {
  SensorSeries series;
  /// Channels with zero variance were only centered.
  std::array<bool, kSensorChannels> zero_variance{};
};

/// Channel-wise z-normalization with population standard deviation.
NormalizedSeries z_normalize(const SensorSeries& series);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> zero_variance;
};

ChannelStats fit_channel_stats(const WindowSet& windows);
void apply_channel_stats(WindowSet& windows, const ChannelStats& stats);

/// Windows at offsets 0, step, 2*step, ...; the trailing remainder is dropped.
/// Labels are the majority label of the window (lowest class on ties).
WindowSet window(const SensorSeries& series, std::size_t length = kDefaultWindowLength,
                 std::size_t step = kDefaultWindowStep, std::vector<std::string>* warnings = nullptr);

/// Number of windows `window` produces for `samples` samples.
std::size_t window_count(std::size_t samples, std::size_t length, std::size_t step);

struct Split {
  WindowSet train;
  WindowSet test;
  std::vector<std::string> warnings;
};

/// Per class, round(n_c * train_fraction) windows clamped to [1, n_c - 1]
/// (a singleton class goes to train with a warning). Selection is a seeded
/// shuffle; both parts keep original window order.
Split stratified_split(const WindowSet& windows, double train_fraction = 0.8,
                       std::uint64_t seed = 0);

struct ClientData {
  int id = 0;
  WindowSet train;
  WindowSet test;
};

struct PipelineOptions {
  std::size_t window_length = kDefaultWindowLength;
  std::size_t window_step = kDefaultWindowStep;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

/// window -> stratified split -> z-normalize both parts with statistics of
/// the training part.
ClientData prepare_client(int id, const SensorSeries& series, const PipelineOptions& options,
                          std::vector<std::string>* warnings = nullptr);

struct SyntheticSpec {
  std::size_t clients = 10;
  std::size_t classes = 8;
  double dirichlet_alpha = 0.5;
  std::size_t min_samples = 4000;
  std::size_t max_samples = 8000;
  std::size_t min_segment = 256;
  std::size_t max_segment = 768;
  double sample_rate = 50.0;
  double noise = 0.35;
  double scale_jitter = 0.3;       // per-channel gain in [1 - j, 1 + j]
  double max_rotation = 0.6;       // radians, about a random axis
  double offset_jitter = 0.5;      // per-channel offset in [-j, j]
  std::uint64_t seed = 1;
  PipelineOptions pipeline;

  void validate() const;
};

struct SyntheticClient {
  ClientData data;
  std::vector<double> class_priors;
  std::vector<int> segment_labels;
};

/// Per client: Dirichlet(alpha) class priors, a series of activity segments
/// drawn from shared per-class sinusoid prototypes, a per-client device
/// transform (gain, rotation, offset), then the standard pipeline.
std::vector<SyntheticClient> generate_synthetic(const SyntheticSpec& spec);

struct CsvSchema {
  double sample_rate = 50.0;
  /// Optional decimation target; sample_rate / target_rate must be an integer.
  std::optional<double> target_rate;
};

inline constexpr const char* kSensorCsvHeader = "timestamp,ax,ay,az,gx,gy,gz,label";

SensorSeries ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);

}  // namespace feddist
