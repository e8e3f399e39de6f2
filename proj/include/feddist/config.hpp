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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "feddist/data.hpp"
#include "feddist/scheduler.hpp"

namespace feddist {

/// Sensor CSV exports, one file per client.
struct CsvDataset {
  std::vector<std::filesystem::path> files;
  CsvSchema schema;
  PipelineOptions pipeline;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::variant<SyntheticSpec, CsvDataset> dataset;
  /// When set, the run is the final-shape ablation: FedAvg from a fresh model
  /// whose layer widths are replaced by these.
  std::optional<std::vector<std::size_t>> resize_to;
  /// Directory relative CSV paths are resolved against.
  std::filesystem::path base_dir;
  /// False while a synthetic dataset's seed tracks the global seed.
  bool dataset_seed_explicit = false;
};

/// Parses a JSON config (or a run manifest, whose "resolved_config" is used).
/// Unknown keys are rejected; errors name the key path and its line.
RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig parse_config(const std::filesystem::path& path);

/// The config with every default written out, as pretty-printed JSON.
std::string resolved_config_json(const RunConfig& cfg);

/// Replaces the global seed. A synthetic dataset whose seed was not given
/// explicitly follows it.
void override_seed(RunConfig& cfg, std::uint64_t seed);

/// Materializes the per-client datasets named by the config.
std::vector<ClientData> load_dataset(const RunConfig& cfg);

/// The architecture used when a config names no model:
/// conv1d(196, k16) -> maxpool(4) -> dense(1024) -> softmax(classes).
Architecture default_architecture(std::size_t window_length, std::size_t classes);

}  // namespace feddist
