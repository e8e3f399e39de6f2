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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feddist/config.hpp"

namespace feddist {

inline constexpr const char* kCodeVersion = "0.1.0";

struct RunPaths {
  std::filesystem::path manifest;
  std::filesystem::path rounds_csv;
  std::filesystem::path rounds_jsonl;
  std::filesystem::path final_model;
  std::filesystem::path final_shape;
};

RunPaths run_paths(const std::filesystem::path& out_dir);

/// Executes one experiment and writes its artifacts into `out_dir`. The
/// manifest is written before round 1 and marked completed or failed at the
/// end. Returns the process exit status; errors go to `log`.
int run(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// One summary row of a completed run.
struct RunSummary {
  std::string name;
  std::string algorithm;
  std::optional<double> best_global_f1;
  int best_global_round = 0;
  double best_personalization = 0.0;
  int best_personalization_round = 0;
  double generalization_mean = 0.0;
  double generalization_std = 0.0;
  int rounds = 0;
};

/// Reads a run directory's manifest and round CSV. Throws DataError when the
/// manifest is missing.
RunSummary summarize_run(const std::filesystem::path& run_dir);

/// Side-by-side table of at least two runs.
void compare(std::span<const std::filesystem::path> run_dirs, std::ostream& out);

}  // namespace feddist
