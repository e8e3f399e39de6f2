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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feddist/aggregation.hpp"
#include "feddist/data.hpp"
#include "feddist/metrics.hpp"

namespace feddist {

enum class ScenarioKind { kFull, kIncrementing, kDecrementing, kInterchanging };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view text);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kFull;
  std::size_t start_count = 2;
  std::size_t interval_rounds = 14;
  std::size_t sample_size = 8;

  void validate(std::size_t pool) const;
};

/// Sorted ids (0-based) of the clients taking part in round `round` (>= 1).
std::vector<std::size_t> active_clients(const ScenarioSpec& spec, int round, std::size_t pool,
                                        std::uint64_t seed);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kFedAvg;
  int rounds = 200;
  std::size_t clients = 0;
  ScenarioSpec scenario;
  TrainingConfig training;
  /// Compute per-client balanced class weights from each training split.
  bool balanced_class_weights = true;
  FedDistConfig feddist;
  std::uint64_t seed = 1;
  Architecture model;
  int eval_every = 1;
  std::size_t threads = 1;

  void validate() const;
};

/// Seed of client `id` under global seed `seed`.
std::uint64_t client_seed(std::uint64_t seed, std::size_t id);
/// Seed of the initial model; `reinit` selects an independent stream for the
/// final-shape ablation.
std::uint64_t model_seed(std::uint64_t seed, bool reinit = false);

struct RunHooks {
  ClientUpdateFn client_update;
  std::function<void(const RoundReport&)> on_report;
  /// Seed of the initial model; defaults to model_seed(cfg.seed).
  std::optional<std::uint64_t> init_seed;
};

struct ExperimentResult {
  std::vector<RoundReport> reports;
  std::vector<CommLedger> ledgers;
  ModelWeights final_model;
  std::vector<ModelWeights> client_models;
  bool aborted = false;
  std::string error;
};

/// Runs cfg.rounds rounds of cfg.algorithm over `data` (one entry per client,
/// ids 0..K-1). Configuration errors throw before round 1; errors during a
/// round stop the run and are returned with the reports produced so far.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::span<const ClientData> data,
                                const RunHooks& hooks = {});

/// Widths of `arch` replaced by `final_shape` (one entry per layer; pools
/// are ignored). Throws ConfigError on malformed shapes.
Architecture resize_architecture(const Architecture& arch, std::span<const std::size_t> final_shape);

/// FedAvg from a freshly initialized model with FedDist's final shape.
ExperimentResult rerun_with_final_shape(const ExperimentConfig& cfg,
                                        std::span<const std::size_t> final_shape,
                                        std::span<const ClientData> data, const RunHooks& hooks = {});

}  // namespace feddist
