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
#include <span>
#include <string>
#include <vector>

#include "feddist/client.hpp"
#include "feddist/fabric.hpp"
#include "feddist/nn.hpp"

namespace feddist {

enum class Algorithm { kFedAvg, kFedProx, kFedDist, kLocalOnly, kCentralized };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);

/// Per-layer distances between server units and the same-coordinate units of
/// every client, plus pooled statistics over all finite entries.
struct DistanceMatrix {
  std::size_t layer = 0;
  std::size_t units = 0;
  std::size_t clients = 0;
  std::vector<double> entries;  // [units x clients]
  double mu = 0.0;
  double sigma = 0.0;

  double at(std::size_t unit, std::size_t client) const { return entries[unit * clients + client]; }
};

struct FedDistConfig {
  double beta = 0.1;
  double base_sigma_multiplier = 3.0;
  std::size_t max_new_units_per_layer = 8;
  /// Local epochs for each layer-wise sub-round; 0 means "same as E".
  std::size_t layerwise_epochs = 0;

  void validate() const;
};

/// One structured record per exchange within a round.
struct RoundEvent {
  int round = 0;
  Algorithm algorithm = Algorithm::kFedAvg;
  std::string phase;  // "main" or "layerwise"
  int layer = -1;     // -1: whole model
  std::size_t units_added = 0;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
};

struct CommLedger {
  int round = 0;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  /// Shape notices, kept apart from weight payloads.
  std::size_t metadata_bytes = 0;
  std::size_t sub_rounds = 0;
  /// Units appended per absolute layer index.
  std::vector<std::size_t> units_added;
  /// Candidates above threshold dropped by the per-layer cap.
  std::size_t truncated_units = 0;
  std::vector<RoundEvent> events;

  std::size_t total_units_added() const;
};

struct RoundOutcome {
  ModelWeights server;
  CommLedger ledger;
  bool skipped = false;
  /// ||w_k - w_t|| for each client after its main-phase local training.
  std::vector<double> client_drift;
};

/// Local update hook; defaults to train_local. Receives the client, its start
/// model, the effective training config and the derived stream seed.
using ClientUpdateFn = std::function<TrainResult(const ClientState&, const ModelWeights&,
                                                 const TrainingConfig&, std::uint64_t)>;

struct RoundContext {
  int round = 1;
  std::size_t threads = 1;
  ClientUpdateFn client_update;
};

/// Seed of client `client_seed`'s local stream for `phase` of `round`.
/// Phase 0 is the main update, phase p + 1 the sub-round after growth at
/// parameterized ordinal p.
std::uint64_t local_stream_seed(std::uint64_t client_seed, int round, std::size_t phase);

/// `clients` must be the active pool; it is reduced in ascending id order.
/// On return every client's `model` holds its latest locally trained model.
RoundOutcome fedavg_round(const ModelWeights& server, std::span<ClientState* const> clients,
                          const TrainingConfig& cfg, const RoundContext& ctx);

/// FedAvg with the proximal regularizer anchored at `server`. A coefficient
/// of 0 reduces exactly to fedavg_round.
RoundOutcome fedprox_round(const ModelWeights& server, std::span<ClientState* const> clients,
                           const TrainingConfig& cfg, const RoundContext& ctx);

DistanceMatrix distance_matrix(const LayerWeights& server_layer,
                               std::span<const LayerWeights* const> client_layers,
                               std::size_t layer_index = 0);

double penalty(int round, double beta);
double divergence_threshold(int round, const FedDistConfig& cfg, double mu, double sigma);

struct DivergentUnit {
  std::size_t client = 0;  // column of the distance matrix
  std::size_t unit = 0;
  double distance = 0.0;

  bool operator==(const DivergentUnit&) const = default;
};

/// Entries strictly above `threshold`, at most one per unit (most distant
/// client, lowest column on ties), sorted by descending distance (lower unit
/// first on ties) and truncated to `cap`. `truncated` receives the number of
/// candidates dropped by the cap.
std::vector<DivergentUnit> select_divergent(const DistanceMatrix& pi, double threshold,
                                            std::size_t cap, std::size_t* truncated = nullptr);

/// One FedDist communication round: main update and averaging, then for each
/// non-output parameterized layer bottom-up: distances, divergent-unit
/// growth from the donor clients, and, when anything grew, a layer-wise
/// sub-round training only the layers above it.
RoundOutcome feddist_round(const ModelWeights& server, std::span<ClientState* const> clients,
                           const TrainingConfig& cfg, const FedDistConfig& fcfg,
                           const RoundContext& ctx);

struct CommSummary {
  std::size_t rounds = 0;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  std::size_t metadata_bytes = 0;
  std::size_t sub_rounds = 0;
  std::vector<std::size_t> growth;  // units added per round

  std::size_t payload_bytes() const { return bytes_up + bytes_down; }
  std::size_t total_bytes() const { return bytes_up + bytes_down + metadata_bytes; }
};

CommSummary ledger_totals(std::span<const CommLedger> ledgers);

/// Payload cost of `run` relative to `baseline` (metadata excluded).
double cost_ratio(const CommSummary& run, const CommSummary& baseline);

/// Data-size fractions n_k / n over the given clients.
std::vector<double> data_fractions(std::span<ClientState* const> clients);

}  // namespace feddist
