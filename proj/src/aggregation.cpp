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

#include "feddist/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "parallel.hpp"

namespace feddist {
namespace {

std::vector<ClientState*> sorted_by_id(std::span<ClientState* const> clients) {
  std::vector<ClientState*> out(clients.begin(), clients.end());
  std::sort(out.begin(), out.end(), [](const ClientState* a, const ClientState* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i]->id == out[i - 1]->id) throw ConfigError("duplicate client id " + std::to_string(out[i]->id));
  }
  return out;
}

TrainResult run_update(const RoundContext& ctx, const ClientState& client, const ModelWeights& start,
                       const TrainingConfig& cfg, std::uint64_t seed) {
  if (ctx.client_update) return ctx.client_update(client, start, cfg, seed);
  if (!client.train) throw DataError("client " + std::to_string(client.id) + " has no training set");
  return train_local(start, *client.train, cfg, seed);
}

TrainingConfig client_config(const TrainingConfig& cfg, const ClientState& client) {
  TrainingConfig local = cfg;
  if (!client.class_weights.empty()) local.class_weights = client.class_weights;
  return local;
}

std::vector<const ModelWeights*> client_models(const std::vector<ClientState*>& clients) {
  std::vector<const ModelWeights*> models;
  models.reserve(clients.size());
  for (const ClientState* c : clients) models.push_back(&c->model);
  return models;
}

// Distribute `server`, train every client from it, record the exchange and
// return the fraction-weighted aggregate.
ModelWeights main_phase(const ModelWeights& server, const std::vector<ClientState*>& clients,
                        const TrainingConfig& cfg, const RoundContext& ctx, Algorithm algorithm,
                        RoundOutcome& outcome) {
  outcome.client_drift.assign(clients.size(), 0.0);
  detail::parallel_for(clients.size(), ctx.threads, [&](std::size_t i) {
    ClientState& client = *clients[i];
    TrainingConfig local = client_config(cfg, client);
    local.frozen_prefix = 0;
    TrainResult result = run_update(ctx, client, server, local, local_stream_seed(client.seed, ctx.round, 0));
    outcome.client_drift[i] = parameter_distance(result.model, server);
    client.model = std::move(result.model);
  });

  CommLedger& ledger = outcome.ledger;
  RoundEvent event{ctx.round, algorithm, "main", -1, 0, 0, 0};
  for (const ClientState* client : clients) {
    event.bytes_down += byte_size(server, cfg.precision);
    event.bytes_up += byte_size(client->model, cfg.precision);
  }
  ledger.bytes_down += event.bytes_down;
  ledger.bytes_up += event.bytes_up;
  ledger.events.push_back(event);

  std::vector<ClientState*> view(clients);
  const auto fractions = data_fractions(view);
  const auto models = client_models(clients);
  return weighted_average(std::span<const ModelWeights* const>(models), fractions);
}

RoundOutcome start_outcome(const ModelWeights& server, const RoundContext& ctx) {
  RoundOutcome outcome;
  outcome.server = server;
  outcome.ledger.round = ctx.round;
  outcome.ledger.units_added.assign(server.layers.size(), 0);
  return outcome;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kFedAvg:
      return "fedavg";
    case Algorithm::kFedProx:
      return "fedprox";
    case Algorithm::kFedDist:
      return "feddist";
    case Algorithm::kLocalOnly:
      return "local";
    case Algorithm::kCentralized:
      return "centralized";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "fedavg") return Algorithm::kFedAvg;
  if (text == "fedprox") return Algorithm::kFedProx;
  if (text == "feddist") return Algorithm::kFedDist;
  if (text == "local" || text == "local-only") return Algorithm::kLocalOnly;
  if (text == "centralized") return Algorithm::kCentralized;
  throw ConfigError("unknown algorithm '" + std::string(text) + "'");
}

void FedDistConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("feddist.beta must be >= 0");
  if (!(base_sigma_multiplier > 0.0) || !std::isfinite(base_sigma_multiplier)) {
    throw ConfigError("feddist.sigma_multiplier must be > 0");
  }
}

std::size_t CommLedger::total_units_added() const {
  std::size_t total = 0;
  for (std::size_t u : units_added) total += u;
  return total;
}

std::uint64_t local_stream_seed(std::uint64_t client_seed, int round, std::size_t phase) {
  return derive_seed(client_seed, static_cast<std::uint64_t>(round), phase);
}

std::vector<double> data_fractions(std::span<ClientState* const> clients) {
  std::size_t total = 0;
  for (const ClientState* c : clients) total += c->n();
  if (total == 0) throw DataError("active clients hold no training examples");
  std::vector<double> fractions;
  fractions.reserve(clients.size());
  for (const ClientState* c : clients) {
    fractions.push_back(static_cast<double>(c->n()) / static_cast<double>(total));
  }
  return fractions;
}

RoundOutcome fedavg_round(const ModelWeights& server, std::span<ClientState* const> clients,
                          const TrainingConfig& cfg, const RoundContext& ctx) {
  RoundOutcome outcome = start_outcome(server, ctx);
  if (clients.empty()) {
    outcome.skipped = true;
    return outcome;
  }
  const auto ordered = sorted_by_id(clients);
  outcome.server = main_phase(server, ordered, cfg, ctx, Algorithm::kFedAvg, outcome);
  return outcome;
}

RoundOutcome fedprox_round(const ModelWeights& server, std::span<ClientState* const> clients,
                           const TrainingConfig& cfg, const RoundContext& ctx) {
  RoundOutcome outcome = start_outcome(server, ctx);
  if (clients.empty()) {
    outcome.skipped = true;
    return outcome;
  }
  if (cfg.proximal_coefficient < 0.0) throw ConfigError("proximal_coefficient must be >= 0");
  TrainingConfig prox = cfg;
  if (prox.proximal_coefficient > 0.0) prox.reference = std::make_shared<const ModelWeights>(server);
  const auto ordered = sorted_by_id(clients);
  outcome.server = main_phase(server, ordered, prox, ctx, Algorithm::kFedProx, outcome);
  return outcome;
}

DistanceMatrix distance_matrix(const LayerWeights& server_layer, std::span<const LayerWeights* const> client_layers,
                               std::size_t layer_index) {
  if (!server_layer.parameterized()) throw ShapeError("distances need a parameterized layer");
  DistanceMatrix pi;
  pi.layer = layer_index;
  pi.units = server_layer.out;
  pi.clients = client_layers.size();
  pi.entries.assign(pi.units * pi.clients, 0.0);
  const std::size_t fan_in = server_layer.fan_in();
  for (std::size_t k = 0; k < pi.clients; ++k) {
    const LayerWeights& c = *client_layers[k];
    if (c.kind != server_layer.kind || c.in != server_layer.in || c.out != server_layer.out ||
        c.kernel != server_layer.kernel || c.weights.size() != server_layer.weights.size()) {
      throw ShapeError("client " + std::to_string(k) + " layer " + std::to_string(layer_index) +
                       " does not match the server layer shape");
    }
    for (std::size_t d = 0; d < pi.units; ++d) {
      double sq = 0.0;
      for (std::size_t r = 0; r < fan_in; ++r) {
        const double diff = server_layer.weight(r, d) - c.weight(r, d);
        sq += diff * diff;
      }
      const double db = server_layer.bias[d] - c.bias[d];
      sq += db * db;
      pi.entries[d * pi.clients + k] = std::sqrt(sq);
    }
  }
  double sum = 0.0;
  std::size_t finite = 0;
  for (double e : pi.entries) {
    if (std::isfinite(e)) {
      sum += e;
      ++finite;
    }
  }
  if (finite > 0) {
    pi.mu = sum / static_cast<double>(finite);
    double var = 0.0;
    for (double e : pi.entries) {
      if (std::isfinite(e)) var += (e - pi.mu) * (e - pi.mu);
    }
    pi.sigma = std::sqrt(var / static_cast<double>(finite));
  }
  return pi;
}

double penalty(int round, double beta) { return beta * static_cast<double>(round); }

double divergence_threshold(int round, const FedDistConfig& cfg, double mu, double sigma) {
  return (penalty(round, cfg.beta) + cfg.base_sigma_multiplier) * sigma + mu;
}

std::vector<DivergentUnit> select_divergent(const DistanceMatrix& pi, double threshold, std::size_t cap,
                                            std::size_t* truncated) {
  std::vector<DivergentUnit> picks;
  for (std::size_t d = 0; d < pi.units; ++d) {
    std::optional<DivergentUnit> best;
    for (std::size_t k = 0; k < pi.clients; ++k) {
      const double e = pi.at(d, k);
      if (!std::isfinite(e) || !(e > threshold)) continue;
      if (!best || e > best->distance) best = DivergentUnit{k, d, e};
    }
    if (best) picks.push_back(*best);
  }
  std::stable_sort(picks.begin(), picks.end(),
                   [](const DivergentUnit& a, const DivergentUnit& b) { return a.distance > b.distance; });
  const std::size_t dropped = picks.size() > cap ? picks.size() - cap : 0;
  if (dropped > 0) picks.resize(cap);
  if (truncated != nullptr) *truncated = dropped;
  return picks;
}

RoundOutcome feddist_round(const ModelWeights& server, std::span<ClientState* const> clients,
                           const TrainingConfig& cfg, const FedDistConfig& fcfg, const RoundContext& ctx) {
  fcfg.validate();
  RoundOutcome outcome = start_outcome(server, ctx);
  if (clients.empty()) {
    outcome.skipped = true;
    return outcome;
  }
  const auto ordered = sorted_by_id(clients);
  CommLedger& ledger = outcome.ledger;
  ModelWeights w = main_phase(server, ordered, cfg, ctx, Algorithm::kFedDist, outcome);
  ledger.events.back().algorithm = Algorithm::kFedDist;
  ledger.metadata_bytes += ordered.size() * shape_notice_bytes(server);

  std::vector<ClientState*> view(ordered);
  const auto fractions = data_fractions(view);
  const std::vector<std::size_t> param = w.parameterized_layers();
  const std::size_t value_bytes = bytes_per_value(cfg.precision);

  for (std::size_t p = 0; p + 1 < param.size(); ++p) {
    const std::size_t l = param[p];
    std::vector<const LayerWeights*> layers;
    layers.reserve(ordered.size());
    for (const ClientState* c : ordered) layers.push_back(&c->model.layers[l]);
    const DistanceMatrix pi = distance_matrix(w.layers[l], layers, l);
    const double threshold = divergence_threshold(ctx.round, fcfg, pi.mu, pi.sigma);
    std::size_t truncated = 0;
    const auto picks = select_divergent(pi, threshold, fcfg.max_new_units_per_layer, &truncated);
    ledger.truncated_units += truncated;
    if (picks.empty()) continue;

    std::vector<GrownUnit> grown;
    grown.reserve(picks.size());
    for (const DivergentUnit& pick : picks) {
      const ModelWeights& donor = ordered[pick.client]->model;
      const NeuronVector source =
          neuron_vector(donor.layers[l], pick.unit, NeuronOrigin{ordered[pick.client]->id, l, pick.unit});
      std::vector<double> rows = successor_rows(donor, l, pick.unit);
      const std::size_t new_unit = w.layers[l].out;
      w = append_neuron(w, l, source.values, rows);
      grown.push_back(GrownUnit{new_unit, std::move(rows)});
    }
    ledger.units_added[l] += picks.size();

    // Layer-wise sub-round: layers up to l are pushed frozen, the rest retrain.
    const std::size_t succ = *w.successor_of(l);
    TrainingConfig sub = cfg;
    sub.frozen_prefix = p + 1;
    if (fcfg.layerwise_epochs > 0) sub.local_epochs = fcfg.layerwise_epochs;
    detail::parallel_for(ordered.size(), ctx.threads, [&](std::size_t i) {
      ClientState& client = *ordered[i];
      const ModelWeights start = conform_to_shape(client.model, w, l, grown);
      TrainingConfig local = client_config(sub, client);
      TrainResult result = run_update(ctx, client, start, local, local_stream_seed(client.seed, ctx.round, p + 1));
      client.model = std::move(result.model);
    });

    RoundEvent event{ctx.round, Algorithm::kFedDist, "layerwise", static_cast<int>(l), picks.size(), 0, 0};
    std::size_t frozen_bytes = 0;
    for (std::size_t i = 0; i < succ; ++i) frozen_bytes += layer_byte_size(w.layers[i], cfg.precision);
    const std::size_t new_rows_bytes = grown.size() * grown.front().successor_rows.size() * value_bytes;
    for (const ClientState* client : ordered) {
      event.bytes_down += frozen_bytes + new_rows_bytes;
      for (std::size_t i = succ; i < client->model.layers.size(); ++i) {
        event.bytes_up += layer_byte_size(client->model.layers[i], cfg.precision);
      }
    }
    ledger.bytes_down += event.bytes_down;
    ledger.bytes_up += event.bytes_up;
    ledger.sub_rounds += 1;
    ledger.events.push_back(event);

    const auto models = client_models(ordered);
    average_layers_into(w, std::span<const ModelWeights* const>(models), fractions, succ);
  }
  outcome.server = std::move(w);
  return outcome;
}

CommSummary ledger_totals(std::span<const CommLedger> ledgers) {
  CommSummary summary;
  for (const CommLedger& l : ledgers) {
    ++summary.rounds;
    summary.bytes_up += l.bytes_up;
    summary.bytes_down += l.bytes_down;
    summary.metadata_bytes += l.metadata_bytes;
    summary.sub_rounds += l.sub_rounds;
    summary.growth.push_back(l.total_units_added());
  }
  return summary;
}

double cost_ratio(const CommSummary& run, const CommSummary& baseline) {
  if (baseline.payload_bytes() == 0) throw ConfigError("baseline ledger carries no bytes");
  return static_cast<double>(run.payload_bytes()) / static_cast<double>(baseline.payload_bytes());
}

}  // namespace feddist
