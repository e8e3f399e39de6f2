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

#include "feddist/scheduler.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <random>

#include "parallel.hpp"

namespace feddist {
namespace {

struct PendingComm {
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  std::size_t sub_rounds = 0;
  std::size_t units_added = 0;

  void add(const CommLedger& ledger) {
    bytes_up += ledger.bytes_up;
    bytes_down += ledger.bytes_down + ledger.metadata_bytes;
    sub_rounds += ledger.sub_rounds;
    units_added += ledger.total_units_added();
  }
};

void check_client_data(const ExperimentConfig& cfg, std::span<const ClientData> data) {
  if (data.size() != cfg.clients) {
    throw ConfigError("config names " + std::to_string(cfg.clients) + " clients but " + std::to_string(data.size()) +
                      " datasets were supplied");
  }
  const std::size_t classes = cfg.model.classes();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const ClientData& d = data[k];
    if (d.id != static_cast<int>(k)) throw ConfigError("client datasets must carry ids 0..K-1 in order");
    for (const WindowSet* set : {&d.train, &d.test}) {
      if (set->empty()) continue;
      if (set->length != cfg.model.input.length || set->channels != cfg.model.input.channels) {
        throw ConfigError("client " + std::to_string(k) + " windows are " + std::to_string(set->length) + "x" +
                          std::to_string(set->channels) + ", the model expects " +
                          std::to_string(cfg.model.input.length) + "x" + std::to_string(cfg.model.input.channels));
      }
      for (int label : set->labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
          throw ConfigError("client " + std::to_string(k) + " has label " + std::to_string(label) +
                            " outside the model's " + std::to_string(classes) + " classes");
        }
      }
    }
  }
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kFull:
      return "full";
    case ScenarioKind::kIncrementing:
      return "incrementing";
    case ScenarioKind::kDecrementing:
      return "decrementing";
    case ScenarioKind::kInterchanging:
      return "interchanging";
  }
  return "unknown";
}

ScenarioKind parse_scenario(std::string_view text) {
  if (text == "full") return ScenarioKind::kFull;
  if (text == "incrementing") return ScenarioKind::kIncrementing;
  if (text == "decrementing") return ScenarioKind::kDecrementing;
  if (text == "interchanging") return ScenarioKind::kInterchanging;
  throw ConfigError("unknown scenario '" + std::string(text) + "'");
}

void ScenarioSpec::validate(std::size_t pool) const {
  if (interval_rounds < 1) throw ConfigError("scenario.interval_rounds must be >= 1");
  if (kind == ScenarioKind::kIncrementing && (start_count < 1 || start_count > pool)) {
    throw ConfigError("scenario.start_count " + std::to_string(start_count) + " must lie in [1, " +
                      std::to_string(pool) + "]");
  }
  if (kind == ScenarioKind::kInterchanging && (sample_size < 1 || sample_size > pool)) {
    throw ConfigError("scenario.sample_size " + std::to_string(sample_size) + " must lie in [1, " +
                      std::to_string(pool) + "]");
  }
}

std::vector<std::size_t> active_clients(const ScenarioSpec& spec, int round, std::size_t pool,
                                        std::uint64_t seed) {
  if (round < 1) throw ConfigError("rounds are numbered from 1");
  const std::size_t steps = static_cast<std::size_t>(round - 1) / std::max<std::size_t>(spec.interval_rounds, 1);
  std::size_t count = pool;
  switch (spec.kind) {
    case ScenarioKind::kFull:
      break;
    case ScenarioKind::kIncrementing:
      count = std::min(pool, spec.start_count + steps);
      break;
    case ScenarioKind::kDecrementing:
      count = steps >= pool ? 1 : std::max<std::size_t>(1, pool - steps);
      break;
    case ScenarioKind::kInterchanging: {
      std::vector<std::size_t> all(pool);
      std::iota(all.begin(), all.end(), 0);
      std::vector<std::size_t> picked;
      std::mt19937_64 rng(derive_seed(seed, 0x73636864, static_cast<std::uint64_t>(round)));
      std::sample(all.begin(), all.end(), std::back_inserter(picked), std::min(spec.sample_size, pool), rng);
      std::sort(picked.begin(), picked.end());
      return picked;
    }
  }
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

void ExperimentConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (clients < 1) throw ConfigError("at least one client is required");
  scenario.validate(clients);
  model.validate();
  if (training.local_epochs < 1) throw ConfigError("training.local_epochs must be >= 1");
  if (!(training.learning_rate >= 0.0) || !std::isfinite(training.learning_rate)) {
    throw ConfigError("training.learning_rate must be finite and >= 0");
  }
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (!(training.proximal_coefficient >= 0.0)) throw ConfigError("training.proximal_coefficient must be >= 0");
  if (!training.class_weights.empty() && training.class_weights.size() != model.classes()) {
    throw ConfigError("training.class_weights needs one weight per class");
  }
  feddist.validate();
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::uint64_t client_seed(std::uint64_t seed, std::size_t id) { return derive_seed(seed, 0x636c6e74, id); }

std::uint64_t model_seed(std::uint64_t seed, bool reinit) { return derive_seed(seed, 0x6d6f646c, reinit ? 1 : 0); }

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::span<const ClientData> data,
                                const RunHooks& hooks) {
  cfg.validate();
  check_client_data(cfg, data);

  std::vector<const WindowSet*> tests;
  for (const ClientData& d : data) tests.push_back(&d.test);
  const WindowSet global_test = concatenate(tests);
  if (global_test.empty()) throw DataError("the global test set is empty");

  const std::size_t classes = cfg.model.classes();
  ModelWeights server = initialize_model(cfg.model, hooks.init_seed.value_or(model_seed(cfg.seed)));

  TrainingConfig training = cfg.training;
  if (cfg.algorithm != Algorithm::kFedProx) training.proximal_coefficient = 0.0;

  std::vector<ClientState> clients(cfg.clients);
  for (std::size_t k = 0; k < cfg.clients; ++k) {
    ClientState& c = clients[k];
    c.id = data[k].id;
    c.train = std::make_shared<const WindowSet>(data[k].train);
    c.test = std::make_shared<const WindowSet>(data[k].test);
    c.seed = client_seed(cfg.seed, k);
    if (cfg.balanced_class_weights) c.class_weights = balanced_class_weights(c.train->labels, classes);
    c.model = server;
  }

  ExperimentResult result;
  std::map<int, std::pair<int, double>> generalization_cache;  // id -> (snapshot round, score)
  PendingComm pending;

  try {
    for (int t = 1; t <= cfg.rounds; ++t) {
      const std::vector<std::size_t> ids = active_clients(cfg.scenario, t, cfg.clients, cfg.seed);
      for (ClientState& c : clients) c.active = false;
      std::vector<ClientState*> active;
      for (std::size_t id : ids) {
        clients[id].active = true;
        active.push_back(&clients[id]);
      }
      const RoundContext ctx{t, cfg.threads, hooks.client_update};

      switch (cfg.algorithm) {
        case Algorithm::kFedAvg:
        case Algorithm::kFedProx:
        case Algorithm::kFedDist: {
          RoundOutcome outcome =
              cfg.algorithm == Algorithm::kFedAvg    ? fedavg_round(server, active, training, ctx)
              : cfg.algorithm == Algorithm::kFedProx ? fedprox_round(server, active, training, ctx)
                                                     : feddist_round(server, active, training, cfg.feddist, ctx);
          server = std::move(outcome.server);
          pending.add(outcome.ledger);
          result.ledgers.push_back(std::move(outcome.ledger));
          break;
        }
        case Algorithm::kLocalOnly: {
          detail::parallel_for(active.size(), cfg.threads, [&](std::size_t i) {
            ClientState& c = *active[i];
            TrainingConfig local = training;
            if (!c.class_weights.empty()) local.class_weights = c.class_weights;
            const std::uint64_t seed = local_stream_seed(c.seed, t, 0);
            c.model = hooks.client_update ? hooks.client_update(c, c.model, local, seed).model
                                          : train_local(c.model, *c.train, local, seed).model;
          });
          break;
        }
        case Algorithm::kCentralized: {
          std::vector<const WindowSet*> parts;
          for (const ClientState* c : active) parts.push_back(c->train.get());
          const WindowSet pooled = concatenate(parts);
          TrainingConfig central = training;
          if (cfg.balanced_class_weights) central.class_weights = balanced_class_weights(pooled.labels, classes);
          server = train_local(server, pooled, central, derive_seed(cfg.seed, 0x63656e74, static_cast<std::uint64_t>(t)))
                       .model;
          for (ClientState* c : active) c->model = server;
          break;
        }
      }

      if (t % cfg.eval_every != 0 && t != cfg.rounds) continue;

      RoundReport report;
      report.round = t;
      report.algorithm = cfg.algorithm;
      report.active_clients = active.size();
      if (cfg.algorithm != Algorithm::kLocalOnly) {
        const ScoreBundle global = evaluate_global(server, global_test);
        report.global_f1 = global.macro_f1;
        report.global_weighted_f1 = global.weighted_f1;
        report.global_accuracy = global.accuracy;
      }

      std::vector<const ClientState*> active_view(active.begin(), active.end());
      std::vector<double> personal(active.size());
      detail::parallel_for(active.size(), cfg.threads, [&](std::size_t i) {
        const ClientState& c = *active[i];
        if (!c.test || c.test->empty()) throw DataError("client " + std::to_string(c.id) + " has no test set");
        personal[i] = score_model(c.model, *c.test).macro_f1;
      });
      for (std::size_t i = 0; i < active.size(); ++i) update_best_snapshot(*active[i], personal[i], t);
      std::tie(report.personalization_mean, report.personalization_std) = mean_std(personal);

      // Generalization is re-scored only when a client's snapshot changed.
      std::vector<std::size_t> stale;
      for (std::size_t k = 0; k < clients.size(); ++k) {
        const ClientState& c = clients[k];
        if (!c.best) continue;
        const auto it = generalization_cache.find(c.id);
        if (it == generalization_cache.end() || it->second.first != c.best->round) stale.push_back(k);
      }
      std::vector<double> fresh(stale.size());
      detail::parallel_for(stale.size(), cfg.threads, [&](std::size_t i) {
        fresh[i] = score_model(clients[stale[i]].best->model, global_test).macro_f1;
      });
      for (std::size_t i = 0; i < stale.size(); ++i) {
        const ClientState& c = clients[stale[i]];
        generalization_cache[c.id] = {c.best->round, fresh[i]};
      }
      std::vector<double> general;
      for (const ClientState& c : clients) {
        ClientScore score;
        score.id = c.id;
        score.active = c.active;
        if (c.active) {
          const auto pos = std::find(ids.begin(), ids.end(), static_cast<std::size_t>(c.id)) - ids.begin();
          score.personalization = personal[static_cast<std::size_t>(pos)];
        }
        if (c.best) {
          score.best_round = c.best->round;
          score.generalization = generalization_cache.at(c.id).second;
          general.push_back(*score.generalization);
        }
        report.clients.push_back(score);
      }
      std::tie(report.generalization_mean, report.generalization_std) = mean_std(general);

      const ModelWeights& shape_source = cfg.algorithm == Algorithm::kLocalOnly ? clients.front().model : server;
      report.parameters = shape_source.parameter_count();
      report.shape = shape_source.shape_signature();
      report.bytes_up = pending.bytes_up;
      report.bytes_down = pending.bytes_down;
      report.sub_rounds = pending.sub_rounds;
      report.units_added = pending.units_added;
      pending = PendingComm{};

      if (hooks.on_report) hooks.on_report(report);
      result.reports.push_back(std::move(report));
    }
  } catch (const Error& e) {
    result.aborted = true;
    result.error = e.what();
  }

  result.final_model = std::move(server);
  for (ClientState& c : clients) result.client_models.push_back(std::move(c.model));
  return result;
}

Architecture resize_architecture(const Architecture& arch, std::span<const std::size_t> final_shape) {
  if (final_shape.size() != arch.layers.size()) {
    throw ConfigError("final shape has " + std::to_string(final_shape.size()) + " entries, the model has " +
                      std::to_string(arch.layers.size()) + " layers");
  }
  Architecture out = arch;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    LayerSpec& layer = out.layers[i];
    if (layer.kind == LayerKind::kMaxPool1d) continue;
    if (final_shape[i] < 1) throw ConfigError("final shape entry " + std::to_string(i) + " must be >= 1");
    if (layer.kind == LayerKind::kSoftmaxOutput && final_shape[i] != layer.width) {
      throw ConfigError("final shape changes the class count from " + std::to_string(layer.width) + " to " +
                        std::to_string(final_shape[i]));
    }
    layer.width = final_shape[i];
  }
  out.validate();
  return out;
}

ExperimentResult rerun_with_final_shape(const ExperimentConfig& cfg, std::span<const std::size_t> final_shape,
                                        std::span<const ClientData> data, const RunHooks& hooks) {
  ExperimentConfig ablation = cfg;
  ablation.algorithm = Algorithm::kFedAvg;
  ablation.model = resize_architecture(cfg.model, final_shape);
  RunHooks h = hooks;
  if (!h.init_seed) h.init_seed = model_seed(cfg.seed, true);
  return run_experiment(ablation, data, h);
}

}  // namespace feddist
