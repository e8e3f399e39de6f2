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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "feddist/aggregation.hpp"
#include "test_support.hpp"

namespace feddist {
namespace {

using testing::arch;
using testing::blob_windows;
using testing::conv;
using testing::dense;
using testing::make_client;
using testing::pointers;
using testing::pool;
using testing::random_model;
using testing::random_windows;
using testing::softmax;

TrainingConfig quick_config() {
  TrainingConfig cfg;
  cfg.local_epochs = 2;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 8;
  return cfg;
}

std::vector<ClientState> heterogeneous_clients(const ModelWeights& server, std::size_t count, std::uint64_t seed) {
  std::vector<ClientState> clients;
  const InputShape in = server.input;
  for (std::size_t k = 0; k < count; ++k) {
    WindowSet data = random_windows(in.length, in.channels, 10 + 7 * k, server.classes(), seed + k);
    clients.push_back(make_client(static_cast<int>(k), std::move(data), seed * 100 + k, server));
  }
  return clients;
}

TEST(FedAvg, SingleClientServerEqualsItsTrainedModel) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  auto clients = heterogeneous_clients(server, 1, 3);
  const TrainingConfig cfg = quick_config();
  const RoundContext ctx{4, 1, {}};
  const RoundOutcome out = fedavg_round(server, pointers(clients), cfg, ctx);
  const TrainResult expect = train_local(server, *clients[0].train, cfg, local_stream_seed(clients[0].seed, 4, 0));
  EXPECT_EQ(out.server, expect.model);
  EXPECT_EQ(clients[0].model, expect.model);
}

TEST(FedAvg, IdenticalClientsGiveThatClientsModel) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  const WindowSet data = random_windows(8, 2, 20, 3, 5);
  std::vector<ClientState> clients;
  for (int k = 0; k < 3; ++k) clients.push_back(make_client(k, data, 42, server));
  const RoundOutcome out = fedavg_round(server, pointers(clients), quick_config(), RoundContext{});
  EXPECT_EQ(out.server, clients[0].model);
}

TEST(FedAvg, SizeWeightedAggregateMatchesElementwiseOracle) {
  const ModelWeights server = random_model(arch(8, 2, {conv(3, 3), pool(2), dense(4), softmax(3)}), 2);
  std::vector<ClientState> clients;
  const std::vector<std::size_t> sizes{10, 20, 70};
  for (std::size_t k = 0; k < 3; ++k) {
    clients.push_back(make_client(static_cast<int>(k), random_windows(8, 2, sizes[k], 3, k), 7 + k, server));
  }
  const TrainingConfig cfg = quick_config();
  const RoundOutcome out = fedavg_round(server, pointers(clients), cfg, RoundContext{1, 1, {}});
  const std::vector<double> f{0.1, 0.2, 0.7};
  for (std::size_t l = 0; l < server.layers.size(); ++l) {
    for (std::size_t j = 0; j < server.layers[l].weights.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += f[k] * clients[k].model.layers[l].weights[j];
      EXPECT_NEAR(out.server.layers[l].weights[j], s, 1e-12);
    }
  }
  const std::size_t model_bytes = byte_size(server, cfg.precision);
  EXPECT_EQ(out.ledger.bytes_down, 3 * model_bytes);
  EXPECT_EQ(out.ledger.bytes_up, 3 * model_bytes);
  EXPECT_EQ(out.ledger.sub_rounds, 0u);
  EXPECT_EQ(out.ledger.metadata_bytes, 0u);
}

TEST(FedAvg, EmptyPoolIsSkipped) {
  const ModelWeights server = random_model(arch(4, 1, {dense(3), softmax(2)}), 1);
  std::vector<ClientState*> none;
  const RoundOutcome out = fedavg_round(server, none, quick_config(), RoundContext{});
  EXPECT_TRUE(out.skipped);
  EXPECT_EQ(out.server, server);
  EXPECT_EQ(out.ledger.bytes_up + out.ledger.bytes_down, 0u);
}

TEST(FedAvg, ResultIndependentOfClientOrderAndThreads) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  auto a = heterogeneous_clients(server, 5, 9);
  auto b = a;
  auto pa = pointers(a);
  auto pb = pointers(b);
  std::reverse(pb.begin(), pb.end());
  const RoundOutcome one = fedavg_round(server, pa, quick_config(), RoundContext{1, 1, {}});
  const RoundOutcome many = fedavg_round(server, pb, quick_config(), RoundContext{1, 4, {}});
  EXPECT_EQ(one.server, many.server);
}

TEST(FedProx, ZeroCoefficientIsBitIdenticalToFedAvg) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  auto a = heterogeneous_clients(server, 3, 4);
  auto b = a;
  TrainingConfig cfg = quick_config();
  cfg.proximal_coefficient = 0.0;
  EXPECT_EQ(fedavg_round(server, pointers(a), cfg, RoundContext{}).server,
            fedprox_round(server, pointers(b), cfg, RoundContext{}).server);
}

TEST(FedProx, LargeCoefficientShrinksClientDrift) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  auto a = heterogeneous_clients(server, 3, 4);
  auto b = a;
  TrainingConfig cfg = quick_config();
  cfg.learning_rate = 1e-7;
  const RoundOutcome avg = fedavg_round(server, pointers(a), cfg, RoundContext{});
  cfg.proximal_coefficient = 1e6;
  const RoundOutcome prox = fedprox_round(server, pointers(b), cfg, RoundContext{});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(prox.client_drift[k], avg.client_drift[k]);
}

TEST(FedProx, FirstStepMatchesFedAvg) {
  const ModelWeights server = random_model(arch(8, 2, {dense(6), softmax(3)}), 1);
  auto a = heterogeneous_clients(server, 2, 4);
  auto b = a;
  TrainingConfig cfg = quick_config();
  cfg.local_epochs = 1;
  cfg.batch_size = 1000;
  const RoundOutcome avg = fedavg_round(server, pointers(a), cfg, RoundContext{});
  cfg.proximal_coefficient = 3.0;
  const RoundOutcome prox = fedprox_round(server, pointers(b), cfg, RoundContext{});
  EXPECT_EQ(avg.server, prox.server);
}

TEST(Distance, IdenticalLayersGiveZeros) {
  const ModelWeights m = random_model(arch(4, 2, {dense(5), softmax(2)}), 1);
  const std::vector<const LayerWeights*> clients{&m.layers[0], &m.layers[0]};
  const DistanceMatrix pi = distance_matrix(m.layers[0], clients);
  for (double e : pi.entries) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(pi.mu, 0.0);
  EXPECT_EQ(pi.sigma, 0.0);
}

TEST(Distance, ThreeFourFive) {
  LayerWeights server{LayerKind::kDense, Activation::kRelu, 1, 1, 1, {0.0}, {0.0}};
  LayerWeights client{LayerKind::kDense, Activation::kRelu, 1, 1, 1, {3.0}, {4.0}};
  const std::vector<const LayerWeights*> clients{&client};
  EXPECT_DOUBLE_EQ(distance_matrix(server, clients).at(0, 0), 5.0);
}

TEST(Distance, MatchesScalarLoopOracleOnRandomLayers) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Architecture a = seed % 2 == 0 ? arch(12, 3, {conv(8, 3), dense(4), softmax(2)})
                                         : arch(1, 6, {dense(8), dense(4), softmax(2)});
    const ModelWeights server = random_model(a, seed);
    std::vector<ModelWeights> models;
    for (std::uint64_t k = 0; k < 5; ++k) models.push_back(random_model(a, 1000 + seed * 10 + k));
    std::vector<const LayerWeights*> layers;
    for (const ModelWeights& m : models) layers.push_back(&m.layers[0]);
    const DistanceMatrix pi = distance_matrix(server.layers[0], layers);
    ASSERT_EQ(pi.units, 8u);
    double sum = 0.0;
    std::vector<double> all;
    for (std::size_t d = 0; d < 8; ++d) {
      for (std::size_t k = 0; k < 5; ++k) {
        const LayerWeights& s = server.layers[0];
        const LayerWeights& c = models[k].layers[0];
        double sq = 0.0;
        const std::size_t fan_in = s.weights.size() / s.out;
        for (std::size_t r = 0; r < fan_in; ++r) {
          const double diff = s.weights[r * s.out + d] - c.weights[r * c.out + d];
          sq += diff * diff;
        }
        sq += (s.bias[d] - c.bias[d]) * (s.bias[d] - c.bias[d]);
        EXPECT_NEAR(pi.at(d, k), std::sqrt(sq), 1e-12);
        sum += std::sqrt(sq);
        all.push_back(std::sqrt(sq));
      }
    }
    const double mu = sum / 40.0;
    double var = 0.0;
    for (double v : all) var += (v - mu) * (v - mu);
    EXPECT_NEAR(pi.mu, mu, 1e-12);
    EXPECT_NEAR(pi.sigma, std::sqrt(var / 40.0), 1e-12);
  }
}

TEST(Distance, RejectsShapeMismatch) {
  const ModelWeights a = random_model(arch(4, 2, {dense(5), softmax(2)}), 1);
  const ModelWeights b = random_model(arch(4, 2, {dense(4), softmax(2)}), 1);
  const std::vector<const LayerWeights*> clients{&b.layers[0]};
  EXPECT_THROW(distance_matrix(a.layers[0], clients), ShapeError);
}

TEST(Threshold, HandExamples) {
  FedDistConfig cfg;
  cfg.beta = 0.0;
  EXPECT_DOUBLE_EQ(divergence_threshold(5, cfg, 1.0, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(divergence_threshold(5, cfg, 1.7, 0.0), 1.7);
  cfg.beta = 0.1;
  EXPECT_DOUBLE_EQ(divergence_threshold(10, cfg, 2.0, 1.0), 6.0);
}

TEST(Threshold, StrictlyIncreasingInRoundForPositiveBeta) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    FedDistConfig cfg;
    cfg.beta = u(rng);
    const double mu = u(rng);
    const double sigma = u(rng);
    for (int t = 1; t < 50; ++t) {
      EXPECT_GT(divergence_threshold(t + 1, cfg, mu, sigma), divergence_threshold(t, cfg, mu, sigma));
    }
  }
}

DistanceMatrix make_pi(std::size_t units, std::size_t clients, std::vector<double> entries) {
  DistanceMatrix pi;
  pi.units = units;
  pi.clients = clients;
  pi.entries = std::move(entries);
  return pi;
}

TEST(SelectDivergent, HandExamples) {
  const DistanceMatrix pi = make_pi(2, 2, {1.0, 2.0, 0.5, 0.1});
  EXPECT_TRUE(select_divergent(pi, 5.0, 8).empty());
  EXPECT_EQ(select_divergent(pi, 1.5, 8), (std::vector<DivergentUnit>{{1, 0, 2.0}}));
  // Strictly above: an entry equal to the threshold is not divergent.
  EXPECT_TRUE(select_divergent(pi, 2.0, 8).empty());
  std::size_t truncated = 0;
  const auto capped = select_divergent(pi, 0.2, 1, &truncated);
  EXPECT_EQ(capped, (std::vector<DivergentUnit>{{1, 0, 2.0}}));
  EXPECT_EQ(truncated, 1u);
}

TEST(SelectDivergent, MatchesSortAndTruncateOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t units = 1 + rng() % 12;
    const std::size_t clients = 1 + rng() % 6;
    std::vector<double> entries(units * clients);
    for (double& e : entries) e = u(rng);
    const DistanceMatrix pi = make_pi(units, clients, entries);
    const double threshold = u(rng);
    const std::size_t cap = rng() % 6;
    // Oracle: per unit the best column, then a full sort.
    std::vector<DivergentUnit> oracle;
    for (std::size_t d = 0; d < units; ++d) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < clients; ++k) {
        if (pi.at(d, k) > pi.at(d, best)) best = k;
      }
      if (pi.at(d, best) > threshold) oracle.push_back({best, d, pi.at(d, best)});
    }
    std::sort(oracle.begin(), oracle.end(), [](const DivergentUnit& a, const DivergentUnit& b) {
      return a.distance != b.distance ? a.distance > b.distance : a.unit < b.unit;
    });
    const std::size_t expected_truncated = oracle.size() > cap ? oracle.size() - cap : 0;
    if (oracle.size() > cap) oracle.resize(cap);
    std::size_t truncated = 0;
    EXPECT_EQ(select_divergent(pi, threshold, cap, &truncated), oracle);
    EXPECT_EQ(truncated, expected_truncated);
  }
}

// Drives FedDist and FedAvg side by side from the same state for `rounds`.
void expect_degenerate(std::vector<ClientState> clients, const ModelWeights& start, const FedDistConfig& fcfg,
                       int rounds) {
  std::vector<ClientState> twins = clients;
  ModelWeights avg_server = start;
  ModelWeights dist_server = start;
  const TrainingConfig cfg = quick_config();
  for (int t = 1; t <= rounds; ++t) {
    const RoundContext ctx{t, 1, {}};
    const RoundOutcome avg = fedavg_round(avg_server, pointers(clients), cfg, ctx);
    const RoundOutcome dist = feddist_round(dist_server, pointers(twins), cfg, fcfg, ctx);
    ASSERT_EQ(dist.ledger.total_units_added(), 0u) << "round " << t;
    ASSERT_EQ(avg.server, dist.server) << "round " << t;
    EXPECT_EQ(dist.ledger.bytes_up, avg.ledger.bytes_up);
    EXPECT_EQ(dist.ledger.bytes_down, avg.ledger.bytes_down);
    EXPECT_EQ(dist.ledger.metadata_bytes, clients.size() * shape_notice_bytes(start));
    EXPECT_EQ(dist.ledger.sub_rounds, 0u);
    avg_server = avg.server;
    dist_server = dist.server;
  }
}

TEST(FedDist, IdenticalClientsNeverGrowAndMatchFedAvg) {
  const ModelWeights server = random_model(arch(8, 2, {conv(4, 3), pool(2), dense(6), softmax(3)}), 3);
  const WindowSet data = random_windows(8, 2, 24, 3, 1);
  std::vector<ClientState> clients;
  for (int k = 0; k < 3; ++k) clients.push_back(make_client(k, data, 5, server));
  expect_degenerate(clients, server, FedDistConfig{}, 20);
}

TEST(FedDist, UnreachableThresholdMatchesFedAvg) {
  const ModelWeights server = random_model(arch(8, 2, {conv(4, 3), pool(2), dense(6), softmax(3)}), 3);
  FedDistConfig fcfg;
  fcfg.beta = 1e9;
  expect_degenerate(heterogeneous_clients(server, 4, 8), server, fcfg, 20);
}

TEST(FedDist, SingleDisplacedUnitGrowsExactlyOnce) {
  const Architecture a = arch(1, 4, {dense(6), dense(8), softmax(3)});
  const ModelWeights server = random_model(a, 21);
  ModelWeights trained = random_model(a, 22);
  ModelWeights displaced = trained;
  for (std::size_t r = 0; r < displaced.layers[1].in; ++r) displaced.layers[1].weight(r, 0) += 10.0;
  displaced.layers[1].bias[0] += 10.0;

  std::vector<ClientState> clients;
  clients.push_back(make_client(0, random_windows(1, 4, 90, 3, 1), 1, server));
  clients.push_back(make_client(1, random_windows(1, 4, 10, 3, 2), 2, server));
  std::size_t sub_calls = 0;
  RoundContext ctx;
  ctx.round = 1;
  ctx.client_update = [&](const ClientState& c, const ModelWeights& start, const TrainingConfig& cfg, std::uint64_t) {
    if (cfg.frozen_prefix == 0) return TrainResult{c.id == 0 ? trained : displaced, {}};
    ++sub_calls;
    return TrainResult{start, {}};
  };

  // Oracle: the averaged layer sits 0.1 of the displacement from client 0
  // and 0.9 from client 1; only the latter clears the pooled threshold.
  const std::vector<double> f{0.9, 0.1};
  const ModelWeights avg = weighted_average(std::vector<ModelWeights>{trained, displaced}, f);
  const std::vector<const LayerWeights*> layers{&trained.layers[1], &displaced.layers[1]};
  const DistanceMatrix pi = distance_matrix(avg.layers[1], layers, 1);
  const double threshold = divergence_threshold(1, FedDistConfig{}, pi.mu, pi.sigma);
  std::size_t above = 0;
  for (double e : pi.entries) above += e > threshold;
  ASSERT_EQ(above, 1u);
  ASSERT_GT(pi.at(0, 1), threshold);

  const TrainingConfig cfg = quick_config();
  const RoundOutcome out = feddist_round(server, pointers(clients), cfg, FedDistConfig{}, ctx);
  EXPECT_EQ(out.ledger.units_added, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(out.server.layers[1].out, 9u);
  EXPECT_EQ(out.server.layers[2].in, 9u);
  EXPECT_EQ(neuron_vector(out.server.layers[1], 8).values, neuron_vector(displaced.layers[1], 0).values);
  EXPECT_EQ(out.ledger.sub_rounds, 1u);
  EXPECT_EQ(sub_calls, 2u);

  // Sub-round accounting: frozen layers plus new rows down, unfrozen layers up.
  ASSERT_EQ(out.ledger.events.size(), 2u);
  const RoundEvent& e = out.ledger.events[1];
  EXPECT_EQ(e.phase, "layerwise");
  EXPECT_EQ(e.layer, 1);
  const std::size_t vb = bytes_per_value(cfg.precision);
  const std::size_t down = layer_byte_size(out.server.layers[0], cfg.precision) +
                           layer_byte_size(out.server.layers[1], cfg.precision) + 3 * vb;
  EXPECT_EQ(e.bytes_down, 2 * down);
  EXPECT_EQ(e.bytes_up, 2 * layer_byte_size(out.server.layers[2], cfg.precision));
  EXPECT_EQ(out.ledger.bytes_up, out.ledger.events[0].bytes_up + e.bytes_up);
}

TEST(FedDist, OutputLayerNeverGrowsAndShapesOnlyIncrease) {
  Architecture a = arch(12, 3, {conv(4, 3), pool(2), dense(6), softmax(3)});
  ModelWeights server = random_model(a, 3);
  auto clients = heterogeneous_clients(server, 4, 30);
  FedDistConfig fcfg;
  fcfg.beta = 0.0;
  fcfg.base_sigma_multiplier = 0.5;
  fcfg.max_new_units_per_layer = 2;
  auto prev = server.shape_signature();
  std::size_t grown = 0;
  for (int t = 1; t <= 6; ++t) {
    const RoundOutcome out = feddist_round(server, pointers(clients), quick_config(), fcfg, RoundContext{t, 2, {}});
    const auto sig = out.server.shape_signature();
    for (std::size_t i = 0; i < sig.size(); ++i) EXPECT_GE(sig[i], prev[i]);
    EXPECT_EQ(sig.back(), 3u);
    EXPECT_EQ(out.ledger.units_added.back(), 0u);
    EXPECT_LE(out.ledger.units_added[0], 2u);
    grown += out.ledger.total_units_added();
    prev = sig;
    server = out.server;
  }
  EXPECT_GT(grown, 0u);
}

TEST(FedDist, DeterministicAcrossThreadCounts) {
  const ModelWeights server = random_model(arch(12, 3, {conv(4, 3), pool(2), dense(6), softmax(3)}), 3);
  auto a = heterogeneous_clients(server, 4, 30);
  auto b = a;
  FedDistConfig fcfg;
  fcfg.base_sigma_multiplier = 0.5;
  const RoundOutcome one = feddist_round(server, pointers(a), quick_config(), fcfg, RoundContext{1, 1, {}});
  auto pb = pointers(b);
  std::reverse(pb.begin(), pb.end());
  const RoundOutcome many = feddist_round(server, pb, quick_config(), fcfg, RoundContext{1, 4, {}});
  EXPECT_EQ(one.server, many.server);
  EXPECT_EQ(one.ledger.bytes_up, many.ledger.bytes_up);
  EXPECT_GT(one.ledger.total_units_added(), 0u);
}

TEST(Ledger, GrowthAtEveryLayerCostsAboutOnePlusHalfLMinusOne) {
  // Equal-width model with L = 4 parameterized layers.
  const std::size_t w = 16;
  const Architecture a = arch(1, w, {dense(w), dense(w), dense(w), softmax(w)});
  const ModelWeights server = random_model(a, 5);
  auto da = heterogeneous_clients(server, 4, 40);
  auto db = da;
  const TrainingConfig cfg = quick_config();
  FedDistConfig fcfg;
  fcfg.beta = 0.0;
  fcfg.base_sigma_multiplier = 1e-3;
  fcfg.max_new_units_per_layer = 1;
  const RoundOutcome avg = fedavg_round(server, pointers(da), cfg, RoundContext{});
  const RoundOutcome dist = feddist_round(server, pointers(db), cfg, fcfg, RoundContext{});
  ASSERT_EQ(dist.ledger.sub_rounds, 3u);
  const std::vector<CommLedger> avg_l{avg.ledger};
  const std::vector<CommLedger> dist_l{dist.ledger};
  const double ratio = cost_ratio(ledger_totals(dist_l), ledger_totals(avg_l));
  EXPECT_NEAR(ratio, 1.0 + 3.0 / 2.0, 0.1 * 2.5);
}

TEST(Ledger, TotalsAreAdditive) {
  EXPECT_EQ(ledger_totals({}).total_bytes(), 0u);
  EXPECT_EQ(ledger_totals({}).rounds, 0u);
  CommLedger a;
  a.bytes_up = 3;
  a.bytes_down = 5;
  a.metadata_bytes = 1;
  a.sub_rounds = 2;
  a.units_added = {1, 2};
  CommLedger b = a;
  b.units_added = {0, 0};
  const std::vector<CommLedger> both{a, b};
  const CommSummary s = ledger_totals(both);
  EXPECT_EQ(s.rounds, 2u);
  EXPECT_EQ(s.payload_bytes(), 16u);
  EXPECT_EQ(s.total_bytes(), 18u);
  EXPECT_EQ(s.sub_rounds, 4u);
  EXPECT_EQ(s.growth, (std::vector<std::size_t>{3, 0}));
}

TEST(Fractions, SumToOne) {
  const ModelWeights server = random_model(arch(4, 1, {dense(3), softmax(2)}), 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto clients = heterogeneous_clients(server, 1 + seed % 7, seed);
    const auto f = data_fractions(pointers(clients));
    double s = 0.0;
    for (double x : f) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Algorithm, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::kFedAvg, Algorithm::kFedProx, Algorithm::kFedDist, Algorithm::kLocalOnly,
                      Algorithm::kCentralized}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("fedsgd"), ConfigError);
}

TEST(FedDist, BlobClientsLearn) {
  // Sanity: a few FedDist rounds on separable blobs reach high accuracy.
  const ModelWeights start = initialize_model(arch(4, 2, {dense(8), softmax(3)}), 4);
  std::vector<ClientState> clients;
  for (int k = 0; k < 3; ++k) clients.push_back(make_client(k, blob_windows(4, 2, 20, 3, 50 + k), 60 + k, start));
  TrainingConfig cfg = quick_config();
  ModelWeights server = start;
  for (int t = 1; t <= 10; ++t) server = feddist_round(server, pointers(clients), cfg, FedDistConfig{}, {t, 1, {}}).server;
  const WindowSet test = blob_windows(4, 2, 30, 3, 99);
  const auto pred = evaluate(server, test);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == test.labels[i];
  EXPECT_GT(static_cast<double>(ok) / static_cast<double>(pred.size()), 0.9);
}

}  // namespace
}  // namespace feddist
