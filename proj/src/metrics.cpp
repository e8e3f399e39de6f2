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

#include "feddist/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

#include "feddist/fabric.hpp"
#include "feddist/nn.hpp"

namespace feddist {
namespace {

struct ClassScores {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;
};

ClassScores per_class(const ConfusionMatrix& cm) {
  ClassScores s;
  for (std::size_t c = 0; c < cm.classes; ++c) {
    const std::size_t support = cm.support(c);
    const std::size_t predicted = cm.predicted(c);
    if (support == 0 && predicted == 0) continue;
    const double tp = static_cast<double>(cm.at(c, c));
    const double p = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    const double r = support == 0 ? 0.0 : tp / static_cast<double>(support);
    s.precision.push_back(p);
    s.recall.push_back(r);
    s.f1.push_back(p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r));
    s.support.push_back(support);
  }
  return s;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t v : counts) t += v;
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t c) const {
  std::size_t t = 0;
  for (std::size_t p = 0; p < classes; ++p) t += at(c, p);
  return t;
}

std::size_t ConfusionMatrix::predicted(std::size_t c) const {
  std::size_t t = 0;
  for (std::size_t r = 0; r < classes; ++r) t += at(r, c);
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predictions, std::size_t classes) {
  if (truth.size() != predictions.size()) {
    throw DataError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix cm{classes, std::vector<std::size_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predictions[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes || static_cast<std::size_t>(p) >= classes) {
      throw DataError("confusion: label outside [0, " + std::to_string(classes) + ")");
    }
    ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t c = 0; c < cm.classes; ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(total);
}

double macro_precision(const ConfusionMatrix& cm) { return mean_of(per_class(cm).precision); }
double macro_recall(const ConfusionMatrix& cm) { return mean_of(per_class(cm).recall); }
double macro_f1(const ConfusionMatrix& cm) { return mean_of(per_class(cm).f1); }

double weighted_f1(const ConfusionMatrix& cm) {
  const ClassScores s = per_class(cm);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < s.f1.size(); ++i) {
    num += s.f1[i] * static_cast<double>(s.support[i]);
    den += static_cast<double>(s.support[i]);
  }
  return den == 0.0 ? 0.0 : num / den;
}

ScoreBundle score(const ConfusionMatrix& cm) {
  const ClassScores s = per_class(cm);
  ScoreBundle b;
  b.accuracy = accuracy(cm);
  b.precision = mean_of(s.precision);
  b.recall = mean_of(s.recall);
  b.macro_f1 = mean_of(s.f1);
  b.weighted_f1 = weighted_f1(cm);
  return b;
}

ScoreBundle score_model(const ModelWeights& model, const WindowSet& data) {
  if (data.empty()) throw DataError("cannot score a model on an empty test set");
  return score(confusion(data.labels, evaluate(model, data), model.classes()));
}

ScoreBundle evaluate_global(const ModelWeights& server_model, const WindowSet& global_test) {
  return score_model(server_model, global_test);
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

ViewSummary evaluate_personalization(std::span<const ClientState* const> clients) {
  ViewSummary view;
  std::vector<double> scores;
  for (const ClientState* c : clients) {
    if (!c->test || c->test->empty()) throw DataError("client " + std::to_string(c->id) + " has no test set");
    const double f1 = score_model(c->model, *c->test).macro_f1;
    scores.push_back(f1);
    view.per_client.emplace_back(c->id, f1);
  }
  std::tie(view.mean, view.std) = mean_std(scores);
  return view;
}

ViewSummary evaluate_generalization(std::span<const ClientState* const> clients, const WindowSet& global_test,
                                    std::vector<std::string>* warnings) {
  ViewSummary view;
  std::vector<double> scores;
  for (const ClientState* c : clients) {
    if (!c->best) {
      if (warnings != nullptr) warnings->push_back("client " + std::to_string(c->id) + " was never evaluated");
      continue;
    }
    const double f1 = score_model(c->best->model, global_test).macro_f1;
    scores.push_back(f1);
    view.per_client.emplace_back(c->id, f1);
  }
  std::tie(view.mean, view.std) = mean_std(scores);
  return view;
}

bool update_best_snapshot(ClientState& client, double personalization, int round) {
  if (client.best && !(personalization > client.best->score)) return false;
  client.best = Snapshot{round, personalization, client.model, content_hash(client.model)};
  return true;
}

void write_csv_row(std::ostream& os, const RoundReport& r) {
  os << r.round << ',' << to_string(r.algorithm) << ',' << (r.global_f1 ? fixed(*r.global_f1) : std::string()) << ','
     << fixed(r.personalization_mean) << ',' << fixed(r.personalization_std) << ',' << fixed(r.generalization_mean)
     << ',' << fixed(r.generalization_std) << ',' << r.parameters << ',' << r.bytes_up << ',' << r.bytes_down << ','
     << r.units_added << '\n';
}

std::string to_json_record(const RoundReport& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["algorithm"] = to_string(r.algorithm);
  j["global_f1"] = r.global_f1 ? nlohmann::ordered_json(*r.global_f1) : nlohmann::ordered_json(nullptr);
  j["global_weighted_f1"] =
      r.global_weighted_f1 ? nlohmann::ordered_json(*r.global_weighted_f1) : nlohmann::ordered_json(nullptr);
  j["global_accuracy"] = r.global_accuracy ? nlohmann::ordered_json(*r.global_accuracy) : nlohmann::ordered_json(nullptr);
  j["personalization"] = {{"mean", r.personalization_mean}, {"std", r.personalization_std}};
  j["generalization"] = {{"mean", r.generalization_mean}, {"std", r.generalization_std}};
  j["parameters"] = r.parameters;
  j["shape"] = r.shape;
  j["bytes_up"] = r.bytes_up;
  j["bytes_down"] = r.bytes_down;
  j["sub_rounds"] = r.sub_rounds;
  j["units_added"] = r.units_added;
  j["active_clients"] = r.active_clients;
  auto& clients = j["clients"] = nlohmann::ordered_json::array();
  for (const ClientScore& c : r.clients) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    cj["active"] = c.active;
    cj["personalization"] = c.personalization ? nlohmann::ordered_json(*c.personalization) : nlohmann::ordered_json(nullptr);
    cj["generalization"] = c.generalization ? nlohmann::ordered_json(*c.generalization) : nlohmann::ordered_json(nullptr);
    cj["best_round"] = c.best_round ? nlohmann::ordered_json(*c.best_round) : nlohmann::ordered_json(nullptr);
    clients.push_back(std::move(cj));
  }
  return j.dump();
}

}  // namespace feddist
