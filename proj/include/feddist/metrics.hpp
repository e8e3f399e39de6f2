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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feddist/aggregation.hpp"
#include "feddist/client.hpp"
#include "feddist/dataset.hpp"
#include "feddist/model.hpp"

namespace feddist {

/// Rows are truth, columns are predictions.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * classes + predicted];
  }
  std::size_t total() const;
  std::size_t support(std::size_t c) const;
  std::size_t predicted(std::size_t c) const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predictions,
                          std::size_t classes);

// Per-class scores skip classes that are absent from both truth and
// predictions; 0/0 inside a class counts as 0.
double accuracy(const ConfusionMatrix& cm);
double macro_precision(const ConfusionMatrix& cm);
double macro_recall(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);
/// Support-weighted F1.
double weighted_f1(const ConfusionMatrix& cm);

struct ScoreBundle {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

ScoreBundle score(const ConfusionMatrix& cm);
ScoreBundle score_model(const ModelWeights& model, const WindowSet& data);
ScoreBundle evaluate_global(const ModelWeights& server_model, const WindowSet& global_test);

struct ViewSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<std::pair<int, double>> per_client;  // (client id, macro F1)
};

/// Population mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

/// Each client's current model on its own test set.
ViewSummary evaluate_personalization(std::span<const ClientState* const> clients);

/// Each client's best-personalization snapshot on the global test set.
/// Clients without a snapshot are skipped and reported in `warnings`.
ViewSummary evaluate_generalization(std::span<const ClientState* const> clients,
                                    const WindowSet& global_test,
                                    std::vector<std::string>* warnings = nullptr);

/// Running max of personalization: replaces the snapshot only on a strictly
/// higher score. Returns true when the snapshot changed.
bool update_best_snapshot(ClientState& client, double personalization, int round);

struct ClientScore {
  int id = 0;
  bool active = false;
  std::optional<double> personalization;
  std::optional<double> generalization;
  std::optional<int> best_round;
};

struct RoundReport {
  int round = 0;
  Algorithm algorithm = Algorithm::kFedAvg;
  std::optional<double> global_f1;
  std::optional<double> global_weighted_f1;
  std::optional<double> global_accuracy;
  double personalization_mean = 0.0;
  double personalization_std = 0.0;
  double generalization_mean = 0.0;
  double generalization_std = 0.0;
  std::vector<ClientScore> clients;
  std::size_t parameters = 0;
  std::vector<std::size_t> shape;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;  // includes shape notices
  std::size_t sub_rounds = 0;
  std::size_t units_added = 0;
  std::size_t active_clients = 0;
};

/// Fixed column order of the round CSV.
inline constexpr const char* kRoundCsvHeader =
    "round,algorithm,global_f1,pers_mean,pers_std,gen_mean,gen_std,params,bytes_up,bytes_down,"
    "units_added";

void write_csv_row(std::ostream& os, const RoundReport& report);
/// One JSON object per line with per-client detail.
std::string to_json_record(const RoundReport& report);

}  // namespace feddist
