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
#include <memory>
#include <optional>
#include <vector>

#include "feddist/dataset.hpp"
#include "feddist/model.hpp"

namespace feddist {

/// A stored client model together with the personalization score that made it
/// the client's best so far.
struct Snapshot {
  int round = 0;
  double score = 0.0;
  ModelWeights model;
  std::uint64_t hash = 0;
};

struct ClientState {
  int id = 0;
  std::shared_ptr<const WindowSet> train;
  std::shared_ptr<const WindowSet> test;
  std::uint64_t seed = 0;
  std::vector<double> class_weights;
  ModelWeights model;
  std::optional<Snapshot> best;
  bool active = false;

  std::size_t n() const { return train ? train->size() : 0; }
};

}  // namespace feddist
