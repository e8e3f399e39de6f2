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
#include <span>
#include <vector>

namespace feddist {

/// A set of fixed-length multichannel windows with one class label each.
/// Inputs are stored example-major, then time-major: value (i, t, c) lives at
/// i * length * channels + t * channels + c.
struct WindowSet {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> inputs;
  std::vector<int> labels;

  WindowSet() = default;
  WindowSet(std::size_t length_, std::size_t channels_) : length(length_), channels(channels_) {}

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t example_size() const { return length * channels; }

  std::span<const double> example(std::size_t i) const {
    return {inputs.data() + i * example_size(), example_size()};
  }
  std::span<double> example(std::size_t i) {
    return {inputs.data() + i * example_size(), example_size()};
  }

  void push_back(std::span<const double> values, int label);
  void append(const WindowSet& other);
  WindowSet subset(std::span<const std::size_t> indices) const;

  bool operator==(const WindowSet&) const = default;
};

/// Concatenates several sets into one; all must share length and channels.
WindowSet concatenate(std::span<const WindowSet* const> parts);

}  // namespace feddist
