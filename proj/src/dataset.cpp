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

#include "feddist/dataset.hpp"

#include "feddist/common.hpp"

namespace feddist {

void WindowSet::push_back(std::span<const double> values, int label) {
  if (values.size() != example_size()) {
    throw ShapeError("window of " + std::to_string(values.size()) + " values does not match " +
                     std::to_string(length) + "x" + std::to_string(channels));
  }
  inputs.insert(inputs.end(), values.begin(), values.end());
  labels.push_back(label);
}

void WindowSet::append(const WindowSet& other) {
  if (other.empty()) return;
  if (empty() && inputs.empty() && length == 0 && channels == 0) {
    length = other.length;
    channels = other.channels;
  }
  if (other.length != length || other.channels != channels) {
    throw ShapeError("cannot append windows of a different shape");
  }
  inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

WindowSet WindowSet::subset(std::span<const std::size_t> indices) const {
  WindowSet out(length, channels);
  out.inputs.reserve(indices.size() * example_size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(example(i), labels[i]);
  return out;
}

WindowSet concatenate(std::span<const WindowSet* const> parts) {
  WindowSet out;
  for (const WindowSet* part : parts) {
    if (out.length == 0 && out.channels == 0) {
      out.length = part->length;
      out.channels = part->channels;
    }
    out.append(*part);
  }
  return out;
}

}  // namespace feddist
