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

#include "feddist/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <string_view>

#include "feddist/common.hpp"

namespace feddist {
namespace {

constexpr double kZeroVarianceTolerance = 1e-12;

bool is_zero_variance(double stddev, double mean) {
  return !(stddev > kZeroVarianceTolerance * std::max(1.0, std::abs(mean)));
}

int majority_label(std::span<const int> labels) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  int best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("line " + std::to_string(line) + ": bad " + what + " '" + std::string(field) + "'");
  }
  return value;
}

std::vector<double> dirichlet(std::mt19937_64& rng, double alpha, std::size_t classes) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(classes);
  double sum = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Every draw underflowed; the limit of a tiny alpha is a one-hot prior.
    std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    std::fill(p.begin(), p.end(), 0.0);
    p[pick(rng)] = 1.0;
    return p;
  }
  for (double& v : p) v /= sum;
  return p;
}

struct ChannelPrototype {
  double offset = 0.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  double harmonic = 0.0;
  double phase = 0.0;
};

using ClassPrototype = std::array<ChannelPrototype, kSensorChannels>;

std::vector<ClassPrototype> make_prototypes(std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x70726f74));
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  std::uniform_real_distribution<double> amplitude(0.3, 1.5);
  std::uniform_real_distribution<double> frequency(0.4, 3.0);
  std::uniform_real_distribution<double> harmonic(0.0, 0.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<ClassPrototype> protos(classes);
  for (ClassPrototype& proto : protos) {
    for (ChannelPrototype& ch : proto) {
      ch.offset = offset(rng);
      ch.amplitude = amplitude(rng);
      ch.frequency = frequency(rng);
      ch.harmonic = harmonic(rng);
      ch.phase = phase(rng);
    }
  }
  return protos;
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Rodrigues rotation about a uniformly drawn unit axis.
Matrix3 random_rotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, 3> axis{normal(rng), normal(rng), normal(rng)};
  double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(norm > 0.0)) {
    axis = {0.0, 0.0, 1.0};
    norm = 1.0;
  }
  for (double& a : axis) a /= norm;
  std::uniform_real_distribution<double> angle_dist(-max_angle, max_angle);
  const double angle = max_angle > 0.0 ? angle_dist(rng) : 0.0;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const auto [x, y, z] = axis;
  return Matrix3{{{c + x * x * (1 - c), x * y * (1 - c) - z * s, x * z * (1 - c) + y * s},
                  {y * x * (1 - c) + z * s, c + y * y * (1 - c), y * z * (1 - c) - x * s},
                  {z * x * (1 - c) - y * s, z * y * (1 - c) + x * s, c + z * z * (1 - c)}}};
}

}  // namespace

void SensorSeries::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw DataError("sample rate must be positive");
  for (std::size_t c = 0; c < kSensorChannels; ++c) {
    if (channels[c].size() != labels.size()) {
      throw DataError("channel " + std::to_string(c) + " has " + std::to_string(channels[c].size()) +
                      " samples, labels have " + std::to_string(labels.size()));
    }
  }
  for (int l : labels) {
    if (l < 0) throw DataError("negative class label " + std::to_string(l));
  }
}

NormalizedSeries z_normalize(const SensorSeries& series) {
  series.validate();
  NormalizedSeries out{series, {}};
  const std::size_t n = series.size();
  if (n == 0) return out;
  for (std::size_t c = 0; c < kSensorChannels; ++c) {
    std::vector<double>& ch = out.series.channels[c];
    double sum = 0.0;
    for (double v : ch) sum += v;
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double v : ch) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(n));
    const bool flat = is_zero_variance(stddev, mean);
    out.zero_variance[c] = flat;
    for (double& v : ch) v = flat ? 0.0 : (v - mean) / stddev;
  }
  return out;
}

ChannelStats fit_channel_stats(const WindowSet& windows) {
  const std::size_t channels = windows.channels;
  ChannelStats stats{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0),
                     std::vector<bool>(channels, false)};
  const std::size_t rows = windows.size() * windows.length;
  if (rows == 0) {
    std::fill(stats.stddev.begin(), stats.stddev.end(), 1.0);
    return stats;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) stats.mean[c] += windows.inputs[r * channels + c];
  }
  for (double& m : stats.mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double d = windows.inputs[r * channels + c] - stats.mean[c];
      stats.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(rows));
    stats.zero_variance[c] = is_zero_variance(stats.stddev[c], stats.mean[c]);
  }
  return stats;
}

void apply_channel_stats(WindowSet& windows, const ChannelStats& stats) {
  const std::size_t channels = windows.channels;
  if (stats.mean.size() != channels || stats.stddev.size() != channels) {
    throw DataError("channel statistics do not match the window channel count");
  }
  const std::size_t rows = windows.size() * windows.length;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      double& v = windows.inputs[r * channels + c];
      v = stats.zero_variance[c] ? v - stats.mean[c] : (v - stats.mean[c]) / stats.stddev[c];
    }
  }
}

std::size_t window_count(std::size_t samples, std::size_t length, std::size_t step) {
  if (length == 0 || step == 0) throw ConfigError("window length and step must be positive");
  return samples < length ? 0 : (samples - length) / step + 1;
}

WindowSet window(const SensorSeries& series, std::size_t length, std::size_t step,
                 std::vector<std::string>* warnings) {
  series.validate();
  WindowSet out(length, kSensorChannels);
  const std::size_t count = window_count(series.size(), length, step);
  if (count == 0) {
    if (warnings != nullptr) {
      warnings->push_back("series of " + std::to_string(series.size()) + " samples is shorter than one window of " +
                          std::to_string(length));
    }
    return out;
  }
  out.inputs.reserve(count * length * kSensorChannels);
  out.labels.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t offset = w * step;
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t c = 0; c < kSensorChannels; ++c) out.inputs.push_back(series.channels[c][offset + t]);
    }
    out.labels.push_back(majority_label(std::span<const int>(series.labels).subspan(offset, length)));
  }
  return out;
}

Split stratified_split(const WindowSet& windows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < windows.size(); ++i) by_class[windows.labels[i]].push_back(i);

  Split split;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (auto& [label, indices] : by_class) {
    const std::size_t n = indices.size();
    if (n == 1) {
      train.push_back(indices.front());
      split.warnings.push_back("class " + std::to_string(label) + " has a single window; it goes to train");
      continue;
    }
    const auto rounded = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    const std::size_t take = std::clamp<std::size_t>(rounded, 1, n - 1);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    std::shuffle(indices.begin(), indices.end(), rng);
    train.insert(train.end(), indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(take));
    test.insert(test.end(), indices.begin() + static_cast<std::ptrdiff_t>(take), indices.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  split.train = windows.subset(train);
  split.test = windows.subset(test);
  return split;
}

ClientData prepare_client(int id, const SensorSeries& series, const PipelineOptions& options,
                          std::vector<std::string>* warnings) {
  WindowSet windows = window(series, options.window_length, options.window_step, warnings);
  Split split = stratified_split(windows, options.train_fraction, options.split_seed);
  if (warnings != nullptr) {
    for (std::string& w : split.warnings) warnings->push_back("client " + std::to_string(id) + ": " + std::move(w));
  }
  const ChannelStats stats = fit_channel_stats(split.train);
  apply_channel_stats(split.train, stats);
  apply_channel_stats(split.test, stats);
  return ClientData{id, std::move(split.train), std::move(split.test)};
}

void SyntheticSpec::validate() const {
  if (clients == 0) throw ConfigError("synthetic.clients must be >= 1");
  if (classes < 2) throw ConfigError("synthetic.classes must be >= 2");
  if (!(dirichlet_alpha > 0.0) || !std::isfinite(dirichlet_alpha)) {
    throw ConfigError("synthetic.dirichlet_alpha must be > 0");
  }
  if (min_samples == 0 || max_samples < min_samples) {
    throw ConfigError("synthetic sample range must satisfy 0 < min_samples <= max_samples");
  }
  if (min_segment == 0 || max_segment < min_segment) {
    throw ConfigError("synthetic segment range must satisfy 0 < min_segment <= max_segment");
  }
  if (!(sample_rate > 0.0)) throw ConfigError("synthetic.sample_rate must be > 0");
  if (!(noise >= 0.0) || !(scale_jitter >= 0.0 && scale_jitter < 1.0) || !(max_rotation >= 0.0) ||
      !(offset_jitter >= 0.0)) {
    throw ConfigError("synthetic noise and device ranges must be non-negative (scale_jitter < 1)");
  }
  if (pipeline.window_length == 0 || pipeline.window_step == 0) {
    throw ConfigError("window length and step must be positive");
  }
  if (!(pipeline.train_fraction > 0.0 && pipeline.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
}

std::vector<SyntheticClient> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::vector<ClassPrototype> protos = make_prototypes(spec.classes, spec.seed);
  std::vector<SyntheticClient> out;
  out.reserve(spec.clients);
  for (std::size_t k = 0; k < spec.clients; ++k) {
    std::mt19937_64 rng(derive_seed(spec.seed, 0x636c6965, k));
    SyntheticClient client;
    client.class_priors = dirichlet(rng, spec.dirichlet_alpha, spec.classes);

    std::uniform_int_distribution<std::size_t> total_dist(spec.min_samples, spec.max_samples);
    std::uniform_int_distribution<std::size_t> segment_dist(spec.min_segment, spec.max_segment);
    std::discrete_distribution<int> class_dist(client.class_priors.begin(), client.class_priors.end());
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, spec.noise);

    const std::size_t total = total_dist(rng);
    SensorSeries series;
    series.sample_rate = spec.sample_rate;
    for (auto& ch : series.channels) ch.reserve(total);
    series.labels.reserve(total);
    while (series.size() < total) {
      const int label = class_dist(rng);
      const std::size_t length = std::min(segment_dist(rng), total - series.size());
      const double phase = phase_dist(rng);
      const ClassPrototype& proto = protos[static_cast<std::size_t>(label)];
      client.segment_labels.push_back(label);
      for (std::size_t t = 0; t < length; ++t) {
        const double time = static_cast<double>(t) / spec.sample_rate;
        for (std::size_t c = 0; c < kSensorChannels; ++c) {
          const ChannelPrototype& p = proto[c];
          const double arg = 2.0 * std::numbers::pi * p.frequency * time + phase + p.phase;
          series.channels[c].push_back(p.offset + p.amplitude * std::sin(arg) + p.harmonic * std::sin(2.0 * arg) +
                                       noise(rng));
        }
        series.labels.push_back(label);
      }
    }

    // Device traits: both sensor triads share one mounting rotation, then
    // every channel gets its own gain and offset.
    const Matrix3 rot = random_rotation(rng, spec.max_rotation);
    std::uniform_real_distribution<double> gain_dist(1.0 - spec.scale_jitter, 1.0 + spec.scale_jitter);
    std::uniform_real_distribution<double> offset_dist(-spec.offset_jitter, spec.offset_jitter);
    std::array<double, kSensorChannels> gain{};
    std::array<double, kSensorChannels> offset{};
    for (std::size_t c = 0; c < kSensorChannels; ++c) {
      gain[c] = spec.scale_jitter > 0.0 ? gain_dist(rng) : 1.0;
      offset[c] = spec.offset_jitter > 0.0 ? offset_dist(rng) : 0.0;
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
      for (std::size_t triad = 0; triad < 2; ++triad) {
        std::array<double, 3> v{};
        for (std::size_t a = 0; a < 3; ++a) v[a] = series.channels[3 * triad + a][i];
        for (std::size_t a = 0; a < 3; ++a) {
          const std::size_t c = 3 * triad + a;
          const double r = rot[a][0] * v[0] + rot[a][1] * v[1] + rot[a][2] * v[2];
          series.channels[c][i] = gain[c] * r + offset[c];
        }
      }
    }

    PipelineOptions pipeline = spec.pipeline;
    pipeline.split_seed = derive_seed(spec.seed, 0x73706c74, k, spec.pipeline.split_seed);
    client.data = prepare_client(static_cast<int>(k), series, pipeline);
    out.push_back(std::move(client));
  }
  return out;
}

SensorSeries ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!(schema.sample_rate > 0.0)) throw ConfigError("csv sample_rate must be > 0");
  std::size_t factor = 1;
  if (schema.target_rate) {
    const double ratio = schema.sample_rate / *schema.target_rate;
    if (!(*schema.target_rate > 0.0) || !(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw ConfigError("downsampling " + std::to_string(schema.sample_rate) + " Hz to " +
                        std::to_string(*schema.target_rate) + " Hz needs an integer factor");
    }
    factor = static_cast<std::size_t>(std::llround(ratio));
  }

  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSensorCsvHeader) {
    throw DataError("line 1: header must be '" + std::string(kSensorCsvHeader) + "', got '" + line + "'");
  }

  SensorSeries series;
  series.sample_rate = schema.target_rate.value_or(schema.sample_rate);
  std::size_t line_no = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 8> fields;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const std::size_t comma = rest.find(',');
      if (count == fields.size()) {
        count = fields.size() + 1;
        break;
      }
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != fields.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected 8 fields");
    }
    parse_number<double>(fields[0], line_no, "timestamp");
    std::array<double, kSensorChannels> values{};
    for (std::size_t c = 0; c < kSensorChannels; ++c) {
      values[c] = parse_number<double>(fields[c + 1], line_no, "sensor value");
      if (!std::isfinite(values[c])) throw DataError("line " + std::to_string(line_no) + ": non-finite sensor value");
    }
    const int label = parse_number<int>(fields[7], line_no, "label");
    if (label < 0) throw DataError("line " + std::to_string(line_no) + ": negative label");
    if (row++ % factor != 0) continue;
    for (std::size_t c = 0; c < kSensorChannels; ++c) series.channels[c].push_back(values[c]);
    series.labels.push_back(label);
  }
  return series;
}

}  // namespace feddist
