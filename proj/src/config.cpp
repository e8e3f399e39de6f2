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

#include "feddist/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace feddist {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Walks a parsed document, remembering the key path for error messages and
// the raw text for line lookups.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    std::string where = path.empty() ? "config" : path;
    const std::size_t line = line_of(path);
    if (line > 0) where += " (line " + std::to_string(line) + ")";
    throw ConfigError(where + ": " + message);
  }

  void only_keys(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(join(path, key), "unknown key \"" + key + "\"");
      }
    }
  }

  template <typename T>
  void read(const Json& obj, const std::string& path, const char* key, T& out) const {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string full = join(path, key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) fail(full, "expected true or false");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) fail(full, "expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) fail(full, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) fail(full, "expected a number");
    } else {
      if (!it->is_string()) fail(full, "expected a string");
    }
    out = it->get<T>();
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

 private:
  std::size_t line_of(const std::string& path) const {
    if (path.empty()) return 0;
    const std::size_t dot = path.rfind('.');
    std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1);
    const std::size_t bracket = key.find('[');
    if (bracket != std::string::npos) key = key.substr(0, bracket);
    const std::size_t pos = text_.find("\"" + key + "\"");
    if (pos == std::string_view::npos) return 0;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  std::string_view text_;
};

template <typename Fn>
auto guarded(const Reader& r, const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    r.fail(path, e.what());
  }
}

Precision parse_precision(const Reader& r, const std::string& path, const std::string& text) {
  if (text == "f64" || text == "float64") return Precision::kFloat64;
  if (text == "f32" || text == "float32") return Precision::kFloat32;
  r.fail(path, "precision must be \"f32\" or \"f64\"");
}

void read_pipeline(const Reader& r, const Json& j, const std::string& path, PipelineOptions& p) {
  r.read(j, path, "window_length", p.window_length);
  r.read(j, path, "window_step", p.window_step);
  r.read(j, path, "train_fraction", p.train_fraction);
  r.read(j, path, "split_seed", p.split_seed);
  if (p.window_length == 0 || p.window_step == 0) r.fail(path, "window_length and window_step must be >= 1");
  if (!(p.train_fraction > 0.0 && p.train_fraction < 1.0)) {
    r.fail(Reader::join(path, "train_fraction"), "must lie in (0, 1)");
  }
}

std::size_t read_dataset(const Reader& r, const Json& j, RunConfig& cfg, std::size_t& classes) {
  const std::string path = "dataset";
  r.only_keys(j, path, {"synthetic", "csv", "window_length", "window_step", "train_fraction", "split_seed"});
  PipelineOptions pipeline;
  read_pipeline(r, j, path, pipeline);
  const bool synthetic = j.contains("synthetic");
  const bool csv = j.contains("csv");
  if (synthetic == csv) r.fail(path, "exactly one of \"synthetic\" or \"csv\" is required");
  if (synthetic) {
    const std::string sp = "dataset.synthetic";
    const Json& s = j.at("synthetic");
    r.only_keys(s, sp,
                {"clients", "classes", "dirichlet_alpha", "min_samples", "max_samples", "min_segment", "max_segment",
                 "sample_rate", "noise", "scale_jitter", "max_rotation", "offset_jitter", "seed"});
    SyntheticSpec spec;
    r.read(s, sp, "clients", spec.clients);
    r.read(s, sp, "classes", spec.classes);
    r.read(s, sp, "dirichlet_alpha", spec.dirichlet_alpha);
    r.read(s, sp, "min_samples", spec.min_samples);
    r.read(s, sp, "max_samples", spec.max_samples);
    r.read(s, sp, "min_segment", spec.min_segment);
    r.read(s, sp, "max_segment", spec.max_segment);
    r.read(s, sp, "sample_rate", spec.sample_rate);
    r.read(s, sp, "noise", spec.noise);
    r.read(s, sp, "scale_jitter", spec.scale_jitter);
    r.read(s, sp, "max_rotation", spec.max_rotation);
    r.read(s, sp, "offset_jitter", spec.offset_jitter);
    cfg.dataset_seed_explicit = s.contains("seed");
    spec.seed = cfg.experiment.seed;
    r.read(s, sp, "seed", spec.seed);
    spec.pipeline = pipeline;
    guarded(r, sp, [&] {
      spec.validate();
      return 0;
    });
    classes = spec.classes;
    cfg.dataset = spec;
    return spec.clients;
  }
  const std::string cp = "dataset.csv";
  const Json& c = j.at("csv");
  r.only_keys(c, cp, {"files", "classes", "sample_rate", "target_rate"});
  CsvDataset data;
  data.pipeline = pipeline;
  const auto files = c.find("files");
  if (files == c.end() || !files->is_array() || files->empty()) {
    r.fail(Reader::join(cp, "files"), "expected a non-empty array of paths");
  }
  for (const Json& f : *files) {
    if (!f.is_string()) r.fail(Reader::join(cp, "files"), "expected a non-empty array of paths");
    data.files.emplace_back(f.get<std::string>());
  }
  if (!c.contains("classes")) r.fail(Reader::join(cp, "classes"), "required for csv datasets");
  r.read(c, cp, "classes", classes);
  if (classes < 2) r.fail(Reader::join(cp, "classes"), "must be >= 2");
  r.read(c, cp, "sample_rate", data.schema.sample_rate);
  if (c.contains("target_rate")) {
    double target = 0.0;
    r.read(c, cp, "target_rate", target);
    data.schema.target_rate = target;
  }
  if (!(data.schema.sample_rate > 0.0)) r.fail(Reader::join(cp, "sample_rate"), "must be > 0");
  const std::size_t clients = data.files.size();
  cfg.dataset = std::move(data);
  cfg.dataset_seed_explicit = true;
  return clients;
}

Architecture read_model(const Reader& r, const Json& j, std::size_t window_length, std::size_t classes) {
  if (!j.is_array() || j.empty()) r.fail("model", "expected a non-empty array of layers");
  Architecture arch;
  arch.input = InputShape{window_length, kSensorChannels};
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "model[" + std::to_string(i) + "]";
    const Json& l = j[i];
    r.only_keys(l, path, {"kind", "width", "kernel", "activation"});
    LayerSpec spec;
    std::string kind;
    if (!l.contains("kind")) r.fail(path, "\"kind\" is required");
    r.read(l, path, "kind", kind);
    spec.kind = guarded(r, path, [&] { return parse_layer_kind(kind); });
    const bool linear = spec.kind == LayerKind::kSoftmaxOutput || spec.kind == LayerKind::kMaxPool1d;
    spec.activation = linear ? Activation::kNone : Activation::kRelu;
    if (spec.kind == LayerKind::kSoftmaxOutput) spec.width = classes;
    r.read(l, path, "width", spec.width);
    r.read(l, path, "kernel", spec.kernel);
    if (l.contains("activation")) {
      std::string act;
      r.read(l, path, "activation", act);
      spec.activation = guarded(r, path, [&] { return parse_activation(act); });
    }
    if (spec.kind == LayerKind::kSoftmaxOutput && spec.width != classes) {
      r.fail(path, "softmax width " + std::to_string(spec.width) + " differs from the dataset's " +
                       std::to_string(classes) + " classes");
    }
    arch.layers.push_back(spec);
  }
  guarded(r, "model", [&] {
    arch.validate();
    return 0;
  });
  return arch;
}

OrderedJson pipeline_json(const PipelineOptions& p) {
  OrderedJson j;
  j["window_length"] = p.window_length;
  j["window_step"] = p.window_step;
  j["train_fraction"] = p.train_fraction;
  j["split_seed"] = p.split_seed;
  return j;
}

}  // namespace

Architecture default_architecture(std::size_t window_length, std::size_t classes) {
  Architecture arch;
  arch.input = InputShape{window_length, kSensorChannels};
  arch.layers = {LayerSpec{LayerKind::kConv1d, 196, 16, Activation::kRelu},
                 LayerSpec{LayerKind::kMaxPool1d, 0, 4, Activation::kNone},
                 LayerSpec{LayerKind::kDense, 1024, 1, Activation::kRelu},
                 LayerSpec{LayerKind::kSoftmaxOutput, classes, 1, Activation::kNone}};
  return arch;
}

RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const Reader r(text);
  if (!doc.is_object()) r.fail("", "expected a JSON object");
  if (doc.contains("resolved_config")) {
    const Json inner = doc.at("resolved_config");
    return parse_config_text(inner.dump(2), base_dir);
  }
  r.only_keys(doc, "",
              {"algorithm", "rounds", "seed", "threads", "eval_every", "scenario", "training", "feddist", "model",
               "dataset", "resize_to"});

  RunConfig cfg;
  cfg.base_dir = base_dir;
  ExperimentConfig& e = cfg.experiment;
  if (!doc.contains("algorithm")) r.fail("algorithm", "required");
  std::string algorithm;
  r.read(doc, "", "algorithm", algorithm);
  e.algorithm = guarded(r, "algorithm", [&] { return parse_algorithm(algorithm); });
  r.read(doc, "", "rounds", e.rounds);
  r.read(doc, "", "seed", e.seed);
  r.read(doc, "", "threads", e.threads);
  r.read(doc, "", "eval_every", e.eval_every);

  if (!doc.contains("dataset")) r.fail("dataset", "required");
  std::size_t classes = 0;
  e.clients = read_dataset(r, doc.at("dataset"), cfg, classes);
  const std::size_t window_length =
      std::visit([](const auto& d) { return d.pipeline.window_length; }, cfg.dataset);

  if (doc.contains("scenario")) {
    const Json& s = doc.at("scenario");
    r.only_keys(s, "scenario", {"kind", "start_count", "interval_rounds", "sample_size"});
    std::string kind = "full";
    r.read(s, "scenario", "kind", kind);
    e.scenario.kind = guarded(r, "scenario.kind", [&] { return parse_scenario(kind); });
    r.read(s, "scenario", "start_count", e.scenario.start_count);
    r.read(s, "scenario", "interval_rounds", e.scenario.interval_rounds);
    r.read(s, "scenario", "sample_size", e.scenario.sample_size);
  }

  e.training.proximal_coefficient = 0.01;
  if (doc.contains("training")) {
    const Json& t = doc.at("training");
    r.only_keys(t, "training",
                {"local_epochs", "learning_rate", "batch_size", "balanced_class_weights", "class_weights",
                 "proximal_coefficient", "precision"});
    r.read(t, "training", "local_epochs", e.training.local_epochs);
    r.read(t, "training", "learning_rate", e.training.learning_rate);
    r.read(t, "training", "batch_size", e.training.batch_size);
    r.read(t, "training", "balanced_class_weights", e.balanced_class_weights);
    r.read(t, "training", "proximal_coefficient", e.training.proximal_coefficient);
    if (t.contains("class_weights")) {
      const Json& w = t.at("class_weights");
      if (!w.is_array()) r.fail("training.class_weights", "expected an array of numbers");
      for (const Json& v : w) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) {
          r.fail("training.class_weights", "weights must be positive numbers");
        }
        e.training.class_weights.push_back(v.get<double>());
      }
    }
    if (t.contains("precision")) {
      std::string precision;
      r.read(t, "training", "precision", precision);
      e.training.precision = parse_precision(r, "training.precision", precision);
    }
  }

  if (doc.contains("feddist")) {
    const Json& f = doc.at("feddist");
    r.only_keys(f, "feddist", {"beta", "sigma_multiplier", "max_new_units_per_layer", "layerwise_epochs"});
    r.read(f, "feddist", "beta", e.feddist.beta);
    r.read(f, "feddist", "sigma_multiplier", e.feddist.base_sigma_multiplier);
    r.read(f, "feddist", "max_new_units_per_layer", e.feddist.max_new_units_per_layer);
    r.read(f, "feddist", "layerwise_epochs", e.feddist.layerwise_epochs);
  }

  e.model = doc.contains("model") ? read_model(r, doc.at("model"), window_length, classes)
                                  : default_architecture(window_length, classes);

  if (doc.contains("resize_to")) {
    const Json& s = doc.at("resize_to");
    if (!s.is_array()) r.fail("resize_to", "expected an array of layer widths");
    std::vector<std::size_t> shape;
    for (const Json& v : s) {
      if (!v.is_number_unsigned()) r.fail("resize_to", "expected an array of layer widths");
      shape.push_back(v.get<std::size_t>());
    }
    guarded(r, "resize_to", [&] { return resize_architecture(e.model, shape); });
    cfg.resize_to = std::move(shape);
  }

  const auto section = [](const std::string& message) {
    const std::size_t dot = message.find('.');
    const std::size_t space = message.find(' ');
    return dot != std::string::npos && dot < space ? message.substr(0, space) : std::string();
  };
  try {
    e.validate();
  } catch (const ConfigError& err) {
    r.fail(section(err.what()), err.what());
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path());
}

std::string resolved_config_json(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  OrderedJson j;
  j["algorithm"] = to_string(e.algorithm);
  j["rounds"] = e.rounds;
  j["seed"] = e.seed;
  j["threads"] = e.threads;
  j["eval_every"] = e.eval_every;
  j["scenario"] = {{"kind", to_string(e.scenario.kind)},
                   {"start_count", e.scenario.start_count},
                   {"interval_rounds", e.scenario.interval_rounds},
                   {"sample_size", e.scenario.sample_size}};
  OrderedJson t;
  t["local_epochs"] = e.training.local_epochs;
  t["learning_rate"] = e.training.learning_rate;
  t["batch_size"] = e.training.batch_size;
  t["balanced_class_weights"] = e.balanced_class_weights;
  if (!e.training.class_weights.empty()) t["class_weights"] = e.training.class_weights;
  t["proximal_coefficient"] = e.training.proximal_coefficient;
  t["precision"] = e.training.precision == Precision::kFloat32 ? "f32" : "f64";
  j["training"] = t;
  j["feddist"] = {{"beta", e.feddist.beta},
                  {"sigma_multiplier", e.feddist.base_sigma_multiplier},
                  {"max_new_units_per_layer", e.feddist.max_new_units_per_layer},
                  {"layerwise_epochs", e.feddist.layerwise_epochs}};
  OrderedJson layers = OrderedJson::array();
  for (const LayerSpec& l : e.model.layers) {
    OrderedJson lj;
    lj["kind"] = to_string(l.kind);
    if (l.kind != LayerKind::kMaxPool1d) lj["width"] = l.width;
    if (l.kind == LayerKind::kConv1d || l.kind == LayerKind::kMaxPool1d) lj["kernel"] = l.kernel;
    lj["activation"] = to_string(l.activation);
    layers.push_back(lj);
  }
  j["model"] = layers;
  OrderedJson d;
  if (const auto* s = std::get_if<SyntheticSpec>(&cfg.dataset)) {
    d = pipeline_json(s->pipeline);
    d["synthetic"] = {{"clients", s->clients},
                      {"classes", s->classes},
                      {"dirichlet_alpha", s->dirichlet_alpha},
                      {"min_samples", s->min_samples},
                      {"max_samples", s->max_samples},
                      {"min_segment", s->min_segment},
                      {"max_segment", s->max_segment},
                      {"sample_rate", s->sample_rate},
                      {"noise", s->noise},
                      {"scale_jitter", s->scale_jitter},
                      {"max_rotation", s->max_rotation},
                      {"offset_jitter", s->offset_jitter},
                      {"seed", s->seed}};
  } else {
    const auto& c = std::get<CsvDataset>(cfg.dataset);
    d = pipeline_json(c.pipeline);
    OrderedJson files = OrderedJson::array();
    for (const auto& f : c.files) files.push_back((f.is_absolute() ? f : cfg.base_dir / f).lexically_normal().string());
    OrderedJson cj;
    cj["files"] = files;
    cj["classes"] = e.model.classes();
    cj["sample_rate"] = c.schema.sample_rate;
    if (c.schema.target_rate) cj["target_rate"] = *c.schema.target_rate;
    d["csv"] = cj;
  }
  j["dataset"] = d;
  if (cfg.resize_to) j["resize_to"] = *cfg.resize_to;
  return j.dump(2);
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.experiment.seed = seed;
  if (auto* s = std::get_if<SyntheticSpec>(&cfg.dataset); s != nullptr && !cfg.dataset_seed_explicit) {
    s->seed = seed;
  }
}

std::vector<ClientData> load_dataset(const RunConfig& cfg) {
  std::vector<ClientData> out;
  if (const auto* s = std::get_if<SyntheticSpec>(&cfg.dataset)) {
    for (SyntheticClient& c : generate_synthetic(*s)) out.push_back(std::move(c.data));
    return out;
  }
  const auto& c = std::get<CsvDataset>(cfg.dataset);
  for (std::size_t k = 0; k < c.files.size(); ++k) {
    const std::filesystem::path file = c.files[k].is_absolute() ? c.files[k] : cfg.base_dir / c.files[k];
    SensorSeries series;
    try {
      series = ingest_csv(file, c.schema);
    } catch (const DataError& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    PipelineOptions pipeline = c.pipeline;
    pipeline.split_seed = derive_seed(cfg.experiment.seed, 0x73706c74, k, c.pipeline.split_seed);
    out.push_back(prepare_client(static_cast<int>(k), series, pipeline));
  }
  return out;
}

}  // namespace feddist
