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

#include "feddist/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "feddist/fabric.hpp"

namespace feddist {
namespace {

using OrderedJson = nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

RunPaths run_paths(const std::filesystem::path& out_dir) {
  return RunPaths{out_dir / "manifest.json", out_dir / "rounds.csv", out_dir / "rounds.jsonl",
                  out_dir / "final_model.fdmw", out_dir / "final_shape.txt"};
}

int run(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const RunPaths paths = run_paths(out_dir);
  OrderedJson manifest;
  try {
    std::filesystem::create_directories(out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }

  const ExperimentConfig& e = cfg.experiment;
  manifest["status"] = "running";
  manifest["code_version"] = kCodeVersion;
  OrderedJson seeds;
  seeds["global"] = e.seed;
  if (const auto* s = std::get_if<SyntheticSpec>(&cfg.dataset)) seeds["dataset"] = s->seed;
  seeds["model"] = cfg.resize_to ? model_seed(e.seed, true) : model_seed(e.seed);
  OrderedJson client_seeds = OrderedJson::array();
  for (std::size_t k = 0; k < e.clients; ++k) client_seeds.push_back(client_seed(e.seed, k));
  seeds["clients"] = client_seeds;
  manifest["seeds"] = seeds;
  manifest["outputs"] = {{"rounds_csv", paths.rounds_csv.filename().string()},
                         {"rounds_jsonl", paths.rounds_jsonl.filename().string()},
                         {"final_model", paths.final_model.filename().string()},
                         {"final_shape", paths.final_shape.filename().string()}};
  manifest["duration_seconds"] = nullptr;
  manifest["error"] = nullptr;
  manifest["resolved_config"] = OrderedJson::parse(resolved_config_json(cfg));

  const auto finish = [&](const std::string& status, const std::string& error) {
    manifest["status"] = status;
    manifest["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["error"] = error.empty() ? OrderedJson(nullptr) : OrderedJson(error);
    write_text(paths.manifest, manifest.dump(2) + "\n");
  };

  try {
    write_text(paths.manifest, manifest.dump(2) + "\n");
    const std::vector<ClientData> data = load_dataset(cfg);

    std::ofstream csv(paths.rounds_csv, std::ios::binary);
    std::ofstream jsonl(paths.rounds_jsonl, std::ios::binary);
    if (!csv || !jsonl) throw DataError("cannot write round reports into " + out_dir.string());
    csv << kRoundCsvHeader << '\n';
    RunHooks hooks;
    hooks.on_report = [&](const RoundReport& report) {
      write_csv_row(csv, report);
      jsonl << to_json_record(report) << '\n';
      csv.flush();
      jsonl.flush();
    };

    const ExperimentResult result = cfg.resize_to ? rerun_with_final_shape(e, *cfg.resize_to, data, hooks)
                                                  : run_experiment(e, data, hooks);
    save_model(paths.final_model, result.final_model, e.training.precision);
    write_text(paths.final_shape, shape_dump(result.final_model));
    if (result.aborted) {
      log << "error: run aborted: " << result.error << '\n';
      finish("failed", result.error);
      return 1;
    }
    finish("completed", "");
    return 0;
  } catch (const std::exception& ex) {
    log << "error: " << ex.what() << '\n';
    try {
      finish("failed", ex.what());
    } catch (const std::exception& inner) {
      log << "error: " << inner.what() << '\n';
    }
    return 1;
  }
}

RunSummary summarize_run(const std::filesystem::path& run_dir) {
  const RunPaths paths = run_paths(run_dir);
  std::ifstream manifest_in(paths.manifest);
  if (!manifest_in) throw DataError(run_dir.string() + ": missing manifest");
  OrderedJson manifest;
  try {
    manifest = OrderedJson::parse(manifest_in);
  } catch (const OrderedJson::exception& ex) {
    throw DataError(paths.manifest.string() + ": " + ex.what());
  }
  if (manifest.value("status", std::string()) != "completed") {
    throw DataError(run_dir.string() + ": run did not complete");
  }

  std::ifstream csv(paths.rounds_csv);
  if (!csv) throw DataError(run_dir.string() + ": missing " + paths.rounds_csv.filename().string());
  std::string line;
  std::getline(csv, line);
  if (line != kRoundCsvHeader) throw DataError(paths.rounds_csv.string() + ": unexpected header");

  RunSummary summary;
  summary.name = run_dir.filename().empty() ? run_dir.parent_path().filename().string()
                                            : run_dir.filename().string();
  bool first = true;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 11) throw DataError(paths.rounds_csv.string() + ": malformed row '" + line + "'");
    const int round = std::stoi(f[0]);
    summary.algorithm = f[1];
    if (!f[2].empty()) {
      const double g = std::stod(f[2]);
      if (!summary.best_global_f1 || g > *summary.best_global_f1) {
        summary.best_global_f1 = g;
        summary.best_global_round = round;
      }
    }
    const double pers = std::stod(f[3]);
    if (first || pers > summary.best_personalization) {
      summary.best_personalization = pers;
      summary.best_personalization_round = round;
    }
    summary.generalization_mean = std::stod(f[5]);
    summary.generalization_std = std::stod(f[6]);
    summary.rounds = round;
    first = false;
  }
  if (first) throw DataError(paths.rounds_csv.string() + ": no rounds recorded");
  return summary;
}

void compare(std::span<const std::filesystem::path> run_dirs, std::ostream& out) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::vector<RunSummary> rows;
  for (const auto& dir : run_dirs) rows.push_back(summarize_run(dir));
  std::size_t width = 3;
  for (const RunSummary& r : rows) width = std::max(width, r.name.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %-11s  %9s  %5s  %9s  %5s  %19s\n", static_cast<int>(width), "run",
                "algorithm", "global_f1", "rnd", "pers_f1", "rnd", "gen_f1");
  out << buf;
  for (const RunSummary& r : rows) {
    char global[32] = "-";
    if (r.best_global_f1) std::snprintf(global, sizeof(global), "%.6f", *r.best_global_f1);
    const std::string global_round = r.best_global_f1 ? std::to_string(r.best_global_round) : "-";
    std::snprintf(buf, sizeof(buf), "%-*s  %-11s  %9s  %5s  %9.6f  %5d  %8.6f +/- %8.6f\n", static_cast<int>(width),
                  r.name.c_str(), r.algorithm.c_str(), global, global_round.c_str(), r.best_personalization,
                  r.best_personalization_round, r.generalization_mean, r.generalization_std);
    out << buf;
  }
}

}  // namespace feddist
