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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "feddist/config.hpp"
#include "feddist/fabric.hpp"
#include "feddist/runner.hpp"

namespace {

feddist::RunConfig load(const std::string& path, std::optional<std::uint64_t> seed,
                        std::optional<std::size_t> threads) {
  feddist::RunConfig cfg = feddist::parse_config(path);
  if (seed) feddist::override_seed(cfg, *seed);
  if (threads) {
    if (*threads < 1) throw feddist::ConfigError("--threads must be >= 1");
    cfg.experiment.threads = *threads;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with FedDist model growth"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;

  CLI::App* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
  run->add_option("--config", config_path, "Experiment config or run manifest (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the global seed");
  run->add_option("--threads", threads, "Worker threads for client updates");

  std::vector<std::string> run_dirs;
  CLI::App* cmp = app.add_subcommand("compare", "Summarize completed runs side by side");
  cmp->add_option("runs", run_dirs, "Run directories")->required()->expected(2, -1);

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  validate->add_option("--config", validate_path, "Experiment config (JSON)")->required();

  std::string model_path;
  CLI::App* shape = app.add_subcommand("shape", "Print the shape dump of a model container");
  shape->add_option("model", model_path, "Model container (.fdmw)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return feddist::run(load(config_path, seed, threads), out_dir, std::cerr);
    if (*cmp) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      feddist::compare(dirs, std::cout);
      return 0;
    }
    if (*validate) {
      std::cout << feddist::resolved_config_json(feddist::parse_config(validate_path)) << '\n';
      return 0;
    }
    if (*shape) {
      std::cout << feddist::shape_dump(feddist::load_model(model_path));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
