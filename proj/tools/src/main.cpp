// Copyright 2026 The dvlcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dvlcal/dcnet.hpp"
#include "dvlcal/workbench/commands.hpp"
#include "dvlcal/workbench/config.hpp"

namespace fs = std::filesystem;
using namespace dvlcal;

int main(int argc, char** argv) {
  CLI::App app{"dvlcal: DVL calibration workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = "dvlcal-out";
  app.add_option("--config", config_path, "Workbench configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Generate ground-truth and noised trajectories plus a corpus manifest");

  auto* train_cmd = app.add_subcommand("train", "Train one DCNet model");
  int em = 0;
  std::string corpus;
  train_cmd->add_option("--em", em, "Error model 1..5")->required()->check(CLI::Range(1, 5));
  train_cmd->add_option("--corpus", corpus, "Corpus manifest (default: <out>/manifest.txt)");

  auto* evaluate = app.add_subcommand("evaluate", "Run the calibration protocol and write the report");
  std::string data_dir;
  std::string models_dir;
  bool baseline_only = false;
  evaluate->add_option("--data", data_dir, "Directory written by simulate (default: <out>)");
  evaluate->add_option("--models", models_dir, "Model directory (default: <out>/models)");
  evaluate->add_flag("--baseline-only", baseline_only, "Skip the DCNet models");

  auto* report = app.add_subcommand("report", "Print the table for an existing report CSV");
  std::string report_csv;
  report->add_option("--report", report_csv, "Report CSV (default: <out>/report.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << "error: ";
    return app.exit(e);
  }

  try {
    if (report->parsed()) {
      std::cout << workbench::cmd_report(report_csv.empty() ? fs::path(out) / "report.csv" : fs::path(report_csv));
      return 0;
    }

    KeyValueFile kv = config_path.empty() ? KeyValueFile() : KeyValueFile::load(config_path);
    if (seed) kv.set("seed", std::to_string(*seed));
    if (threads) kv.set("threads", std::to_string(*threads));
    const auto config = workbench::WorkbenchConfig::from_kv(kv);

    if (simulate->parsed()) {
      workbench::cmd_simulate(config, out, std::cout);
    } else if (train_cmd->parsed()) {
      const fs::path manifest = corpus.empty() ? fs::path(out) / "manifest.txt" : fs::path(corpus);
      workbench::cmd_train(config, static_cast<ErrorModelKind>(em), manifest, out, std::cout);
    } else if (evaluate->parsed()) {
      workbench::cmd_evaluate(config, data_dir.empty() ? fs::path(out) : fs::path(data_dir),
                              models_dir.empty() ? fs::path(out) / "models" : fs::path(models_dir), out,
                              baseline_only, std::cout);
    }
  } catch (const TrainingError& e) {
    std::cerr << "error: training diverged at epoch " << e.epoch() << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
