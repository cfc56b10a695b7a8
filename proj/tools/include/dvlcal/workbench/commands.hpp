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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dvlcal/dcnet.hpp"
#include "dvlcal/evaluation.hpp"
#include "dvlcal/simulation.hpp"
#include "dvlcal/workbench/config.hpp"

namespace dvlcal::workbench {

/// Ground-truth trajectories generated from a config. All come out of the moving-average filter.
struct GroundTruthSet {
  VelocitySeries calibration;
  VelocitySeries calibration_tail;  ///< empty when calibration.tail_s is 0
  std::vector<VelocitySeries> tests;
  std::vector<VelocitySeries> training;
};

GroundTruthSet generate_ground_truth(const WorkbenchConfig& config);

/// Names used for files and report rows: test_1..test_N, then calibration_tail.
std::vector<std::string> test_names(const WorkbenchConfig& config);

/// Calibration run plus named test trajectories, in test_names() order.
EvaluationSetup make_setup(const WorkbenchConfig& config, const GroundTruthSet& gt);

/// Seed handed to monte_carlo() by the evaluate command.
std::uint64_t monte_carlo_seed(const WorkbenchConfig& config);

/// Builds the corpus a manifest describes. Throws when it lists no trajectories or yields no windows.
TrainingCorpus load_corpus(const WorkbenchConfig& config, const std::filesystem::path& manifest);

/// Untrained model for \p kind, initialised from the config seed.
DCNetModel make_model(const WorkbenchConfig& config, ErrorModelKind kind);

std::uint64_t training_seed(const WorkbenchConfig& config, ErrorModelKind kind);

std::filesystem::path model_path(const std::filesystem::path& models_dir, ErrorModelKind kind);

/// Writes gt/, noised/<scenario>/, manifest.txt and workbench.cfg under \p out.
void cmd_simulate(const WorkbenchConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Writes <out>/models/emK.model and emK_train.csv. A diverged run keeps its partial loss table
/// and rethrows the TrainingError.
TrainReport cmd_train(const WorkbenchConfig& config, ErrorModelKind kind, const std::filesystem::path& manifest,
                      const std::filesystem::path& out, std::ostream& log);

/// Reads gt/ from \p data_dir and models from \p models_dir; writes report.csv and report.txt under \p out.
CalibrationReport cmd_evaluate(const WorkbenchConfig& config, const std::filesystem::path& data_dir,
                               const std::filesystem::path& models_dir, const std::filesystem::path& out,
                               bool baseline_only, std::ostream& log);

/// Renders a report CSV as the plain-text table.
std::string cmd_report(const std::filesystem::path& report_csv);

}  // namespace dvlcal::workbench
