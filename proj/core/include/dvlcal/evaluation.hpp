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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dvlcal/baseline.hpp"
#include "dvlcal/dcnet.hpp"
#include "dvlcal/error_models.hpp"
#include "dvlcal/simulation.hpp"

namespace dvlcal {

/// sqrt(mean over samples of the squared error summed over axes), in cm/s.
/// Throws DomainError for empty or misaligned input.
double rmse_cmps(std::span<const Velocity3> calibrated, std::span<const Velocity3> gt);
double rmse_cmps(const VelocitySeries& calibrated, const VelocitySeries& gt);

enum class Approach { baseline, em1, em2, em3, em4, em5 };

std::string to_string(Approach approach);
Approach parse_approach(const std::string& text);
Approach approach_of(ErrorModelKind kind);

using CalibrationTerms = std::variant<BaselineEstimate, BodyErrorTerms>;

Velocity3 apply_terms(const CalibrationTerms& terms, const Velocity3& v);
std::vector<Velocity3> apply_terms(const CalibrationTerms& terms, std::span<const Velocity3> v);

inline constexpr std::array<std::size_t, 5> kCalibrationWindows{20, 40, 60, 80, 100};

/// Index of the smallest value; the earliest index wins ties.
std::size_t select_convergence_index(std::span<const double> rmse);

struct CalibrationOutcome {
  Approach approach = Approach::baseline;
  std::vector<std::size_t> window_sizes_s;
  std::vector<double> rmse_cmps;  ///< one per window size
  std::size_t t_conv_s = 0;
  double chosen_rmse_cmps = 0.0;
  CalibrationTerms terms;
};

/// Aligned DVL, GNSS and ground-truth series of one trajectory.
struct SeriesTrio {
  VelocitySeries dvl;
  VelocitySeries gnss;
  VelocitySeries gt;
};

/// The estimators under evaluation: the closed-form baseline and any trained models.
struct Approaches {
  bool baseline = true;
  std::vector<const DCNetModel*> models;
};

/// For every approach and window size w: estimate on samples [0, w), calibrate the DVL on
/// [w, N), score against GT on [w, N); keep the window with the lowest RMSE.
/// Throws DomainError when the series is not longer than the largest window.
std::vector<CalibrationOutcome> calibration_phase(const SeriesTrio& calib, const Approaches& approaches,
                                                  std::span<const std::size_t> window_sizes = kCalibrationWindows);

/// 100 (baseline - approach) / baseline.
double improvement_pct(double baseline_rmse, double approach_rmse);

struct NamedTrajectory {
  std::string name;
  VelocitySeries dvl;
  VelocitySeries gt;
};

struct TestResult {
  std::string trajectory;
  Approach approach = Approach::baseline;
  double rmse_cmps = 0.0;
  double improvement_pct = 0.0;  ///< NaN when no baseline outcome is present
  std::size_t t_conv_s = 0;
};

/// Applies each outcome's retained terms to every test trajectory and scores it.
std::vector<TestResult> evaluate_test(std::span<const NamedTrajectory> tests,
                                      std::span<const CalibrationOutcome> outcomes);

/// DVL error preset.
struct Scenario {
  std::string name;
  BeamErrorTerms beam_terms;
};

/// Scale 1.0 %, bias 0.7 cm/s, noise 2.0 cm/s.
Scenario dvl1_preset();
/// Scale 1.0 %, bias 0.7 cm/s, noise 0.02 cm/s.
Scenario dvl2_preset();

/// Ground truth that every Monte Carlo iteration re-noises.
struct EvaluationSetup {
  VelocitySeries calibration_gt;
  std::vector<std::pair<std::string, VelocitySeries>> test_gt;
  double gnss_noise_std_mps = kDefaultGnssNoiseStd;
  BeamGeometry geometry;
  FrameRotation rotation;
  std::vector<std::size_t> window_sizes{kCalibrationWindows.begin(), kCalibrationWindows.end()};
};

struct IterationResult {
  std::vector<CalibrationOutcome> outcomes;
  std::vector<TestResult> tests;
};

/// One calibration + test run with all pipeline noise drawn from \p seed.
IterationResult evaluate_once(const Scenario& scenario, const EvaluationSetup& setup, const Approaches& approaches,
                              std::uint64_t seed);

struct ReportRow {
  std::string scenario;
  std::string approach;
  std::string trajectory;  ///< "calibration" for the calibration-phase row
  double rmse_cmps = 0.0;        ///< first successful iteration
  double improvement_pct = 0.0;  ///< of rmse_cmps over the baseline row
  std::size_t t_conv_s = 0;
  double mc_mean = 0.0;  ///< mean RMSE over iterations
  double mc_std = 0.0;   ///< sample std (n - 1); 0 for one iteration
};

struct ScenarioRuns {
  Scenario scenario;
  std::vector<IterationResult> iterations;  ///< successful iterations in order
  std::size_t failures = 0;
};

struct CalibrationReport {
  std::vector<ReportRow> rows;
  std::vector<ScenarioRuns> runs;
};

/// Re-runs evaluate_once per iteration with seeds derived from (seed, scenario, index)
/// and folds the results in iteration order. Failed iterations are dropped and counted;
/// more than 5 % failures throws EvaluationError. Output does not depend on \p threads.
CalibrationReport monte_carlo(std::span<const Scenario> scenarios, const EvaluationSetup& setup,
                              const Approaches& approaches, std::size_t iterations, std::uint64_t seed,
                              unsigned threads = 1);

inline constexpr const char* kReportCsvHeader =
    "scenario,approach,trajectory,rmse_cmps,improvement_pct,t_conv_s,mc_mean,mc_std";

void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

/// Plain-text tables: calibration phase (RMSE,(T_conv)) and test trajectories
/// (RMSE (improvement %)), using Monte Carlo means.
std::string render_report_table(std::span<const ReportRow> rows);

}  // namespace dvlcal
