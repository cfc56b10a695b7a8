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
#include <map>
#include <string>
#include <vector>

#include "dvlcal/dcnet.hpp"
#include "dvlcal/error_models.hpp"
#include "dvlcal/evaluation.hpp"
#include "dvlcal/geometry.hpp"
#include "dvlcal/kv_file.hpp"
#include "dvlcal/simulation.hpp"

namespace dvlcal::workbench {

/// Shape of a family of generated trajectories.
struct ProfileSpec {
  TrajectoryKind kind = TrajectoryKind::constant_velocity;
  std::size_t count = 1;
  double duration_s = 200.0;
  double speed_mps = 1.5;
  double leg_s = 60.0;        ///< lawnmower leg length; successive trajectories add leg_step_s
  double leg_step_s = 20.0;
  double jitter_mps = 0.02;

  /// Profile of the \p index-th trajectory (0-based) of this family.
  TrajectoryProfile profile(std::size_t index, double duration_s, std::uint64_t seed) const;
};

/// Everything a command needs. Keys are flat and dotted, e.g. `test.count = 4`.
struct WorkbenchConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;

  double alpha_deg = 20.0;
  std::array<double, 3> rotation_euler_deg{0.0, 0.0, 0.0};  ///< roll, pitch, yaw of body -> DVL

  ProfileSpec calibration{TrajectoryKind::constant_velocity, 1, 200.0, 1.5, 60.0, 0.0, 0.02};
  double calibration_tail_s = 600.0;  ///< held-out tail appended to the calibration run, 0 disables it
  ProfileSpec test{TrajectoryKind::lawnmower, 4, 600.0, 1.5, 60.0, 20.0, 0.02};
  ProfileSpec training{TrajectoryKind::mixed_legs, 1, 1800.0, 1.5, 60.0, 0.0, 0.02};

  ErrorGrid grid = ErrorGrid::desk();
  std::size_t window_s = kDefaultWindow;
  std::size_t stride_s = kDefaultStride;
  double split_ratio = 0.8;
  double gnss_noise_std_mps = kDefaultGnssNoiseStd;

  std::vector<Scenario> scenarios{dvl1_preset(), dvl2_preset()};

  std::map<ErrorModelKind, DCNetConfig> dcnet;

  std::vector<std::size_t> window_sizes_s{kCalibrationWindows.begin(), kCalibrationWindows.end()};
  std::size_t mc_iterations = 20;
  std::vector<ErrorModelKind> models{kAllErrorModels.begin(), kAllErrorModels.end()};

  WorkbenchConfig();

  BeamGeometry geometry() const;
  FrameRotation rotation() const;

  /// Throws ConfigError or DomainError describing the first invalid field.
  void validate() const;

  /// Recognised keys.
  static std::vector<std::string> keys();

  /// Unknown keys and malformed values are ConfigErrors. The result is validated.
  static WorkbenchConfig from_kv(const KeyValueFile& kv);
  static WorkbenchConfig load(const std::filesystem::path& path);

  /// Every key with its current value; from_kv(to_kv()) reproduces the config.
  KeyValueFile to_kv() const;
};

}  // namespace dvlcal::workbench
