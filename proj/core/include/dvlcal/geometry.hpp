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
#include <numbers>

#include <Eigen/Core>

namespace dvlcal {

/// 3-axis velocity in m/s. The frame is carried by the container (see VelocitySeries).
using Velocity3 = Eigen::Vector3d;
/// Along-beam speeds of the four beams, m/s.
using BeamVelocities = Eigen::Vector4d;

inline constexpr int kBeamCount = 4;
inline constexpr double kDefaultPitchRad = 20.0 * std::numbers::pi / 180.0;

/// Yaw of beam \p index (1-based) in the Janus "x" layout: (index - 1) * pi/2 + pi/4.
/// Throws DomainError unless index is in 1..4.
double beam_yaw(int index);

/// Unit direction of beam \p index in the sensor frame,
/// [cos(yaw) sin(pitch), sin(yaw) sin(pitch), cos(pitch)].
/// Requires 0 <= pitch_rad < pi/2.
Eigen::Vector3d beam_direction(int index, double pitch_rad);

/// Four beams sharing one pitch angle, yaws from beam_yaw().
class BeamGeometry {
 public:
  /// Throws DomainError unless 0 < pitch_rad < pi/2.
  explicit BeamGeometry(double pitch_rad = kDefaultPitchRad);

  double pitch_angle_rad() const noexcept { return pitch_rad_; }
  const std::array<double, kBeamCount>& yaw_angles_rad() const noexcept { return yaw_rad_; }

 private:
  double pitch_rad_;
  std::array<double, kBeamCount> yaw_rad_{};
};

/// Stacked beam directions (one row per beam). Caches the normal-equation
/// pseudo-inverse and the condition number of H^T H.
class TransformMatrix {
 public:
  using Rows = Eigen::Matrix<double, kBeamCount, 3>;

  /// Wraps arbitrary rows; rank is checked lazily by solve_velocity().
  explicit TransformMatrix(const Rows& rows);

  const Rows& rows() const noexcept { return rows_; }
  double normal_condition() const noexcept { return condition_; }
  const Eigen::Matrix<double, 3, kBeamCount>& pseudo_inverse() const noexcept { return pinv_; }

 private:
  Rows rows_;
  Eigen::Matrix<double, 3, kBeamCount> pinv_;
  double condition_;
};

/// Condition number of H^T H above which solve_velocity refuses to invert.
inline constexpr double kMaxNormalCondition = 1e12;

/// Throws DomainError unless 0 < pitch_rad < pi/2.
TransformMatrix build_transform(double pitch_rad);
TransformMatrix build_transform(const BeamGeometry& geometry);

/// H v.
BeamVelocities project_to_beams(const TransformMatrix& h, const Velocity3& v);

/// Least-squares velocity (H^T H)^-1 H^T y. Throws SingularityError when the
/// condition number of H^T H exceeds kMaxNormalCondition.
Velocity3 solve_velocity(const TransformMatrix& h, const BeamVelocities& y);

}  // namespace dvlcal
