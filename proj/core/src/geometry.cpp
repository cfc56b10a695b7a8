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

#include "dvlcal/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "dvlcal/errors.hpp"

namespace dvlcal {

namespace {

void require_pitch(double pitch_rad, bool allow_zero) {
  const bool low_ok = allow_zero ? pitch_rad >= 0.0 : pitch_rad > 0.0;
  if (!(low_ok && pitch_rad < std::numbers::pi / 2.0)) {
    throw DomainError("beam pitch angle out of range: " + std::to_string(pitch_rad) + " rad");
  }
}

}  // namespace

double beam_yaw(int index) {
  if (index < 1 || index > kBeamCount) {
    throw DomainError("beam index must be in 1..4, got " + std::to_string(index));
  }
  return (index - 1) * std::numbers::pi / 2.0 + std::numbers::pi / 4.0;
}

Eigen::Vector3d beam_direction(int index, double pitch_rad) {
  const double yaw = beam_yaw(index);
  require_pitch(pitch_rad, /*allow_zero=*/true);
  return {std::cos(yaw) * std::sin(pitch_rad), std::sin(yaw) * std::sin(pitch_rad), std::cos(pitch_rad)};
}

BeamGeometry::BeamGeometry(double pitch_rad) : pitch_rad_(pitch_rad) {
  require_pitch(pitch_rad, /*allow_zero=*/false);
  for (int i = 0; i < kBeamCount; ++i) yaw_rad_[i] = beam_yaw(i + 1);
}

TransformMatrix::TransformMatrix(const Rows& rows) : rows_(rows) {
  const Eigen::Matrix3d normal = rows_.transpose() * rows_;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (std::isfinite(condition_) && condition_ <= kMaxNormalCondition) {
    pinv_ = normal.ldlt().solve(rows_.transpose());
  } else {
    pinv_.setConstant(std::numeric_limits<double>::quiet_NaN());
  }
}

TransformMatrix build_transform(double pitch_rad) {
  require_pitch(pitch_rad, /*allow_zero=*/false);
  TransformMatrix::Rows rows;
  for (int i = 0; i < kBeamCount; ++i) rows.row(i) = beam_direction(i + 1, pitch_rad).transpose();
  return TransformMatrix(rows);
}

TransformMatrix build_transform(const BeamGeometry& geometry) { return build_transform(geometry.pitch_angle_rad()); }

BeamVelocities project_to_beams(const TransformMatrix& h, const Velocity3& v) { return h.rows() * v; }

Velocity3 solve_velocity(const TransformMatrix& h, const BeamVelocities& y) {
  if (!(h.normal_condition() <= kMaxNormalCondition)) {
    throw SingularityError("H^T H is singular (condition " + std::to_string(h.normal_condition()) + ")");
  }
  return h.pseudo_inverse() * y;
}

}  // namespace dvlcal
