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

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SVD>

#include "doctest.h"
#include "dvlcal/errors.hpp"
#include "dvlcal/geometry.hpp"
#include "support.hpp"

using namespace dvlcal;
constexpr double kPi = std::numbers::pi;
constexpr double kDeg20 = 20.0 * kPi / 180.0;

TEST_CASE("beam yaw angles follow the cross layout") {
  CHECK(beam_yaw(1) == doctest::Approx(kPi / 4).epsilon(1e-15));
  CHECK(beam_yaw(2) == doctest::Approx(3 * kPi / 4).epsilon(1e-15));
  CHECK(beam_yaw(3) == doctest::Approx(5 * kPi / 4).epsilon(1e-15));
  CHECK(beam_yaw(4) == doctest::Approx(7 * kPi / 4).epsilon(1e-15));
  CHECK_THROWS_AS(beam_yaw(0), DomainError);
  CHECK_THROWS_AS(beam_yaw(5), DomainError);
}

TEST_CASE("beam geometry exposes four yaws and validates pitch") {
  const BeamGeometry g;
  CHECK(g.pitch_angle_rad() == doctest::Approx(kDeg20));
  for (int i = 0; i < kBeamCount; ++i) {
    CHECK(g.yaw_angles_rad()[static_cast<std::size_t>(i)] == doctest::Approx(i * kPi / 2 + kPi / 4));
  }
  CHECK_THROWS_AS(BeamGeometry(0.0), DomainError);
  CHECK_THROWS_AS(BeamGeometry(kPi / 2), DomainError);
  CHECK_THROWS_AS(BeamGeometry(-0.1), DomainError);
}

TEST_CASE("beam direction") {
  const auto straight = beam_direction(1, 0.0);
  CHECK(straight.isApprox(Eigen::Vector3d(0, 0, 1), 1e-15));
  CHECK(std::abs(beam_direction(1, kPi / 2 - 1e-9).norm() - 1.0) < 1e-12);
  const auto d2 = beam_direction(2, kDeg20);
  CHECK(d2.x() == doctest::Approx(std::cos(3 * kPi / 4) * std::sin(kDeg20)));
  CHECK(d2.y() == doctest::Approx(std::sin(3 * kPi / 4) * std::sin(kDeg20)));
  CHECK(d2.z() == doctest::Approx(std::cos(kDeg20)));
  CHECK_THROWS_AS(beam_direction(1, kPi / 2), DomainError);
  CHECK_THROWS_AS(beam_direction(1, -0.01), DomainError);
}

TEST_CASE("transform matrix rows are unit beams with rank 3") {
  const auto h = build_transform(kDeg20);
  for (int i = 0; i < kBeamCount; ++i) {
    CHECK(h.rows().row(i).transpose().isApprox(beam_direction(i + 1, kDeg20), 1e-15));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.rows());
  const auto sv = svd.singularValues();
  CHECK(sv(2) > 1e-3 * sv(0));
  CHECK_THROWS_AS(build_transform(0.0), DomainError);
  CHECK_THROWS_AS(build_transform(kPi / 2), DomainError);
}

TEST_CASE("row norms stay unit across a pitch sweep") {
  for (double a = 0.01; a < kPi / 2 - 0.01; a += 0.005) {
    const auto h = build_transform(a);
    for (int i = 0; i < kBeamCount; ++i) CHECK(std::abs(h.rows().row(i).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("projection examples") {
  const auto h = build_transform(kDeg20);
  const auto vertical = project_to_beams(h, Eigen::Vector3d(0, 0, 1));
  for (int i = 0; i < 4; ++i) CHECK(vertical(i) == doctest::Approx(std::cos(kDeg20)));
  CHECK(project_to_beams(h, Eigen::Vector3d::Zero()).isZero(0.0));
  const auto surge = project_to_beams(h, Eigen::Vector3d(1, 0, 0));
  for (int i = 0; i < 4; ++i) CHECK(surge(i) == doctest::Approx(std::cos(beam_yaw(i + 1)) * std::sin(kDeg20)));
}

TEST_CASE("solve_velocity inverts projection and ignores components outside the column space") {
  const auto h = build_transform(kDeg20);
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector3d v = testing::random_vector(gen, -3.0, 3.0);
    CHECK((solve_velocity(h, project_to_beams(h, v)) - v).norm() < 1e-9);
  }
  CHECK(solve_velocity(h, BeamVelocities::Zero()).isZero(0.0));

  // Null space of H^T via the full SVD of H.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.rows(), Eigen::ComputeFullU);
  const Eigen::Vector4d e = svd.matrixU().col(3);
  CHECK((h.rows().transpose() * e).norm() < 1e-12);
  const Eigen::Vector3d v(0.4, -1.2, 0.3);
  CHECK((solve_velocity(h, project_to_beams(h, v) + 0.05 * e) - v).norm() < 1e-10);
}

TEST_CASE("solve_velocity is linear") {
  const auto h = build_transform(0.4);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    BeamVelocities y1, y2;
    for (int i = 0; i < 4; ++i) {
      y1(i) = d(gen);
      y2(i) = d(gen);
    }
    const double a = d(gen), b = d(gen);
    const auto lhs = solve_velocity(h, a * y1 + b * y2);
    const auto rhs = a * solve_velocity(h, y1) + b * solve_velocity(h, y2);
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("rank-deficient rows raise a singularity error") {
  TransformMatrix::Rows rows;
  for (int i = 0; i < 4; ++i) rows.row(i) = Eigen::RowVector3d(0, 0, 1);
  const TransformMatrix degenerate(rows);
  CHECK(degenerate.normal_condition() > kMaxNormalCondition);
  CHECK_THROWS_AS(solve_velocity(degenerate, BeamVelocities::Ones()), SingularityError);
}
