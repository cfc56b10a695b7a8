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

#include "dvlcal/error_models.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "dvlcal/errors.hpp"

namespace dvlcal {

namespace {

bool all_equal(const Eigen::Vector3d& v) { return v.x() == v.y() && v.y() == v.z(); }

}  // namespace

void BeamErrorTerms::validate() const {
  if (!(scale > -1.0)) throw DomainError("beam scale must be > -1, got " + std::to_string(scale));
  if (!(noise_std_mps >= 0.0)) throw DomainError("beam noise std must be >= 0");
  if (!std::isfinite(bias_mps) || !std::isfinite(noise_std_mps)) throw DomainError("beam terms must be finite");
}

BeamVelocities apply_beam_errors(const BeamVelocities& y, const BeamErrorTerms& terms, Rng& rng) {
  BeamVelocities out;
  for (int i = 0; i < kBeamCount; ++i) {
    out[i] = y[i] * (1.0 + terms.scale) + terms.bias_mps + rng.normal(0.0, terms.noise_std_mps);
  }
  return out;
}

std::size_t terms_dimension(ErrorModelKind kind) {
  switch (kind) {
    case ErrorModelKind::em1:
    case ErrorModelKind::em3:
      return 1;
    case ErrorModelKind::em2:
    case ErrorModelKind::em4:
      return 3;
    case ErrorModelKind::em5:
      return 6;
  }
  throw DomainError("unknown error model");
}

std::string to_string(ErrorModelKind kind) { return "EM" + std::to_string(static_cast<int>(kind)); }

ErrorModelKind parse_error_model(std::string_view text) {
  std::string s(text);
  if (s.size() == 3 && std::toupper(static_cast<unsigned char>(s[0])) == 'E' &&
      std::toupper(static_cast<unsigned char>(s[1])) == 'M') {
    s = s.substr(2);
  }
  if (s.size() == 1 && s[0] >= '1' && s[0] <= '5') return static_cast<ErrorModelKind>(s[0] - '0');
  throw DomainError("unknown error model '" + std::string(text) + "' (expected EM1..EM5)");
}

BodyErrorTerms::BodyErrorTerms(ErrorModelKind kind, const Eigen::Vector3d& scale, const Eigen::Vector3d& bias_mps)
    : kind_(kind), scale_(scale), bias_(bias_mps) {
  if (!scale_.allFinite() || !bias_.allFinite()) throw DomainError("error terms must be finite");
  if (!(scale_.array() > -1.0).all()) throw DomainError("every scale component must be > -1");
  const bool zero_scale = scale_.isZero(0.0);
  const bool zero_bias = bias_.isZero(0.0);
  bool ok = true;
  switch (kind_) {
    case ErrorModelKind::em1: ok = all_equal(scale_) && zero_bias; break;
    case ErrorModelKind::em2: ok = zero_bias; break;
    case ErrorModelKind::em3: ok = zero_scale && all_equal(bias_); break;
    case ErrorModelKind::em4: ok = zero_scale; break;
    case ErrorModelKind::em5: break;
  }
  if (!ok) throw DomainError("terms violate the structure of " + to_string(kind_));
}

BodyErrorTerms terms_from_vector(ErrorModelKind kind, std::span<const double> raw) {
  if (raw.size() != terms_dimension(kind)) {
    throw DomainError(to_string(kind) + " expects " + std::to_string(terms_dimension(kind)) + " raw values, got " +
                      std::to_string(raw.size()));
  }
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  switch (kind) {
    case ErrorModelKind::em1: scale.setConstant(raw[0]); break;
    case ErrorModelKind::em2: scale = {raw[0], raw[1], raw[2]}; break;
    case ErrorModelKind::em3: bias.setConstant(raw[0]); break;
    case ErrorModelKind::em4: bias = {raw[0], raw[1], raw[2]}; break;
    case ErrorModelKind::em5:
      scale = {raw[0], raw[1], raw[2]};
      bias = {raw[3], raw[4], raw[5]};
      break;
  }
  return BodyErrorTerms(kind, scale, bias);
}

std::vector<double> terms_to_vector(const BodyErrorTerms& terms) {
  const auto& k = terms.scale();
  const auto& b = terms.bias_mps();
  switch (terms.kind()) {
    case ErrorModelKind::em1: return {k.x()};
    case ErrorModelKind::em2: return {k.x(), k.y(), k.z()};
    case ErrorModelKind::em3: return {b.x()};
    case ErrorModelKind::em4: return {b.x(), b.y(), b.z()};
    case ErrorModelKind::em5: return {k.x(), k.y(), k.z(), b.x(), b.y(), b.z()};
  }
  return {};
}

FrameRotation::FrameRotation(const Eigen::Matrix3d& m, double tol) : m_(m) {
  if (!m_.allFinite() || !(m_.transpose() * m_).isIdentity(tol) || std::abs(m_.determinant() - 1.0) > tol * 10) {
    throw DomainError("rotation matrix must be orthonormal with determinant +1");
  }
}

FrameRotation FrameRotation::from_euler(double roll_rad, double pitch_rad, double yaw_rad) {
  const Eigen::Matrix3d m = (Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(pitch_rad, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(roll_rad, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return FrameRotation(m, 1e-12);
}

Velocity3 apply_body_error(const Velocity3& v_ref, const BodyErrorTerms& terms, const FrameRotation& rotation,
                           double noise_std, Rng& rng) {
  Velocity3 out = (Eigen::Vector3d::Ones() + terms.scale()).cwiseProduct(rotation.matrix() * v_ref) + terms.bias_mps();
  for (int i = 0; i < 3; ++i) out[i] += rng.normal(0.0, noise_std);
  return out;
}

Velocity3 calibrate(const Velocity3& v_dvl, const BodyErrorTerms& terms) {
  const Eigen::Vector3d denom = Eigen::Vector3d::Ones() + terms.scale();
  if (!(denom.array() > kMinScaleDenominator).all()) {
    throw SingularityError("scale factor too close to -1 for calibration");
  }
  return (v_dvl - terms.bias_mps()).cwiseQuotient(denom);
}

}  // namespace dvlcal
