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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dvlcal/geometry.hpp"
#include "dvlcal/random.hpp"

namespace dvlcal {

/// Planted beam-space errors. A single scale and bias value is applied to all four beams.
struct BeamErrorTerms {
  double scale = 0.0;          ///< fraction, 0.01 == 1 %
  double bias_mps = 0.0;
  double noise_std_mps = 0.0;  ///< std of zero-mean Gaussian noise per beam

  /// Throws DomainError unless scale > -1 and noise_std_mps >= 0.
  void validate() const;
};

/// y (1 + scale) + bias + n, with n_i ~ N(0, noise_std^2) drawn from \p rng (four draws per call).
BeamVelocities apply_beam_errors(const BeamVelocities& y, const BeamErrorTerms& terms, Rng& rng);

enum class ErrorModelKind { em1 = 1, em2 = 2, em3 = 3, em4 = 4, em5 = 5 };

inline constexpr std::array<ErrorModelKind, 5> kAllErrorModels = {
    ErrorModelKind::em1, ErrorModelKind::em2, ErrorModelKind::em3, ErrorModelKind::em4, ErrorModelKind::em5};

/// Number of free parameters: EM1 1, EM2 3, EM3 1, EM4 3, EM5 6.
std::size_t terms_dimension(ErrorModelKind kind);
/// "EM1".."EM5".
std::string to_string(ErrorModelKind kind);
/// Accepts "EM3", "em3" or "3".
ErrorModelKind parse_error_model(std::string_view text);

/// Body-frame scale-factor and bias vectors, shaped by the error-model kind:
///   EM1 equal scale components, zero bias;  EM2 zero bias;
///   EM3 zero scale, equal bias components;  EM4 zero scale;  EM5 free.
/// Every scale component is > -1.
class BodyErrorTerms {
 public:
  BodyErrorTerms() = default;  // EM5, all zero

  /// Throws DomainError when the vectors violate the kind's structure.
  BodyErrorTerms(ErrorModelKind kind, const Eigen::Vector3d& scale, const Eigen::Vector3d& bias_mps);

  ErrorModelKind kind() const noexcept { return kind_; }
  const Eigen::Vector3d& scale() const noexcept { return scale_; }
  const Eigen::Vector3d& bias_mps() const noexcept { return bias_; }

 private:
  ErrorModelKind kind_ = ErrorModelKind::em5;
  Eigen::Vector3d scale_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d bias_ = Eigen::Vector3d::Zero();
};

/// Maps a raw parameter vector (e.g. network output) onto structured terms.
/// EM1/EM3 broadcast the scalar; EM5 takes scale from raw[0..3] and bias from raw[3..6].
/// Throws DomainError when raw.size() != terms_dimension(kind).
BodyErrorTerms terms_from_vector(ErrorModelKind kind, std::span<const double> raw);

/// Inverse of terms_from_vector for well-formed terms.
std::vector<double> terms_to_vector(const BodyErrorTerms& terms);

/// Proper rotation matrix (R^T R = I, det R = +1).
class FrameRotation {
 public:
  FrameRotation() = default;

  /// Throws DomainError unless \p m is orthonormal within \p tol with determinant +1.
  explicit FrameRotation(const Eigen::Matrix3d& m, double tol = 1e-12);

  /// Z-Y-X (yaw, pitch, roll) composition.
  static FrameRotation from_euler(double roll_rad, double pitch_rad, double yaw_rad);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  bool is_identity() const { return m_ == Eigen::Matrix3d::Identity(); }

 private:
  Eigen::Matrix3d m_ = Eigen::Matrix3d::Identity();
};

/// (1 + k) .* (R v_ref) + b + dv, with dv ~ N(0, noise_std^2 I).
Velocity3 apply_body_error(const Velocity3& v_ref, const BodyErrorTerms& terms, const FrameRotation& rotation,
                           double noise_std, Rng& rng);

/// Smallest admissible 1 + k for inversion.
inline constexpr double kMinScaleDenominator = 1e-6;

/// (v - b) ./ (1 + k). Throws SingularityError if any 1 + k_i <= kMinScaleDenominator.
Velocity3 calibrate(const Velocity3& v_dvl, const BodyErrorTerms& terms);

}  // namespace dvlcal
