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

#include <cstddef>
#include <optional>

#include "dvlcal/geometry.hpp"
#include "dvlcal/simulation.hpp"

namespace dvlcal {

/// Reference speeds below this are skipped; the norm ratio is ill-conditioned near zero.
inline constexpr double kBaselineSpeedFloor = 0.1;

/// Averaged scalar scale factor.
struct BaselineEstimate {
  double k_bar = 0.0;
  std::size_t samples_used = 0;
  std::size_t skipped_low_speed = 0;
};

/// |v_dvl| / |v_ref| - 1, or nullopt when |v_ref| < kBaselineSpeedFloor.
std::optional<double> scale_factor_instant(const Velocity3& v_dvl, const Velocity3& v_ref);

/// Mean of the per-sample estimates over usable samples.
/// Throws DomainError for misaligned series and EstimationError when no sample is usable.
BaselineEstimate scale_factor_average(const VelocitySeries& dvl, const VelocitySeries& ref);

/// v / (1 + k_bar). Throws SingularityError when 1 + k_bar <= kMinScaleDenominator.
Velocity3 baseline_calibrate(const Velocity3& v, const BaselineEstimate& estimate);

}  // namespace dvlcal
