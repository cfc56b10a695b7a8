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

#include "dvlcal/baseline.hpp"

#include "dvlcal/error_models.hpp"
#include "dvlcal/errors.hpp"

namespace dvlcal {

std::optional<double> scale_factor_instant(const Velocity3& v_dvl, const Velocity3& v_ref) {
  const double ref = v_ref.norm();
  if (!(ref >= kBaselineSpeedFloor)) return std::nullopt;
  return v_dvl.norm() / ref - 1.0;
}

BaselineEstimate scale_factor_average(const VelocitySeries& dvl, const VelocitySeries& ref) {
  if (dvl.size() != ref.size()) throw DomainError("baseline: series are not aligned");
  BaselineEstimate est;
  double sum = 0.0;
  for (std::size_t i = 0; i < dvl.size(); ++i) {
    if (const auto k = scale_factor_instant(dvl[i], ref[i])) {
      sum += *k;
      ++est.samples_used;
    } else {
      ++est.skipped_low_speed;
    }
  }
  if (est.samples_used == 0) throw EstimationError("baseline: no sample above the speed floor");
  est.k_bar = sum / static_cast<double>(est.samples_used);
  return est;
}

Velocity3 baseline_calibrate(const Velocity3& v, const BaselineEstimate& estimate) {
  const double denom = 1.0 + estimate.k_bar;
  if (!(denom > kMinScaleDenominator)) throw SingularityError("baseline scale factor too close to -1");
  return v / denom;
}

}  // namespace dvlcal
