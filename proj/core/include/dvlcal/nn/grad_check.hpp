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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dvlcal/nn/tensor.hpp"

namespace dvlcal::nn {

struct GradCheckOptions {
  double step = 1e-3;        ///< initial finite-difference step, refined by extrapolation
  double tolerance = 1e-5;   ///< max allowed relative error
  std::size_t max_samples = 100;
  std::uint64_t seed = 0;    ///< selects which elements are sampled
  double min_step = 1e-9;    ///< smallest starting step tried before giving up on an element
  double abs_floor = 1e-10;  ///< pairs with both |analytic| and |numeric| below this count as agreeing
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t step_reductions = 0;  ///< restarts caused by a stencil crossing an activation kink
  std::size_t kinked = 0;           ///< elements with no kink-free stencil above min_step
  bool passed = false;
  std::string worst;  ///< "name[index]: analytic vs numeric"
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Compares reverse-mode gradients of build_loss() against extrapolated central differences
/// (f(theta + h) - f(theta - h)) / 2h on up to max_samples elements drawn uniformly
/// from \p params. build_loss must be deterministic (fix any dropout masks).
/// Parameter gradients are zeroed before and after.
GradCheckReport grad_check(const std::function<Tensor()>& build_loss, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options = {});

}  // namespace dvlcal::nn
