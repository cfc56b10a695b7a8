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

#include <span>
#include <vector>

#include "dvlcal/nn/tensor.hpp"

namespace dvlcal::nn {

struct RmsPropSettings {
  double learning_rate = 1e-3;
  double smoothing = 0.99;
  double epsilon = 1e-8;
};

/// One RMSProp update, elementwise:
///   s <- smoothing * s + (1 - smoothing) * g^2
///   theta <- theta - lr * g / (sqrt(s) + eps)
/// Throws DomainError when the spans differ in length.
void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> mean_square,
                  const RmsPropSettings& settings);

/// RMSProp over a fixed parameter list. Parameters without a gradient are skipped.
class RmsProp {
 public:
  RmsProp(std::vector<Tensor> params, RmsPropSettings settings);

  void step();
  void zero_grad();

  const RmsPropSettings& settings() const noexcept { return settings_; }
  const std::vector<std::vector<double>>& mean_square() const noexcept { return mean_square_; }

 private:
  std::vector<Tensor> params_;
  RmsPropSettings settings_;
  std::vector<std::vector<double>> mean_square_;
};

}  // namespace dvlcal::nn
