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

#include "dvlcal/nn/optimizer.hpp"

#include <cmath>

#include "dvlcal/errors.hpp"

namespace dvlcal::nn {

void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> mean_square,
                  const RmsPropSettings& settings) {
  if (params.size() != grads.size() || params.size() != mean_square.size()) {
    throw DomainError("rmsprop_step: parameter, gradient and state sizes differ");
  }
  const double decay = settings.smoothing;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    mean_square[i] = decay * mean_square[i] + (1.0 - decay) * g * g;
    params[i] -= settings.learning_rate * g / (std::sqrt(mean_square[i]) + settings.epsilon);
  }
}

RmsProp::RmsProp(std::vector<Tensor> params, RmsPropSettings settings)
    : params_(std::move(params)), settings_(settings) {
  mean_square_.reserve(params_.size());
  for (const auto& p : params_) mean_square_.emplace_back(p.numel(), 0.0);
}

void RmsProp::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;
    rmsprop_step(params_[i].mutable_values(), params_[i].grad(), mean_square_[i], settings_);
  }
}

void RmsProp::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace dvlcal::nn
