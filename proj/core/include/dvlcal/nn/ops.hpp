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
#include <cstdint>
#include <vector>

#include "dvlcal/nn/tensor.hpp"
#include "dvlcal/random.hpp"

namespace dvlcal::nn {

/// Differentiable operators. All convolutions are valid (no padding), stride 1,
/// and computed as cross-correlation. Shape mismatches throw DomainError.

/// x[B, in] * w[out, in]^T + b[out] -> [B, out]. \p b may be undefined.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

/// x[B, cin, L], w[cout, cin, k], b[cout] -> [B, cout, L - k + 1].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b);

struct Dilation {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

/// x[B, cin, H, W], w[cout, cin, kh, kw], b[cout] -> [B, cout, H - (kh-1) dh, W - (kw-1) dw].
/// Tap (a, c) of the kernel reads input (i + a dh, j + c dw).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, Dilation dilation = {});

/// x where x >= 0, slope * x otherwise.
Tensor leaky_relu(const Tensor& x, double slope);

/// While alive, hashes the branch taken by every leaky_relu element evaluated on
/// this thread. Equal fingerprints mean two evaluations used the same linear pieces.
class ActivationPattern {
 public:
  ActivationPattern();
  ~ActivationPattern();
  ActivationPattern(const ActivationPattern&) = delete;
  ActivationPattern& operator=(const ActivationPattern&) = delete;

  std::uint64_t fingerprint() const noexcept { return hash_; }
  void record(bool negative) noexcept;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  ActivationPattern* previous_;
};

Tensor tanh(const Tensor& x);

enum class Mode { train, eval };

/// Inverted dropout: in train mode each element survives with probability 1 - p and is
/// scaled by 1 / (1 - p); eval mode and p == 0 return \p x unchanged.
/// Throws DomainError unless 0 <= p < 1.
Tensor dropout(const Tensor& x, double p, Mode mode, Rng& rng);

/// x * mask elementwise, with the mask held constant.
Tensor multiply_constant(const Tensor& x, std::vector<double> mask);

/// [B, ...] -> [B, prod(rest)]. Shares no storage with the input.
Tensor flatten(const Tensor& x);

/// [B, n], [B, m] -> [B, n + m].
Tensor concat(const Tensor& a, const Tensor& b);

/// Mean of squared differences over all elements; scalar tensor of shape [1].
Tensor mse(const Tensor& pred, const Tensor& target);

/// Sum over all elements of x * weights; shape [1]. Handy for gradient tests.
Tensor weighted_sum(const Tensor& x, std::vector<double> weights);

}  // namespace dvlcal::nn
