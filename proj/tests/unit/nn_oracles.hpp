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
#include <random>
#include <vector>

namespace testing {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

/// Direct valid 2-D cross-correlation with dilation; x [B,C,H,W], w [O,C,KH,KW], b [O].
inline std::vector<double> conv2d_reference(const std::vector<double>& x, const std::vector<double>& w,
                                            const std::vector<double>& b, std::size_t batch, std::size_t cin,
                                            std::size_t h, std::size_t wd, std::size_t cout, std::size_t kh,
                                            std::size_t kw, std::size_t dh, std::size_t dw) {
  const std::size_t oh = h - (kh - 1) * dh;
  const std::size_t ow = wd - (kw - 1) * dw;
  std::vector<double> out(batch * cout * oh * ow);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t p = 0; p < kh; ++p)
              for (std::size_t q = 0; q < kw; ++q) {
                acc += w[((o * cin + c) * kh + p) * kw + q] * x[((n * cin + c) * h + i + p * dh) * wd + j + q * dw];
              }
          out[((n * cout + o) * oh + i) * ow + j] = acc;
        }
  return out;
}

/// Direct valid 1-D cross-correlation; x [B,C,L], w [O,C,K], b [O].
inline std::vector<double> conv1d_reference(const std::vector<double>& x, const std::vector<double>& w,
                                            const std::vector<double>& b, std::size_t batch, std::size_t cin,
                                            std::size_t len, std::size_t cout, std::size_t k) {
  const std::size_t ol = len - k + 1;
  std::vector<double> out(batch * cout * ol);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t i = 0; i < ol; ++i) {
        double acc = b[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t p = 0; p < k; ++p) acc += w[(o * cin + c) * k + p] * x[(n * cin + c) * len + i + p];
        out[(n * cout + o) * ol + i] = acc;
      }
  return out;
}

}  // namespace testing
