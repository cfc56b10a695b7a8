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

#include "dvlcal/nn/grad_check.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "dvlcal/kv_file.hpp"
#include "dvlcal/nn/ops.hpp"
#include "dvlcal/random.hpp"

namespace dvlcal::nn {

namespace {

// Ridders' polynomial extrapolation of central differences with shrinking steps;
// returns the tableau entry with the smallest estimated error, or nullopt when a
// difference could not be formed.
std::optional<double> ridders_derivative(const std::function<std::optional<double>(double)>& central, double h0) {
  constexpr int kTable = 10;
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink, kSafe = 2.0;
  std::array<std::array<double, kTable>, kTable> a{};
  double h = h0, err = std::numeric_limits<double>::max();
  const auto first = central(h);
  if (!first) return std::nullopt;
  double best = a[0][0] = *first;
  for (int i = 1; i < kTable; ++i) {
    h /= kShrink;
    const auto d = central(h);
    if (!d) return std::nullopt;
    a[0][i] = *d;
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
  }
  return best;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options) {
  std::vector<Tensor> tensors;
  for (const auto& p : params) tensors.push_back(p.tensor);
  for (auto& t : tensors) t.zero_grad();

  std::uint64_t base_pattern = 0;
  {
    ActivationPattern pattern;
    backward(build_loss());
    base_pattern = pattern.fingerprint();
  }

  // (param, element) pairs; all of them when there are few enough.
  GradCheckReport report;
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    for (std::size_t i = 0; i < tensors[p].numel(); ++i) candidates.emplace_back(p, i);
  }
  if (candidates.size() > options.max_samples) {
    Rng rng(derive_seed(options.seed, "grad-check"));
    for (std::size_t i = 0; i < options.max_samples; ++i) {
      const std::size_t j = i + rng.next() % (candidates.size() - i);
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(options.max_samples);
  }

  for (const auto& [p, i] : candidates) {
    Tensor& t = tensors[p];
    const double analytic = t.has_grad() ? t.grad()[i] : 0.0;
    const double saved = t.values()[i];
    // Differences are only formed between points on the same linear pieces of every
    // leaky_relu; the starting step shrinks until the whole stencil qualifies.
    auto loss_at = [&](double h) -> std::optional<double> {
      t.mutable_values()[i] = saved + h;
      ActivationPattern pattern;
      const double loss = build_loss().item();
      if (pattern.fingerprint() != base_pattern) return std::nullopt;
      return loss;
    };
    auto central = [&](double h) -> std::optional<double> {
      const auto up = loss_at(h), down = loss_at(-h);
      if (!up || !down) return std::nullopt;
      return (*up - *down) / (2.0 * h);
    };
    std::optional<double> numeric;
    for (double h0 = options.step; !numeric && h0 > options.min_step; h0 /= 8.0) {
      numeric = ridders_derivative(central, h0);
      if (!numeric) ++report.step_reductions;
    }
    t.mutable_values()[i] = saved;
    if (!numeric) {
      ++report.kinked;
      continue;
    }

    const double scale = std::max(std::abs(analytic), std::abs(*numeric));
    const double rel = scale < options.abs_floor ? 0.0 : std::abs(analytic - *numeric) / scale;
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = params[p].name + "[" + std::to_string(i) + "]: " + format_double(analytic) + " vs " +
                     format_double(*numeric);
    }
    ++report.checked;
  }
  report.passed = report.max_rel_error < options.tolerance && report.kinked == 0;
  for (auto& t : tensors) t.zero_grad();
  return report;
}

}  // namespace dvlcal::nn
