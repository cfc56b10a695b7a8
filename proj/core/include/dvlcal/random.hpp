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
#include <random>
#include <string_view>

namespace dvlcal {

/// Mixes a parent seed with a component name and index into an independent sub-seed.
/// Every random stream in the workbench is derived this way from one root seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view component, std::uint64_t index = 0);

/// Seeded random stream. Not thread-safe; give each worker its own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// mean + std * z with z ~ N(0, 1). One standard draw is consumed even when std == 0,
  /// so the stream position does not depend on the noise level.
  double normal(double mean, double std) { return mean + std * standard_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> standard_{0.0, 1.0};
};

}  // namespace dvlcal
