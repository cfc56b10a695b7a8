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

#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dvlcal/dcnet.hpp"
#include "dvlcal/geometry.hpp"
#include "dvlcal/nn/ops.hpp"
#include "dvlcal/simulation.hpp"

namespace {

using namespace dvlcal;

std::vector<double> random_values(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

VelocitySeries wavy(std::size_t n) {
  std::vector<Velocity3> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    s.emplace_back(1.5 * std::cos(0.01 * t), 0.3 * std::sin(0.02 * t), 0.1 * std::sin(0.05 * t));
  }
  return VelocitySeries::uniform(0.0, s);
}

void BM_SolveVelocity(benchmark::State& state) {
  const auto h = build_transform(BeamGeometry());
  const BeamVelocities y = project_to_beams(h, Velocity3(1.5, 0.2, -0.1));
  for (auto _ : state) benchmark::DoNotOptimize(solve_velocity(h, y));
}
BENCHMARK(BM_SolveVelocity);

void BM_Conv2dForward(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const nn::Tensor x({batch, 1, 6, 10}, random_values(batch * 60, gen));
  const nn::Tensor w({16, 1, 2, 2}, random_values(64, gen)), b({16}, random_values(16, gen));
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b, {3, 1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(256);

void BM_Conv2dBackward(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const auto batch = static_cast<std::size_t>(state.range(0));
  nn::Tensor x({batch, 16, 3, 9}, random_values(batch * 16 * 27, gen), true);
  nn::Tensor w({32, 16, 2, 2}, random_values(32 * 64, gen), true), b({32}, random_values(32, gen), true);
  const std::vector<double> head(batch * 32 * 2 * 8, 1.0);
  for (auto _ : state) {
    x.zero_grad();
    w.zero_grad();
    b.zero_grad();
    nn::backward(nn::weighted_sum(nn::conv2d(x, w, b), head));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv2dBackward)->Arg(1)->Arg(256);

void BM_DCNetBatchForward(benchmark::State& state) {
  const auto gt = wavy(2400);
  NoisingConfig noising;
  noising.beam_terms = {0.01, 0.007, 0.0002};
  const auto noised = run_noising_pipeline(gt, noising);
  auto windows = window_series(noised.dvl, noised.gnss, gt);
  windows.resize(static_cast<std::size_t>(state.range(0)));
  const DCNetModel model(ErrorModelKind::em5, DCNetConfig::for_kind(ErrorModelKind::em5), 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(windows, nn::Mode::eval));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DCNetBatchForward)->Arg(1)->Arg(256);

void BM_NoisingPipeline(benchmark::State& state) {
  const auto gt = wavy(static_cast<std::size_t>(state.range(0)));
  NoisingConfig noising;
  noising.beam_terms = {0.01, 0.007, 0.0002};
  for (auto _ : state) benchmark::DoNotOptimize(run_noising_pipeline(gt, noising));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NoisingPipeline)->Arg(600)->Arg(1800);

}  // namespace

BENCHMARK_MAIN();
