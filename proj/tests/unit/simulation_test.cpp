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
#include <numbers>
#include <set>
#include <tuple>

#include "doctest.h"
#include "dvlcal/errors.hpp"
#include "dvlcal/simulation.hpp"
#include "support.hpp"

using namespace dvlcal;

namespace {

VelocitySeries constant_series(std::size_t n, const Velocity3& v) {
  return VelocitySeries::uniform(0.0, std::vector<Velocity3>(n, v));
}

VelocitySeries wavy_series(std::size_t n) {
  std::vector<Velocity3> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    s.emplace_back(1.5 + 0.1 * std::sin(0.05 * t), 0.2 * std::cos(0.03 * t), 0.05 * std::sin(0.11 * t));
  }
  return VelocitySeries::uniform(0.0, std::move(s));
}

}  // namespace

TEST_CASE("velocity series validates spacing and alignment") {
  CHECK_NOTHROW(VelocitySeries({0, 1, 2}, {Velocity3::Zero(), Velocity3::Zero(), Velocity3::Zero()}));
  CHECK_THROWS_AS(VelocitySeries({0, 1}, {Velocity3::Zero()}), DomainError);
  CHECK_THROWS_AS(VelocitySeries({0, 2}, {Velocity3::Zero(), Velocity3::Zero()}), DomainError);
  CHECK_THROWS_AS(VelocitySeries({0, 0}, {Velocity3::Zero(), Velocity3::Zero()}), DomainError);
  CHECK_THROWS_AS(VelocitySeries({0}, {Velocity3(NAN, 0, 0)}), DomainError);
  const auto s = wavy_series(30);
  const auto part = s.slice(10, 5);
  CHECK(part.size() == 5);
  CHECK(part.timestamps().front() == 10.0);
  CHECK(part[0] == s[10]);
  CHECK_THROWS_AS(s.slice(28, 5), DomainError);
}

TEST_CASE("constant profile without jitter is exactly the nominal velocity") {
  Rng rng(1);
  const auto series = generate_trajectory(TrajectoryProfile::constant_velocity(200, 1.5, 0.0), rng);
  REQUIRE(series.size() == 200);
  for (std::size_t i = 0; i < series.size(); ++i) CHECK(series[i] == Velocity3(1.5, 0, 0));
  CHECK(series.frame() == Frame::body);
}

TEST_CASE("constant profile jitter stays within its bound") {
  Rng rng(2);
  const auto series = generate_trajectory(TrajectoryProfile::constant_velocity(500, 1.5, 0.02), rng);
  for (std::size_t i = 0; i < series.size(); ++i) {
    CHECK(((series[i] - Velocity3(1.5, 0, 0)).array().abs() <= 0.02 + 1e-15).all());
  }
}

TEST_CASE("every profile kind yields one sample per second") {
  Rng rng(3);
  for (const auto& p : {TrajectoryProfile::constant_velocity(123, 1.0, 0.01),
                        TrajectoryProfile::lawnmower(321, 1.5, 60, 0.02),
                        TrajectoryProfile::mixed_legs(777, 1.2, 0.02, 4)}) {
    const auto s = generate_trajectory(p, rng);
    CHECK(s.size() == static_cast<std::size_t>(p.duration_s));
  }
}

TEST_CASE("lawnmower speed mostly stays near nominal") {
  Rng rng(4);
  const auto s = generate_trajectory(TrajectoryProfile::lawnmower(600, 1.5, 60, 0.02), rng);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double speed = s[i].norm();
    if (speed >= 0.75 && speed <= 1.65) ++inside;
  }
  CHECK(static_cast<double>(inside) >= 0.9 * static_cast<double>(s.size()));
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(TrajectoryProfile::constant_velocity(10, 1.5, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(TrajectoryProfile::constant_velocity(200, 0.0, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(TrajectoryProfile::constant_velocity(200, 3.5, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(TrajectoryProfile::constant_velocity(200, 1.5, -0.1).validate(), DomainError);
  CHECK(parse_trajectory_kind(to_string(TrajectoryKind::lawnmower)) == TrajectoryKind::lawnmower);
  CHECK_THROWS(parse_trajectory_kind("spiral"));
}

TEST_CASE("moving average") {
  const auto constant = moving_average(constant_series(30, Velocity3(1, 2, 3)));
  CHECK(constant.size() == 26);
  CHECK(constant.is_ground_truth());
  for (std::size_t i = 0; i < constant.size(); ++i) CHECK((constant[i] - Velocity3(1, 2, 3)).norm() < 1e-15);

  std::vector<Velocity3> impulse(20, Velocity3::Zero());
  impulse[10] = Velocity3(1, 0, 0);
  const auto spread = moving_average(VelocitySeries::uniform(0, impulse));
  for (std::size_t i = 0; i < spread.size(); ++i) {
    const double expected = (i >= 6 && i <= 10) ? 0.2 : 0.0;
    CHECK(spread[i].x() == doctest::Approx(expected).epsilon(1e-15));
  }

  std::vector<Velocity3> ramp;
  for (int i = 0; i < 40; ++i) ramp.emplace_back(0.1 * i, 0, 0);
  const auto shifted = moving_average(VelocitySeries::uniform(0, ramp));
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    CHECK(shifted[i].x() == doctest::Approx(0.1 * (static_cast<double>(i) + 2.0)).epsilon(1e-13));
  }
  CHECK(shifted.timestamps().front() == 0.0);

  CHECK(moving_average(constant_series(5, Velocity3::Ones())).size() == 1);
  CHECK_THROWS_AS(moving_average(constant_series(3, Velocity3::Ones())), DomainError);
}

TEST_CASE("noising pipeline with zero terms is the identity") {
  const auto gt = wavy_series(200);
  NoisingConfig cfg;
  cfg.gnss_noise_std_mps = 0.0;
  cfg.rotation = FrameRotation::from_euler(0.02, -0.01, 0.5);
  cfg.seed = 5;
  const auto out = run_noising_pipeline(gt, cfg);
  REQUIRE(out.dvl.size() == gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    CHECK((out.dvl[i] - gt[i]).norm() < 1e-10);
    CHECK((out.gnss[i] - gt[i]).norm() < 1e-10);
  }
}

TEST_CASE("beam scale passes through the pipeline unchanged") {
  NoisingConfig cfg;
  cfg.beam_terms = {0.01, 0.0, 0.0};
  cfg.gnss_noise_std_mps = 0.0;
  const auto out = run_noising_pipeline(constant_series(5, Velocity3(1, 0, 0)), cfg);
  CHECK((out.dvl[0] - Velocity3(1.01, 0, 0)).norm() < 1e-12);

  cfg.beam_terms = {0.013, 0.0, 0.0};
  cfg.rotation = FrameRotation::from_euler(0.1, 0.05, -0.3);
  const auto gt = wavy_series(300);
  const auto wavy = run_noising_pipeline(gt, cfg);
  for (std::size_t i = 0; i < gt.size(); ++i) CHECK(std::abs(wavy.dvl[i].norm() / gt[i].norm() - 1.0 - 0.013) < 1e-9);
}

TEST_CASE("GNSS noise has the configured spread") {
  NoisingConfig cfg;
  cfg.gnss_noise_std_mps = 0.005;
  cfg.seed = 6;
  const auto gt = constant_series(10000, Velocity3(1.5, 0, 0));
  const auto out = run_noising_pipeline(gt, cfg);
  double sum = 0.0, sq = 0.0;
  const double n = 3.0 * static_cast<double>(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Velocity3 e = out.gnss[i] - gt[i];
    sum += e.sum();
    sq += e.squaredNorm();
  }
  const double mean = sum / n;
  const double std = std::sqrt(sq / n - mean * mean);
  CHECK(std == doctest::Approx(0.005).epsilon(0.03));
}

TEST_CASE("pipeline output depends only on the seed") {
  const auto gt = wavy_series(100);
  NoisingConfig cfg;
  cfg.beam_terms = {0.01, 0.007, 0.02};
  cfg.seed = 11;
  const auto a = run_noising_pipeline(gt, cfg);
  const auto b = run_noising_pipeline(gt, cfg);
  CHECK(a.dvl.samples() == b.dvl.samples());
  CHECK(a.gnss.samples() == b.gnss.samples());
  cfg.seed = 12;
  CHECK(run_noising_pipeline(gt, cfg).dvl.samples() != a.dvl.samples());
}

TEST_CASE("window counts") {
  const auto s200 = wavy_series(200);
  CHECK(window_series(s200, s200, s200).size() == 22);
  const auto s10 = wavy_series(10);
  CHECK(window_series(s10, s10, s10).size() == 1);
  const auto s9 = wavy_series(9);
  CHECK_THROWS_AS(window_series(s9, s9, s9), DomainError);
  const auto s50 = wavy_series(50);
  CHECK_THROWS_AS(window_series(s50, s200, s50), DomainError);
}

TEST_CASE("windows with stride equal to width tile the series") {
  const auto dvl = wavy_series(100);
  const auto gnss = wavy_series(100).slice(0, 100);
  const auto windows = window_series(dvl, gnss, nullptr, 10, 10);
  REQUIRE(windows.size() == 10);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    CHECK(windows[w].t0 == static_cast<double>(10 * w));
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(windows[w].dvl.col(static_cast<Eigen::Index>(j)) == dvl[10 * w + j]);
      CHECK(windows[w].gnss.col(static_cast<Eigen::Index>(j)) == gnss[10 * w + j]);
      CHECK(windows[w].gt.col(static_cast<Eigen::Index>(j)) == gnss[10 * w + j]);
    }
  }
}

TEST_CASE("error grids") {
  CHECK(ErrorGrid::desk().size() == 27);
  CHECK(ErrorGrid::full().size() == 1134);
  const auto combos = ErrorGrid::desk().combinations();
  REQUIRE(combos.size() == 27);
  CHECK(combos[0].scale == 0.004);
  CHECK(combos[1].noise_std_mps == 0.0006);
  CHECK(combos[26].bias_mps == 0.008);
}

TEST_CASE("training corpus size, split and determinism") {
  const std::vector<VelocitySeries> trajectories{wavy_series(200)};
  CorpusOptions options;
  options.seed = 21;
  const auto corpus = build_training_corpus(trajectories, ErrorGrid::desk(), options);
  const std::size_t total = corpus.train.size() + corpus.eval.size();
  CHECK(total == 594);
  CHECK(std::abs(static_cast<double>(corpus.train.size()) - 0.8 * static_cast<double>(total)) <= 1.0);

  using Key = std::tuple<double, double, double, double>;
  std::set<Key> seen;
  auto key = [](const SampleWindow& w) {
    REQUIRE(w.planted.has_value());
    return Key{w.planted->scale, w.planted->bias_mps, w.planted->noise_std_mps, w.t0};
  };
  for (const auto& w : corpus.train) seen.insert(key(w));
  for (const auto& w : corpus.eval) CHECK(seen.insert(key(w)).second);
  CHECK(seen.size() == total);

  options.threads = 3;
  const auto threaded = build_training_corpus(trajectories, ErrorGrid::desk(), options);
  REQUIRE(threaded.train.size() == corpus.train.size());
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    CHECK(threaded.train[i].dvl == corpus.train[i].dvl);
    CHECK(threaded.train[i].gnss == corpus.train[i].gnss);
  }

  ErrorGrid empty = ErrorGrid::desk();
  empty.biases_mps.clear();
  CHECK_THROWS_AS(build_training_corpus(trajectories, empty, options), DomainError);
  CHECK_THROWS_AS(build_training_corpus({}, ErrorGrid::desk(), options), DomainError);
}

TEST_CASE("CSV ingestion") {
  testing::TempDir dir("csv");
  const auto good = dir.path() / "good.csv";
  testing::write_file(good, "t,vx,vy,vz\n0,1,2,3\n1,1.5,2.5,3.5\n2,0,0,0\n");
  const auto s = ingest_csv(good);
  CHECK(s.size() == 3);
  CHECK(s[1] == Velocity3(1.5, 2.5, 3.5));

  auto failing_line = [&](const std::string& text) -> std::size_t {
    const auto path = dir.path() / "bad.csv";
    testing::write_file(path, text);
    try {
      ingest_csv(path);
    } catch (const IngestionError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(failing_line("t,vx,vy,vz\n0,1,2,3\n0,1,2,3\n") == 3);
  CHECK(failing_line("t,vx,vy,vz\n0,1,2,3\n1,1,2\n") == 3);
  CHECK(failing_line("t,vx,vy,vz\n0,1,nan,3\n") == 2);
  CHECK(failing_line("t,vx,vy,vz\n0,1,2,3\n1,x,2,3\n") == 3);
  CHECK(failing_line("t,vx,vy,vz\n0,1,2,3\n2,1,2,3\n") == 3);
  CHECK(failing_line("time,vx,vy,vz\n0,1,2,3\n") == 1);
  CHECK_THROWS_AS(ingest_csv(dir.path() / "missing.csv"), IngestionError);
}

TEST_CASE("CSV export and ingest round trip") {
  testing::TempDir dir("roundtrip");
  const auto s = VelocitySeries::uniform(5.0, {Velocity3(0.1, 1.0 / 3.0, -2.0e-7), Velocity3(1e5, -0.0, 123.456789012345678)});
  export_csv(dir.path() / "s.csv", s);
  const auto back = ingest_csv(dir.path() / "s.csv");
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back.timestamps()[i] == s.timestamps()[i]);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(back[i](a) - s[i](a)) <= 1e-15 * std::max(1.0, std::abs(s[i](a))));
    }
  }
  CHECK(testing::read_file(dir.path() / "s.csv").rfind("t,vx,vy,vz\n", 0) == 0);
}

TEST_CASE("dataset manifest round trip") {
  testing::TempDir dir("manifest");
  DatasetManifest m;
  m.trajectories = {dir.path() / "gt" / "a.csv", dir.path() / "b.csv"};
  m.grid = ErrorGrid::desk();
  m.seed = 987654321987654321ull;
  m.window_s = 12;
  m.stride_s = 5;
  m.split_ratio = 0.75;
  m.gnss_noise_std_mps = 0.004;
  save_manifest(dir.path() / "manifest.txt", m);
  const auto back = load_manifest(dir.path() / "manifest.txt");
  REQUIRE(back.trajectories.size() == 2);
  CHECK(back.trajectories[0].lexically_normal() == m.trajectories[0].lexically_normal());
  CHECK(back.grid.scales == m.grid.scales);
  CHECK(back.grid.noise_stds_mps == m.grid.noise_stds_mps);
  CHECK(back.seed == m.seed);
  CHECK(back.window_s == 12);
  CHECK(back.stride_s == 5);
  CHECK(back.split_ratio == 0.75);
  CHECK(back.gnss_noise_std_mps == 0.004);

  testing::write_file(dir.path() / "typo.txt", "trajectories = a.csv\ngrid.scale = 0.01\n");
  CHECK_THROWS_AS(load_manifest(dir.path() / "typo.txt"), ConfigError);
}
