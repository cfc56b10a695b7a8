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

#include "dvlcal/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "dvlcal/errors.hpp"
#include "dvlcal/kv_file.hpp"

namespace dvlcal {

namespace {

constexpr double kSpacingTol = 1e-6;

void check_spacing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(std::abs(t[i] - t[i - 1] - 1.0) <= kSpacingTol)) {
      throw DomainError("timestamps must advance by 1 s (sample " + std::to_string(i) + ")");
    }
  }
}

double lerp(double a, double b, double s) { return a + (b - a) * s; }

}  // namespace

// ---------------------------------------------------------------------------
// VelocitySeries

VelocitySeries::VelocitySeries(std::vector<double> timestamps, std::vector<Velocity3> samples, Frame frame,
                               bool ground_truth)
    : timestamps_(std::move(timestamps)), samples_(std::move(samples)), frame_(frame), ground_truth_(ground_truth) {
  if (timestamps_.size() != samples_.size()) throw DomainError("timestamps and samples differ in length");
  check_spacing(timestamps_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!samples_[i].allFinite()) throw DomainError("non-finite sample at index " + std::to_string(i));
  }
}

VelocitySeries VelocitySeries::uniform(double t0, std::vector<Velocity3> samples, Frame frame, bool ground_truth) {
  std::vector<double> t(samples.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = t0 + static_cast<double>(i);
  return VelocitySeries(std::move(t), std::move(samples), frame, ground_truth);
}

VelocitySeries VelocitySeries::slice(std::size_t begin, std::size_t count) const {
  if (begin > size() || count > size() - begin) throw DomainError("slice out of range");
  return VelocitySeries(std::vector<double>(timestamps_.begin() + begin, timestamps_.begin() + begin + count),
                        std::vector<Velocity3>(samples_.begin() + begin, samples_.begin() + begin + count), frame_,
                        ground_truth_);
}

// ---------------------------------------------------------------------------
// Trajectories

void TrajectoryProfile::validate() const {
  if (!(duration_s >= 20.0)) throw DomainError("trajectory duration must be >= 20 s");
  if (!(nominal_speed_mps > 0.0 && nominal_speed_mps <= 3.0)) throw DomainError("nominal speed must be in (0, 3] m/s");
  if (!(jitter_mps >= 0.0)) throw DomainError("jitter must be >= 0");
  if (!(turn_rate_rad_s > 0.0)) throw DomainError("turn rate must be > 0");
  for (const auto& leg : legs) {
    if (!(leg.duration_s >= 1.0)) throw DomainError("leg duration must be >= 1 s");
    if (!(leg.speed_factor > 0.0 && leg.speed_factor * nominal_speed_mps <= 3.0)) {
      throw DomainError("leg speed out of range");
    }
    if (!std::isfinite(leg.heading_rad) || !std::isfinite(leg.heave_mps)) throw DomainError("leg values must be finite");
  }
}

TrajectoryProfile TrajectoryProfile::constant_velocity(double duration_s, double speed_mps, double jitter_mps) {
  TrajectoryProfile p;
  p.kind = TrajectoryKind::constant_velocity;
  p.duration_s = duration_s;
  p.nominal_speed_mps = speed_mps;
  p.jitter_mps = jitter_mps;
  return p;
}

TrajectoryProfile TrajectoryProfile::lawnmower(double duration_s, double speed_mps, double leg_s, double jitter_mps) {
  TrajectoryProfile p;
  p.kind = TrajectoryKind::lawnmower;
  p.duration_s = duration_s;
  p.nominal_speed_mps = speed_mps;
  p.jitter_mps = jitter_mps;
  p.legs = {Leg{0.0, leg_s, 1.0, 0.0}, Leg{std::numbers::pi, leg_s, 1.0, 0.0}};
  return p;
}

TrajectoryProfile TrajectoryProfile::mixed_legs(double duration_s, double speed_mps, double jitter_mps,
                                                std::uint64_t seed) {
  TrajectoryProfile p;
  p.kind = TrajectoryKind::mixed_legs;
  p.duration_s = duration_s;
  p.nominal_speed_mps = speed_mps;
  p.jitter_mps = jitter_mps;
  Rng rng(derive_seed(seed, "mixed-legs"));
  double covered = 0.0;
  double heading = 0.0;
  while (covered < duration_s) {
    Leg leg;
    leg.duration_s = std::round(rng.uniform(40.0, 120.0));
    leg.speed_factor = rng.uniform(0.5, 1.0);
    leg.heave_mps = rng.bernoulli(0.5) ? rng.uniform(-0.15, 0.15) : 0.0;
    leg.heading_rad = heading;
    heading += rng.uniform(-std::numbers::pi, std::numbers::pi);
    covered += leg.duration_s;
    p.legs.push_back(leg);
  }
  return p;
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::constant_velocity: return "constant";
    case TrajectoryKind::lawnmower: return "lawnmower";
    case TrajectoryKind::mixed_legs: return "mixed";
  }
  return "?";
}

TrajectoryKind parse_trajectory_kind(const std::string& text) {
  if (text == "constant") return TrajectoryKind::constant_velocity;
  if (text == "lawnmower") return TrajectoryKind::lawnmower;
  if (text == "mixed") return TrajectoryKind::mixed_legs;
  throw DomainError("unknown trajectory kind '" + text + "' (constant|lawnmower|mixed)");
}

VelocitySeries generate_trajectory(const TrajectoryProfile& profile, Rng& rng) {
  profile.validate();
  const auto n = static_cast<std::size_t>(std::llround(profile.duration_s));
  std::vector<Leg> legs = profile.legs;
  if (legs.empty()) legs.push_back(Leg{0.0, profile.duration_s, 1.0, 0.0});

  // Noise-free body velocity, second by second, following legs and turns.
  std::vector<Velocity3> base;
  base.reserve(n);
  for (std::size_t li = 0; base.size() < n; li = (li + 1) % legs.size()) {
    const Leg& leg = legs[li];
    const double u = profile.nominal_speed_mps * leg.speed_factor;
    const auto straight = static_cast<std::size_t>(std::llround(leg.duration_s));
    for (std::size_t k = 0; k < straight && base.size() < n; ++k) base.emplace_back(u, 0.0, leg.heave_mps);

    const Leg& next = legs[(li + 1) % legs.size()];
    const double turn = next.heading_rad - leg.heading_rad;
    const auto turn_s = static_cast<std::size_t>(std::ceil(std::abs(turn) / profile.turn_rate_rad_s - 1e-9));
    const double u_next = profile.nominal_speed_mps * next.speed_factor;
    for (std::size_t k = 0; k < turn_s && base.size() < n; ++k) {
      const double phase = (static_cast<double>(k) + 0.5) / static_cast<double>(turn_s);
      const double bump = std::sin(std::numbers::pi * phase);
      const double forward = lerp(u, u_next, phase) * (1.0 - 0.3 * bump);
      const double sway = (turn > 0 ? 1.0 : -1.0) * 0.12 * 0.5 * (u + u_next) * bump;
      base.emplace_back(forward, sway, lerp(leg.heave_mps, next.heave_mps, phase));
    }
  }

  std::vector<Velocity3> samples(n);
  const double sigma = profile.jitter_mps / 2.0;
  constexpr double kCorrelation = 0.9;
  const double innovation = sigma * std::sqrt(1.0 - kCorrelation * kCorrelation);
  Eigen::Vector3d jitter;
  for (int a = 0; a < 3; ++a) jitter[a] = rng.normal(0.0, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      for (int a = 0; a < 3; ++a) jitter[a] = kCorrelation * jitter[a] + rng.normal(0.0, innovation);
    }
    jitter = jitter.cwiseMax(-profile.jitter_mps).cwiseMin(profile.jitter_mps);
    samples[i] = base[i] + jitter;
  }
  return VelocitySeries::uniform(0.0, std::move(samples), Frame::body);
}

// ---------------------------------------------------------------------------
// Moving average and noising

VelocitySeries moving_average(const VelocitySeries& series, std::size_t window_s) {
  if (window_s == 0) throw DomainError("moving-average window must be positive");
  if (series.size() < window_s) {
    throw DomainError("series of " + std::to_string(series.size()) + " samples is shorter than the " +
                      std::to_string(window_s) + " s moving-average window");
  }
  const std::size_t out_n = series.size() - window_s + 1;
  std::vector<Velocity3> out(out_n);
  for (std::size_t i = 0; i < out_n; ++i) {
    Velocity3 sum = Velocity3::Zero();
    for (std::size_t j = 0; j < window_s; ++j) sum += series[i + j];
    out[i] = sum / static_cast<double>(window_s);
  }
  return VelocitySeries(std::vector<double>(series.timestamps().begin(), series.timestamps().begin() + out_n),
                        std::move(out), series.frame(), /*ground_truth=*/true);
}

NoisedSeries run_noising_pipeline(const VelocitySeries& gt, const NoisingConfig& cfg) {
  cfg.beam_terms.validate();
  if (!(cfg.gnss_noise_std_mps >= 0.0)) throw DomainError("GNSS noise std must be >= 0");
  if (gt.frame() != Frame::body) throw DomainError("noising pipeline expects a body-frame series");

  const TransformMatrix h = build_transform(cfg.geometry);
  const Eigen::Matrix3d& body_to_dvl = cfg.rotation.matrix();
  Rng dvl_rng(derive_seed(cfg.seed, "dvl"));
  Rng gnss_rng(derive_seed(cfg.seed, "gnss"));

  std::vector<Velocity3> dvl(gt.size());
  std::vector<Velocity3> gnss(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const BeamVelocities beams = project_to_beams(h, body_to_dvl * gt[i]);
    const BeamVelocities measured = apply_beam_errors(beams, cfg.beam_terms, dvl_rng);
    dvl[i] = body_to_dvl.transpose() * solve_velocity(h, measured);
    for (int a = 0; a < 3; ++a) gnss[i][a] = gt[i][a] + gnss_rng.normal(0.0, cfg.gnss_noise_std_mps);
  }
  return {VelocitySeries(gt.timestamps(), std::move(dvl), Frame::body),
          VelocitySeries(gt.timestamps(), std::move(gnss), Frame::body)};
}

// ---------------------------------------------------------------------------
// Windowing and corpus

std::vector<SampleWindow> window_series(const VelocitySeries& dvl, const VelocitySeries& gnss,
                                        const VelocitySeries* gt, std::size_t window_s, std::size_t stride_s) {
  if (window_s == 0 || stride_s == 0) throw DomainError("window and stride must be positive");
  if (dvl.size() != gnss.size() || (gt && gt->size() != dvl.size())) throw DomainError("series are not aligned");
  if (dvl.size() < window_s) {
    throw DomainError("series of " + std::to_string(dvl.size()) + " samples is shorter than the " +
                      std::to_string(window_s) + " s window");
  }
  const VelocitySeries& truth = gt ? *gt : gnss;
  const std::size_t count = (dvl.size() - window_s) / stride_s + 1;
  const auto w = static_cast<Eigen::Index>(window_s);
  std::vector<SampleWindow> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * stride_s;
    SampleWindow& win = out[k];
    win.dvl.resize(3, w);
    win.gnss.resize(3, w);
    win.gt.resize(3, w);
    for (Eigen::Index j = 0; j < w; ++j) {
      win.dvl.col(j) = dvl[start + j];
      win.gnss.col(j) = gnss[start + j];
      win.gt.col(j) = truth[start + j];
    }
    win.t0 = dvl.timestamps()[start];
  }
  return out;
}

std::vector<SampleWindow> window_series(const VelocitySeries& dvl, const VelocitySeries& gnss,
                                        const VelocitySeries& gt, std::size_t window_s, std::size_t stride_s) {
  return window_series(dvl, gnss, &gt, window_s, stride_s);
}

std::vector<BeamErrorTerms> ErrorGrid::combinations() const {
  std::vector<BeamErrorTerms> out;
  out.reserve(size());
  for (double s : scales) {
    for (double b : biases_mps) {
      for (double n : noise_stds_mps) out.push_back(BeamErrorTerms{s, b, n});
    }
  }
  return out;
}

ErrorGrid ErrorGrid::desk() {
  return ErrorGrid{{0.004, 0.008, 0.012}, {0.002, 0.005, 0.008}, {0.0002, 0.0006, 0.001}};
}

ErrorGrid ErrorGrid::full() {
  ErrorGrid g;
  for (int i = 2; i <= 15; ++i) g.scales.push_back(i / 1000.0);
  for (int i = 1; i <= 9; ++i) g.biases_mps.push_back(i / 1000.0);
  for (int i = 2; i <= 10; ++i) g.noise_stds_mps.push_back(i / 10000.0);
  return g;
}

TrainingCorpus build_training_corpus(std::span<const VelocitySeries> trajectories, const ErrorGrid& grid,
                                     const CorpusOptions& options) {
  if (grid.size() == 0) throw DomainError("error grid is empty");
  if (trajectories.empty()) throw DomainError("no training trajectories");
  if (!(options.split_ratio > 0.0 && options.split_ratio <= 1.0)) throw DomainError("split ratio must be in (0, 1]");

  const auto combos = grid.combinations();
  const std::size_t jobs = trajectories.size() * combos.size();
  std::vector<std::vector<SampleWindow>> per_job(jobs);

  auto run_job = [&](std::size_t j) {
    NoisingConfig cfg;
    cfg.beam_terms = combos[j % combos.size()];
    cfg.gnss_noise_std_mps = options.gnss_noise_std_mps;
    cfg.geometry = options.geometry;
    cfg.rotation = options.rotation;
    cfg.seed = derive_seed(options.seed, "corpus", j);
    const VelocitySeries& gt = trajectories[j / combos.size()];
    const auto noised = run_noising_pipeline(gt, cfg);
    auto windows = window_series(noised.dvl, noised.gnss, gt, options.window_s, options.stride_s);
    for (auto& w : windows) w.planted = cfg.beam_terms;
    per_job[j] = std::move(windows);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(jobs)));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t j = next++; j < jobs; j = next++) run_job(j);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<SampleWindow> all;
  for (auto& windows : per_job) {
    for (auto& w : windows) all.push_back(std::move(w));
  }
  Rng rng(derive_seed(options.seed, "split"));
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.next() % i]);

  const auto n_train = static_cast<std::size_t>(std::llround(options.split_ratio * static_cast<double>(all.size())));
  TrainingCorpus corpus;
  corpus.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + n_train));
  corpus.eval.assign(std::make_move_iterator(all.begin() + n_train), std::make_move_iterator(all.end()));
  return corpus;
}

// ---------------------------------------------------------------------------
// CSV and manifest

VelocitySeries ingest_csv(const std::filesystem::path& path, Frame frame) {
  std::ifstream in(path);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t line_no = 0;
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw IngestionError(path.string(), 1, "missing header");
  ++line_no;
  strip_cr(line);
  if (line != "t,vx,vy,vz") throw IngestionError(path.string(), 1, "expected header 't,vx,vy,vz'");

  std::vector<double> t;
  std::vector<Velocity3> v;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    double fields[4];
    const char* p = line.data();
    const char* end = p + line.size();
    for (int f = 0; f < 4; ++f) {
      const auto [ptr, ec] = std::from_chars(p, end, fields[f]);
      if (ec != std::errc()) throw IngestionError(path.string(), line_no, "malformed number");
      if (!std::isfinite(fields[f])) throw IngestionError(path.string(), line_no, "non-finite value");
      p = ptr;
      if (f < 3) {
        if (p == end || *p != ',') throw IngestionError(path.string(), line_no, "expected 4 comma-separated fields");
        ++p;
      }
    }
    if (p != end) throw IngestionError(path.string(), line_no, "trailing characters after 4 fields");
    if (!t.empty()) {
      if (!(fields[0] > t.back())) throw IngestionError(path.string(), line_no, "timestamp not strictly increasing");
      if (!(std::abs(fields[0] - t.back() - 1.0) <= kSpacingTol)) {
        throw IngestionError(path.string(), line_no, "timestamp spacing is not 1 s");
      }
    }
    t.push_back(fields[0]);
    v.emplace_back(fields[1], fields[2], fields[3]);
  }
  if (t.empty()) throw IngestionError(path.string(), line_no, "no data rows");
  return VelocitySeries(std::move(t), std::move(v), frame);
}

void export_csv(const std::filesystem::path& path, const VelocitySeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,vx,vy,vz\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.timestamps()[i]) << ',' << format_double(series[i].x()) << ','
        << format_double(series[i].y()) << ',' << format_double(series[i].z()) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  kv.reject_unknown({"trajectories", "grid.scales", "grid.biases_mps", "grid.noise_stds_mps", "seed", "window_s",
                     "stride_s", "split", "gnss_noise_std_mps"});
  DatasetManifest m;
  const auto base = path.parent_path();
  for (const auto& name : kv.get_strings("trajectories", {})) m.trajectories.push_back(base / name);
  m.grid.scales = kv.get_doubles("grid.scales", m.grid.scales);
  m.grid.biases_mps = kv.get_doubles("grid.biases_mps", m.grid.biases_mps);
  m.grid.noise_stds_mps = kv.get_doubles("grid.noise_stds_mps", m.grid.noise_stds_mps);
  m.seed = kv.get_u64("seed", m.seed);
  m.window_s = static_cast<std::size_t>(kv.get_int("window_s", static_cast<std::int64_t>(m.window_s)));
  m.stride_s = static_cast<std::size_t>(kv.get_int("stride_s", static_cast<std::int64_t>(m.stride_s)));
  m.split_ratio = kv.get_double("split", m.split_ratio);
  m.gnss_noise_std_mps = kv.get_double("gnss_noise_std_mps", m.gnss_noise_std_mps);
  if (m.trajectories.empty()) throw ConfigError(path.string() + ": manifest lists no trajectories");
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::string names;
  for (std::size_t i = 0; i < m.trajectories.size(); ++i) {
    names += (i ? "," : "") + m.trajectories[i].lexically_relative(path.parent_path()).generic_string();
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# training corpus manifest\n"
      << "trajectories = " << names << '\n'
      << "grid.scales = " << join_doubles(m.grid.scales) << '\n'
      << "grid.biases_mps = " << join_doubles(m.grid.biases_mps) << '\n'
      << "grid.noise_stds_mps = " << join_doubles(m.grid.noise_stds_mps) << '\n'
      << "seed = " << m.seed << '\n'
      << "window_s = " << m.window_s << '\n'
      << "stride_s = " << m.stride_s << '\n'
      << "split = " << format_double(m.split_ratio) << '\n'
      << "gnss_noise_std_mps = " << format_double(m.gnss_noise_std_mps) << '\n';
}

}  // namespace dvlcal
