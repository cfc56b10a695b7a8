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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dvlcal/error_models.hpp"
#include "dvlcal/geometry.hpp"
#include "dvlcal/random.hpp"

namespace dvlcal {

enum class Frame { body, navigation, dvl };

/// 1 Hz velocity samples in a named frame.
class VelocitySeries {
 public:
  VelocitySeries() = default;

  /// Throws DomainError unless timestamps and samples have equal length, timestamps
  /// advance by 1 s (within 1e-6 s) and every sample is finite.
  VelocitySeries(std::vector<double> timestamps, std::vector<Velocity3> samples, Frame frame = Frame::body,
                 bool ground_truth = false);

  /// Timestamps t0, t0 + 1, ...
  static VelocitySeries uniform(double t0, std::vector<Velocity3> samples, Frame frame = Frame::body,
                                bool ground_truth = false);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }
  const std::vector<Velocity3>& samples() const noexcept { return samples_; }
  const Velocity3& operator[](std::size_t i) const { return samples_[i]; }
  Frame frame() const noexcept { return frame_; }
  bool is_ground_truth() const noexcept { return ground_truth_; }

  /// Samples [begin, begin + count). Throws DomainError if out of range.
  VelocitySeries slice(std::size_t begin, std::size_t count) const;

 private:
  std::vector<double> timestamps_;
  std::vector<Velocity3> samples_;
  Frame frame_ = Frame::body;
  bool ground_truth_ = false;
};

enum class TrajectoryKind { constant_velocity, lawnmower, mixed_legs };

/// One straight leg of a heading plan. Turns between legs are inserted by the generator.
struct Leg {
  double heading_rad = 0.0;
  double duration_s = 0.0;
  double speed_factor = 1.0;  ///< forward speed as a fraction of nominal
  double heave_mps = 0.0;     ///< vertical body velocity held during the leg
};

/// Synthetic stand-in for a recorded AUV run.
struct TrajectoryProfile {
  TrajectoryKind kind = TrajectoryKind::constant_velocity;
  double duration_s = 200.0;
  double nominal_speed_mps = 1.5;
  std::vector<Leg> legs;  ///< cycled until duration_s is covered; empty means one leg at heading 0
  /// Per-axis jitter bound. Jitter is a smooth AR(1) process with std jitter/2, clamped to +-jitter.
  double jitter_mps = 0.02;
  double turn_rate_rad_s = 0.10;

  /// Throws DomainError unless duration >= 20 s, 0 < speed <= 3 m/s, jitter >= 0 and legs are sane.
  void validate() const;

  static TrajectoryProfile constant_velocity(double duration_s, double speed_mps, double jitter_mps);
  /// Back-and-forth legs of \p leg_s seconds with 180 degree turns.
  static TrajectoryProfile lawnmower(double duration_s, double speed_mps, double leg_s, double jitter_mps);
  /// Legs with varied speed, heading and heave drawn from \p seed.
  static TrajectoryProfile mixed_legs(double duration_s, double speed_mps, double jitter_mps, std::uint64_t seed);
};

std::string to_string(TrajectoryKind kind);
TrajectoryKind parse_trajectory_kind(const std::string& text);

/// Body-frame 1 Hz series of exactly duration_s samples, starting at t = 0.
VelocitySeries generate_trajectory(const TrajectoryProfile& profile, Rng& rng);

inline constexpr std::size_t kDefaultMovingAverage = 5;

/// Forward-window mean: out[i] = mean(in[i .. i + window - 1]). Output is
/// input.size() - window + 1 long, keeps the leading timestamps and is flagged as ground truth.
/// Throws DomainError when the series is shorter than the window.
VelocitySeries moving_average(const VelocitySeries& series, std::size_t window_s = kDefaultMovingAverage);

inline constexpr double kDefaultGnssNoiseStd = 0.005;

struct NoisingConfig {
  BeamErrorTerms beam_terms;
  double gnss_noise_std_mps = kDefaultGnssNoiseStd;
  BeamGeometry geometry;
  FrameRotation rotation;  ///< body -> DVL
  std::uint64_t seed = 0;
};

struct NoisedSeries {
  VelocitySeries dvl;
  VelocitySeries gnss;
};

/// Per sample: rotate into the DVL frame, project onto the beams, apply the planted beam
/// errors, solve back for velocity and rotate to body. GNSS is gt + N(0, sigma^2 I).
/// DVL and GNSS noise use independent streams derived from cfg.seed.
NoisedSeries run_noising_pipeline(const VelocitySeries& gt, const NoisingConfig& cfg);

/// One network sample: aligned 3 x W blocks.
struct SampleWindow {
  Eigen::Matrix3Xd dvl;
  Eigen::Matrix3Xd gnss;
  Eigen::Matrix3Xd gt;
  double t0 = 0.0;
  std::optional<BeamErrorTerms> planted;  ///< diagnostics only

  std::size_t width() const noexcept { return static_cast<std::size_t>(dvl.cols()); }
};

inline constexpr std::size_t kDefaultWindow = 10;
inline constexpr std::size_t kDefaultStride = 9;

/// floor((L - W) / stride) + 1 windows. Throws DomainError when the series are shorter
/// than the window or misaligned. Without \p gt the gt block repeats the GNSS block.
std::vector<SampleWindow> window_series(const VelocitySeries& dvl, const VelocitySeries& gnss,
                                        const VelocitySeries* gt, std::size_t window_s = kDefaultWindow,
                                        std::size_t stride_s = kDefaultStride);
std::vector<SampleWindow> window_series(const VelocitySeries& dvl, const VelocitySeries& gnss,
                                        const VelocitySeries& gt, std::size_t window_s = kDefaultWindow,
                                        std::size_t stride_s = kDefaultStride);

/// Cartesian product of planted beam error values.
struct ErrorGrid {
  std::vector<double> scales;          ///< fractions
  std::vector<double> biases_mps;
  std::vector<double> noise_stds_mps;

  std::size_t size() const noexcept { return scales.size() * biases_mps.size() * noise_stds_mps.size(); }
  /// Scale-major ordering.
  std::vector<BeamErrorTerms> combinations() const;

  /// scale {0.4, 0.8, 1.2} %, bias {0.2, 0.5, 0.8} cm/s, noise {0.02, 0.06, 0.1} cm/s.
  static ErrorGrid desk();
  /// scale 0.2..1.5 %, bias 0.1..0.9 cm/s, noise 0.02..0.1 cm/s; 14 x 9 x 9.
  static ErrorGrid full();
};

struct CorpusOptions {
  std::size_t window_s = kDefaultWindow;
  std::size_t stride_s = kDefaultStride;
  double split_ratio = 0.8;
  double gnss_noise_std_mps = kDefaultGnssNoiseStd;
  BeamGeometry geometry;
  FrameRotation rotation;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TrainingCorpus {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> eval;
};

/// Noises every trajectory with every grid point (sub-seed per pair), windows the
/// results, shuffles and splits round(split * N) / rest. Output does not depend on threads.
/// Throws DomainError for an empty grid or trajectory list.
TrainingCorpus build_training_corpus(std::span<const VelocitySeries> trajectories, const ErrorGrid& grid,
                                     const CorpusOptions& options);

/// Reads "t,vx,vy,vz" CSV. Throws IngestionError naming the offending line.
VelocitySeries ingest_csv(const std::filesystem::path& path, Frame frame = Frame::body);
/// Writes the same schema with 17 significant digits.
void export_csv(const std::filesystem::path& path, const VelocitySeries& series);

/// Describes a training corpus on disk.
struct DatasetManifest {
  std::vector<std::filesystem::path> trajectories;  ///< ground-truth CSVs; stored relative to the manifest file
  ErrorGrid grid = ErrorGrid::desk();
  std::uint64_t seed = 0;
  std::size_t window_s = kDefaultWindow;
  std::size_t stride_s = kDefaultStride;
  double split_ratio = 0.8;
  double gnss_noise_std_mps = kDefaultGnssNoiseStd;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace dvlcal
