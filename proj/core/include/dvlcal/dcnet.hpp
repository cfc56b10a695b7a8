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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "dvlcal/error_models.hpp"
#include "dvlcal/kv_file.hpp"
#include "dvlcal/nn/grad_check.hpp"
#include "dvlcal/nn/ops.hpp"
#include "dvlcal/nn/tensor.hpp"
#include "dvlcal/simulation.hpp"

namespace dvlcal {

enum class FcActivation { tanh, leaky_relu };
/// What the calibrated DVL velocity is compared against in the training loss.
enum class LossTarget { ground_truth, gnss };

/// Architecture and training hyperparameters. Defaults give a 704-wide concatenation
/// for 10-sample windows.
struct DCNetConfig {
  std::size_t window = kDefaultWindow;
  std::array<std::size_t, 2> conv1d_channels{16, 32};
  std::size_t conv1d_kernel = 2;
  std::array<std::size_t, 3> conv2d_channels{16, 32, 64};
  std::size_t conv2d_kernel_rows = 2;
  std::size_t conv2d_kernel_cols = 2;
  std::array<nn::Dilation, 3> conv2d_dilations{{{3, 1}, {1, 1}, {1, 1}}};
  std::array<std::size_t, 3> fc_widths{256, 128, 64};
  double leaky_slope_1d = 0.05;
  double leaky_slope_2d = 0.05;
  FcActivation fc_activation = FcActivation::tanh;
  double fc_leaky_slope = 0.05;
  double dropout = 0.3;
  double learning_rate = 5e-5;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  LossTarget loss_target = LossTarget::ground_truth;

  /// Defaults with the per-model learning rate: 5e-4 for EM5, 5e-5 otherwise.
  static DCNetConfig for_kind(ErrorModelKind kind);

  std::size_t conv1d_output_width() const;
  std::array<std::size_t, 2> conv2d_output_extent() const;
  /// Width of the flattened, concatenated head outputs.
  std::size_t concat_width() const;

  /// Throws DomainError when the shapes do not work out or a value is out of range.
  void validate() const;

  void write(KeyValueFile& kv, const std::string& prefix) const;
  /// Reads keys under \p prefix; missing keys keep the values already in \p base.
  static DCNetConfig read(const KeyValueFile& kv, const std::string& prefix, DCNetConfig base);
  /// Keys understood by read() for a given prefix.
  static std::vector<std::string> keys(const std::string& prefix);
};

/// Network input for a batch of windows.
struct BatchInputs {
  nn::Tensor stacked;      ///< [B, 1, 6, W]: DVL xyz rows 0..2, GNSS xyz rows 3..5
  nn::Tensor subtraction;  ///< [B, 3, W]: DVL - GNSS
};

/// DVL - GNSS as a [3, W] tensor.
nn::Tensor subtraction_vector(const SampleWindow& window);

/// Throws DomainError when window widths differ from \p window.
BatchInputs make_batch(std::span<const SampleWindow> windows, std::size_t window);

/// Two convolutional heads (1-D over the subtraction vector, 2-D over the stacked
/// velocities with a row-dilated first kernel) feeding a four-layer FC block whose
/// output width is terms_dimension(kind).
class DCNetModel {
 public:
  /// Weights uniform in +-1/sqrt(fan_in), drawn from \p init_seed.
  DCNetModel(ErrorModelKind kind, DCNetConfig config, std::uint64_t init_seed);

  ErrorModelKind kind() const noexcept { return kind_; }
  const DCNetConfig& config() const noexcept { return config_; }
  const std::vector<nn::NamedTensor>& parameters() const noexcept { return params_; }
  std::vector<nn::Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;

  /// Raw term vectors [B, terms_dimension(kind)]. Train mode needs \p rng for dropout.
  nn::Tensor forward(const BatchInputs& inputs, nn::Mode mode, Rng* rng = nullptr) const;
  nn::Tensor forward(std::span<const SampleWindow> windows, nn::Mode mode, Rng* rng = nullptr) const;

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

  /// Header (config + kind) followed by nn::write_tensors records.
  void write(std::ostream& out) const;
  static DCNetModel read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static DCNetModel load(const std::filesystem::path& path);

 private:
  DCNetModel(ErrorModelKind kind, DCNetConfig config);
  const nn::Tensor& param(std::size_t i) const { return params_[i].tensor; }

  ErrorModelKind kind_;
  DCNetConfig config_;
  std::vector<nn::NamedTensor> params_;
};

/// Lower bound applied to raw scale outputs before inversion.
inline constexpr double kScaleGuard = -1.0 + 1e-3;

/// Closed-loop loss for a batch: each window's raw output becomes error terms, its DVL
/// block is calibrated with them, and the squared error against the target block is
/// summed over axes and averaged over all samples of all windows. Scale outputs below
/// kScaleGuard are clamped (zero gradient there).
nn::Tensor closed_loop_loss(const nn::Tensor& raw, std::span<const SampleWindow> windows, ErrorModelKind kind,
                            LossTarget target = LossTarget::ground_truth);

/// Single-window convenience form.
double closed_loop_loss(std::span<const double> raw, const SampleWindow& window, ErrorModelKind kind,
                        LossTarget target = LossTarget::ground_truth);

struct EpochStats {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double wall_time_s = 0.0;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> eval_loss;
  std::vector<double> wall_time_s;
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;  ///< 1-based, 0 when no epoch ran

  double best_eval_loss() const;
};

/// Raised when a loss turns non-finite; carries the epochs completed so far.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, TrainReport partial);
  std::size_t epoch() const noexcept { return epoch_; }
  const TrainReport& partial_report() const noexcept { return partial_; }

 private:
  std::size_t epoch_;
  TrainReport partial_;
};

/// RMSProp over shuffled mini-batches with dropout active; per-epoch eval loss with
/// dropout off (on the training set when the eval split is empty). The parameters with
/// the lowest eval loss are restored at the end. Throws DomainError for an empty corpus.
TrainReport train(DCNetModel& model, const TrainingCorpus& corpus, std::uint64_t seed,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean raw output over the stride-9 windows of a calibration segment, scale guarded.
/// Throws DomainError when the segment is shorter than one window.
std::vector<double> estimate_raw_terms(const DCNetModel& model, const VelocitySeries& dvl,
                                       const VelocitySeries& gnss, std::size_t stride_s = kDefaultStride);

BodyErrorTerms estimate_terms(const DCNetModel& model, const VelocitySeries& dvl, const VelocitySeries& gnss,
                              std::size_t stride_s = kDefaultStride);

}  // namespace dvlcal
