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

#include "dvlcal/dcnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dvlcal/errors.hpp"
#include "dvlcal/nn/optimizer.hpp"
#include "dvlcal/nn/serialize.hpp"

namespace dvlcal {

namespace {

using nn::Tensor;
using WindowRefs = std::vector<const SampleWindow*>;

constexpr std::size_t kStackedRows = 6;

WindowRefs refs_of(std::span<const SampleWindow> windows) {
  WindowRefs refs;
  refs.reserve(windows.size());
  for (const auto& w : windows) refs.push_back(&w);
  return refs;
}

bool is_scale_slot(ErrorModelKind kind, std::size_t slot) {
  switch (kind) {
    case ErrorModelKind::em1:
    case ErrorModelKind::em2: return true;
    case ErrorModelKind::em3:
    case ErrorModelKind::em4: return false;
    case ErrorModelKind::em5: return slot < 3;
  }
  return false;
}

// Scale and bias of axis \p a for one raw vector, plus which raw slot feeds each.
struct AxisTerms {
  std::array<double, 3> scale{};
  std::array<double, 3> bias{};
  std::array<int, 3> scale_slot{-1, -1, -1};
  std::array<int, 3> bias_slot{-1, -1, -1};
};

AxisTerms axis_terms(ErrorModelKind kind, const double* raw) {
  AxisTerms t;
  for (int a = 0; a < 3; ++a) {
    switch (kind) {
      case ErrorModelKind::em1: t.scale_slot[a] = 0; break;
      case ErrorModelKind::em2: t.scale_slot[a] = a; break;
      case ErrorModelKind::em3: t.bias_slot[a] = 0; break;
      case ErrorModelKind::em4: t.bias_slot[a] = a; break;
      case ErrorModelKind::em5:
        t.scale_slot[a] = a;
        t.bias_slot[a] = 3 + a;
        break;
    }
    if (t.scale_slot[a] >= 0) t.scale[a] = raw[t.scale_slot[a]];
    if (t.bias_slot[a] >= 0) t.bias[a] = raw[t.bias_slot[a]];
  }
  return t;
}

BatchInputs make_batch_refs(const WindowRefs& windows, std::size_t width) {
  const std::size_t batch = windows.size();
  std::vector<double> stacked(batch * kStackedRows * width);
  std::vector<double> sub(batch * 3 * width);
  for (std::size_t n = 0; n < batch; ++n) {
    const SampleWindow& w = *windows[n];
    if (w.width() != width || static_cast<std::size_t>(w.gnss.cols()) != width) {
      throw DomainError("window width " + std::to_string(w.width()) + " does not match the model's " +
                        std::to_string(width));
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t j = 0; j < width; ++j) {
        const auto ai = static_cast<Eigen::Index>(a);
        const auto ji = static_cast<Eigen::Index>(j);
        stacked[(n * kStackedRows + a) * width + j] = w.dvl(ai, ji);
        stacked[(n * kStackedRows + 3 + a) * width + j] = w.gnss(ai, ji);
        sub[(n * 3 + a) * width + j] = w.dvl(ai, ji) - w.gnss(ai, ji);
      }
    }
  }
  return {Tensor({batch, 1, kStackedRows, width}, std::move(stacked)), Tensor({batch, 3, width}, std::move(sub))};
}

Tensor closed_loop_loss_refs(const Tensor& raw, const WindowRefs& windows, ErrorModelKind kind, LossTarget target) {
  const std::size_t dim = terms_dimension(kind);
  if (raw.rank() != 2 || raw.dim(0) != windows.size() || raw.dim(1) != dim) {
    throw DomainError("closed_loop_loss: raw output " + nn::shape_string(raw.shape()) + " does not match " +
                      std::to_string(windows.size()) + " windows of " + to_string(kind));
  }
  std::size_t samples = 0;
  for (const auto* w : windows) samples += w->width();
  if (samples == 0) throw DomainError("closed_loop_loss: no samples");

  const double inv_n = 1.0 / static_cast<double>(samples);
  const auto rv = raw.values();
  double sum = 0.0;
  for (std::size_t n = 0; n < windows.size(); ++n) {
    const SampleWindow& w = *windows[n];
    const Eigen::Matrix3Xd& ref = target == LossTarget::ground_truth ? w.gt : w.gnss;
    const AxisTerms t = axis_terms(kind, &rv[n * dim]);
    for (int a = 0; a < 3; ++a) {
      const double denom = 1.0 + std::max(t.scale[a], kScaleGuard);
      for (Eigen::Index j = 0; j < w.dvl.cols(); ++j) {
        const double e = (w.dvl(a, j) - t.bias[a]) / denom - ref(a, j);
        sum += e * e;
      }
    }
  }

  auto rn = raw.node();
  return Tensor::from_op({1}, {sum * inv_n}, {raw}, [rn, windows, kind, target, dim, inv_n](const nn::detail::Node& self) {
    auto& dr = rn->ensure_grad();
    const double g = self.grad[0] * inv_n;
    for (std::size_t n = 0; n < windows.size(); ++n) {
      const SampleWindow& w = *windows[n];
      const Eigen::Matrix3Xd& ref = target == LossTarget::ground_truth ? w.gt : w.gnss;
      const AxisTerms t = axis_terms(kind, &rn->values[n * dim]);
      for (int a = 0; a < 3; ++a) {
        const bool clamped = t.scale[a] < kScaleGuard;
        const double denom = 1.0 + std::max(t.scale[a], kScaleGuard);
        double d_scale = 0.0, d_bias = 0.0;
        for (Eigen::Index j = 0; j < w.dvl.cols(); ++j) {
          const double c = (w.dvl(a, j) - t.bias[a]) / denom;
          const double de = 2.0 * (c - ref(a, j));
          d_bias += -de / denom;
          d_scale += -de * c / denom;
        }
        if (t.scale_slot[a] >= 0 && !clamped) dr[n * dim + t.scale_slot[a]] += g * d_scale;
        if (t.bias_slot[a] >= 0) dr[n * dim + t.bias_slot[a]] += g * d_bias;
      }
    }
  });
}

std::string join_sizes(std::span<const std::size_t> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <std::size_t N>
std::array<std::size_t, N> parse_sizes(const KeyValueFile& kv, const std::string& key, std::array<std::size_t, N> base) {
  if (!kv.contains(key)) return base;
  const auto items = kv.get_doubles(key, {});
  if (items.size() != N) throw ConfigError("key '" + key + "' needs " + std::to_string(N) + " values");
  std::array<std::size_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!(items[i] >= 1.0) || items[i] != std::floor(items[i])) throw ConfigError("key '" + key + "': bad size");
    out[i] = static_cast<std::size_t>(items[i]);
  }
  return out;
}

// "3x1" -> {3, 1}
std::pair<std::size_t, std::size_t> parse_pair(const std::string& key, const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    const long a = std::stol(text.substr(0, x));
    const long b = std::stol(text.substr(x + 1));
    if (a < 1 || b < 1) throw std::invalid_argument(text);
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected RxC, got '" + text + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

DCNetConfig DCNetConfig::for_kind(ErrorModelKind kind) {
  DCNetConfig c;
  c.learning_rate = kind == ErrorModelKind::em5 ? 5e-4 : 5e-5;
  return c;
}

std::size_t DCNetConfig::conv1d_output_width() const {
  const std::size_t shrink = 2 * (conv1d_kernel - 1);
  return window > shrink ? window - shrink : 0;
}

std::array<std::size_t, 2> DCNetConfig::conv2d_output_extent() const {
  std::size_t h = kStackedRows, w = window;
  for (const auto& d : conv2d_dilations) {
    const std::size_t eh = (conv2d_kernel_rows - 1) * d.rows, ew = (conv2d_kernel_cols - 1) * d.cols;
    h = h > eh ? h - eh : 0;
    w = w > ew ? w - ew : 0;
  }
  return {h, w};
}

std::size_t DCNetConfig::concat_width() const {
  const auto [h, w] = conv2d_output_extent();
  return conv1d_channels[1] * conv1d_output_width() + conv2d_channels[2] * h * w;
}

void DCNetConfig::validate() const {
  if (window < 1 || conv1d_kernel < 1 || conv2d_kernel_rows < 1 || conv2d_kernel_cols < 1) {
    throw DomainError("DCNet window and kernels must be positive");
  }
  for (const auto& d : conv2d_dilations) {
    if (d.rows < 1 || d.cols < 1) throw DomainError("DCNet dilations must be positive");
  }
  const auto [h, w] = conv2d_output_extent();
  if (conv1d_output_width() == 0 || h == 0 || w == 0) {
    throw DomainError("DCNet kernels do not fit a " + std::to_string(window) + "-sample window");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("dropout must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw DomainError("learning rate must be >= 0");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
}

void DCNetConfig::write(KeyValueFile& kv, const std::string& prefix) const {
  kv.set(prefix + "window", std::to_string(window));
  kv.set(prefix + "conv1d_channels", join_sizes(conv1d_channels));
  kv.set(prefix + "conv1d_kernel", std::to_string(conv1d_kernel));
  kv.set(prefix + "conv2d_channels", join_sizes(conv2d_channels));
  kv.set(prefix + "conv2d_kernel", std::to_string(conv2d_kernel_rows) + "x" + std::to_string(conv2d_kernel_cols));
  std::string dil;
  for (std::size_t i = 0; i < conv2d_dilations.size(); ++i) {
    dil += (i ? "," : "") + std::to_string(conv2d_dilations[i].rows) + "x" + std::to_string(conv2d_dilations[i].cols);
  }
  kv.set(prefix + "conv2d_dilations", dil);
  kv.set(prefix + "fc_widths", join_sizes(fc_widths));
  kv.set(prefix + "leaky_1d", format_double(leaky_slope_1d));
  kv.set(prefix + "leaky_2d", format_double(leaky_slope_2d));
  kv.set(prefix + "fc_activation", fc_activation == FcActivation::tanh ? "tanh" : "leaky_relu");
  kv.set(prefix + "fc_leaky", format_double(fc_leaky_slope));
  kv.set(prefix + "dropout", format_double(dropout));
  kv.set(prefix + "learning_rate", format_double(learning_rate));
  kv.set(prefix + "epochs", std::to_string(epochs));
  kv.set(prefix + "batch_size", std::to_string(batch_size));
  kv.set(prefix + "loss_target", loss_target == LossTarget::ground_truth ? "gt" : "gnss");
}

std::vector<std::string> DCNetConfig::keys(const std::string& prefix) {
  std::vector<std::string> out;
  for (const char* k : {"window", "conv1d_channels", "conv1d_kernel", "conv2d_channels", "conv2d_kernel",
                        "conv2d_dilations", "fc_widths", "leaky_1d", "leaky_2d", "fc_activation", "fc_leaky",
                        "dropout", "learning_rate", "epochs", "batch_size", "loss_target"}) {
    out.push_back(prefix + k);
  }
  return out;
}

DCNetConfig DCNetConfig::read(const KeyValueFile& kv, const std::string& prefix, DCNetConfig c) {
  c.window = static_cast<std::size_t>(kv.get_int(prefix + "window", static_cast<std::int64_t>(c.window)));
  c.conv1d_channels = parse_sizes(kv, prefix + "conv1d_channels", c.conv1d_channels);
  c.conv1d_kernel = static_cast<std::size_t>(kv.get_int(prefix + "conv1d_kernel", static_cast<std::int64_t>(c.conv1d_kernel)));
  c.conv2d_channels = parse_sizes(kv, prefix + "conv2d_channels", c.conv2d_channels);
  if (kv.contains(prefix + "conv2d_kernel")) {
    std::tie(c.conv2d_kernel_rows, c.conv2d_kernel_cols) =
        parse_pair(prefix + "conv2d_kernel", kv.get_string(prefix + "conv2d_kernel", ""));
  }
  if (kv.contains(prefix + "conv2d_dilations")) {
    const auto items = kv.get_strings(prefix + "conv2d_dilations", {});
    if (items.size() != 3) throw ConfigError("key '" + prefix + "conv2d_dilations' needs 3 values");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto [r, col] = parse_pair(prefix + "conv2d_dilations", items[i]);
      c.conv2d_dilations[i] = {r, col};
    }
  }
  c.fc_widths = parse_sizes(kv, prefix + "fc_widths", c.fc_widths);
  c.leaky_slope_1d = kv.get_double(prefix + "leaky_1d", c.leaky_slope_1d);
  c.leaky_slope_2d = kv.get_double(prefix + "leaky_2d", c.leaky_slope_2d);
  const std::string act = kv.get_string(prefix + "fc_activation", c.fc_activation == FcActivation::tanh ? "tanh" : "leaky_relu");
  if (act == "tanh") {
    c.fc_activation = FcActivation::tanh;
  } else if (act == "leaky_relu") {
    c.fc_activation = FcActivation::leaky_relu;
  } else {
    throw ConfigError("key '" + prefix + "fc_activation': expected tanh or leaky_relu");
  }
  c.fc_leaky_slope = kv.get_double(prefix + "fc_leaky", c.fc_leaky_slope);
  c.dropout = kv.get_double(prefix + "dropout", c.dropout);
  c.learning_rate = kv.get_double(prefix + "learning_rate", c.learning_rate);
  c.epochs = static_cast<std::size_t>(kv.get_int(prefix + "epochs", static_cast<std::int64_t>(c.epochs)));
  c.batch_size = static_cast<std::size_t>(kv.get_int(prefix + "batch_size", static_cast<std::int64_t>(c.batch_size)));
  const std::string target = kv.get_string(prefix + "loss_target", c.loss_target == LossTarget::ground_truth ? "gt" : "gnss");
  if (target == "gt") {
    c.loss_target = LossTarget::ground_truth;
  } else if (target == "gnss") {
    c.loss_target = LossTarget::gnss;
  } else {
    throw ConfigError("key '" + prefix + "loss_target': expected gt or gnss");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Inputs

Tensor subtraction_vector(const SampleWindow& window) {
  const std::size_t w = window.width();
  if (static_cast<std::size_t>(window.gnss.cols()) != w) throw DomainError("subtraction_vector: blocks differ in width");
  std::vector<double> v(3 * w);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t j = 0; j < w; ++j) {
      const auto ai = static_cast<Eigen::Index>(a);
      const auto ji = static_cast<Eigen::Index>(j);
      v[a * w + j] = window.dvl(ai, ji) - window.gnss(ai, ji);
    }
  }
  return Tensor({3, w}, std::move(v));
}

BatchInputs make_batch(std::span<const SampleWindow> windows, std::size_t window) {
  return make_batch_refs(refs_of(windows), window);
}

// ---------------------------------------------------------------------------
// Model

DCNetModel::DCNetModel(ErrorModelKind kind, DCNetConfig config) : kind_(kind), config_(config) {
  config_.validate();
  const auto& c = config_;
  const std::size_t k1 = c.conv1d_kernel, kh = c.conv2d_kernel_rows, kw = c.conv2d_kernel_cols;
  auto add = [&](std::string name, nn::Shape shape) { params_.push_back({std::move(name), Tensor::zeros(std::move(shape), true)}); };
  add("conv1d.0.weight", {c.conv1d_channels[0], 3, k1});
  add("conv1d.0.bias", {c.conv1d_channels[0]});
  add("conv1d.1.weight", {c.conv1d_channels[1], c.conv1d_channels[0], k1});
  add("conv1d.1.bias", {c.conv1d_channels[1]});
  std::size_t cin = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    add("conv2d." + std::to_string(i) + ".weight", {c.conv2d_channels[i], cin, kh, kw});
    add("conv2d." + std::to_string(i) + ".bias", {c.conv2d_channels[i]});
    cin = c.conv2d_channels[i];
  }
  std::size_t in = c.concat_width();
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t out = i < 3 ? c.fc_widths[i] : terms_dimension(kind);
    add("fc." + std::to_string(i) + ".weight", {out, in});
    add("fc." + std::to_string(i) + ".bias", {out});
    in = out;
  }
}

DCNetModel::DCNetModel(ErrorModelKind kind, DCNetConfig config, std::uint64_t init_seed)
    : DCNetModel(kind, config) {
  Rng rng(derive_seed(init_seed, "dcnet-init"));
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    // fan_in of a layer: weight elements per output unit.
    Tensor& w = params_[i].tensor;
    Tensor& b = params_[i + 1].tensor;
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.numel() / w.dim(0)));
    for (auto& v : w.mutable_values()) v = rng.uniform(-bound, bound);
    for (auto& v : b.mutable_values()) v = rng.uniform(-bound, bound);
  }
}

std::vector<Tensor> DCNetModel::parameter_tensors() const {
  std::vector<Tensor> out;
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::size_t DCNetModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

Tensor DCNetModel::forward(const BatchInputs& inputs, nn::Mode mode, Rng* rng) const {
  const auto& c = config_;
  if (mode == nn::Mode::train && c.dropout > 0.0 && rng == nullptr) {
    throw ContractError("DCNet forward in train mode needs a random stream for dropout");
  }
  Tensor s = nn::leaky_relu(nn::conv1d(inputs.subtraction, param(0), param(1)), c.leaky_slope_1d);
  s = nn::leaky_relu(nn::conv1d(s, param(2), param(3)), c.leaky_slope_1d);

  Tensor t = inputs.stacked;
  for (std::size_t i = 0; i < 3; ++i) {
    t = nn::leaky_relu(nn::conv2d(t, param(4 + 2 * i), param(5 + 2 * i), c.conv2d_dilations[i]), c.leaky_slope_2d);
  }

  Tensor h = nn::concat(nn::flatten(s), nn::flatten(t));
  Rng unused(0);
  for (std::size_t i = 0; i < 3; ++i) {
    h = nn::affine(h, param(10 + 2 * i), param(11 + 2 * i));
    h = c.fc_activation == FcActivation::tanh ? nn::tanh(h) : nn::leaky_relu(h, c.fc_leaky_slope);
    h = nn::dropout(h, c.dropout, mode, rng ? *rng : unused);
  }
  return nn::affine(h, param(16), param(17));
}

Tensor DCNetModel::forward(std::span<const SampleWindow> windows, nn::Mode mode, Rng* rng) const {
  return forward(make_batch(windows, config_.window), mode, rng);
}

std::vector<std::vector<double>> DCNetModel::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : params_) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void DCNetModel::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw DomainError("snapshot does not match the model");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.mutable_values();
    if (values[i].size() != dst.size()) throw DomainError("snapshot does not match " + params_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

void DCNetModel::write(std::ostream& out) const {
  KeyValueFile kv;
  kv.set("kind", to_string(kind_));
  config_.write(kv, "");
  out << "dvlcal-model 1\n" << kv.to_string() << "end\n";
  nn::write_tensors(out, params_);
}

DCNetModel DCNetModel::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "dvlcal-model 1") throw DomainError("not a dvlcal model file");
  std::string header;
  while (std::getline(in, line) && line != "end") header += line + "\n";
  if (line != "end") throw DomainError("model header is not terminated");
  const auto kv = KeyValueFile::parse(header, "model header");
  const ErrorModelKind kind = parse_error_model(kv.get_string("kind", ""));
  DCNetModel model(kind, DCNetConfig::read(kv, "", DCNetConfig::for_kind(kind)));
  const auto tensors = nn::read_tensors(in);
  if (tensors.size() != model.params_.size()) throw DomainError("model file has the wrong number of tensors");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != model.params_[i].name || tensors[i].tensor.shape() != model.params_[i].tensor.shape()) {
      throw DomainError("model tensor " + tensors[i].name + " does not match " + model.params_[i].name);
    }
    auto dst = model.params_[i].tensor.mutable_values();
    std::copy(tensors[i].tensor.values().begin(), tensors[i].tensor.values().end(), dst.begin());
  }
  return model;
}

void DCNetModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DCNetModel DCNetModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  return read(in);
}

// ---------------------------------------------------------------------------
// Loss and training

Tensor closed_loop_loss(const Tensor& raw, std::span<const SampleWindow> windows, ErrorModelKind kind,
                        LossTarget target) {
  return closed_loop_loss_refs(raw, refs_of(windows), kind, target);
}

double closed_loop_loss(std::span<const double> raw, const SampleWindow& window, ErrorModelKind kind,
                        LossTarget target) {
  const Tensor r({1, raw.size()}, std::vector<double>(raw.begin(), raw.end()));
  return closed_loop_loss_refs(r, {&window}, kind, target).item();
}

double TrainReport::best_eval_loss() const {
  return best_epoch == 0 ? std::numeric_limits<double>::quiet_NaN() : eval_loss[best_epoch - 1];
}

TrainingError::TrainingError(std::size_t epoch, TrainReport partial)
    : std::runtime_error("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
      epoch_(epoch),
      partial_(std::move(partial)) {}

namespace {

double mean_loss(const DCNetModel& model, const std::vector<SampleWindow>& windows) {
  const auto& c = model.config();
  double sum = 0.0;
  for (std::size_t start = 0; start < windows.size(); start += c.batch_size) {
    const std::size_t count = std::min(c.batch_size, windows.size() - start);
    WindowRefs refs;
    for (std::size_t i = 0; i < count; ++i) refs.push_back(&windows[start + i]);
    const Tensor raw = model.forward(make_batch_refs(refs, c.window), nn::Mode::eval);
    sum += closed_loop_loss_refs(raw.detach(), refs, model.kind(), c.loss_target).item() * static_cast<double>(count);
  }
  return sum / static_cast<double>(windows.size());
}

}  // namespace

TrainReport train(DCNetModel& model, const TrainingCorpus& corpus, std::uint64_t seed,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  const auto& c = model.config();
  c.validate();
  if (corpus.train.empty()) throw DomainError("training corpus is empty");
  const auto& eval_set = corpus.eval.empty() ? corpus.train : corpus.eval;

  nn::RmsProp optimizer(model.parameter_tensors(), nn::RmsPropSettings{c.learning_rate, 0.99, 1e-8});
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  Rng dropout_rng(derive_seed(seed, "dropout"));

  TrainReport report;
  report.seed = seed;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.next() % i]);

    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += c.batch_size) {
      const std::size_t count = std::min(c.batch_size, order.size() - start);
      WindowRefs refs;
      for (std::size_t i = 0; i < count; ++i) refs.push_back(&corpus.train[order[start + i]]);
      const Tensor raw = model.forward(make_batch_refs(refs, c.window), nn::Mode::train, &dropout_rng);
      const Tensor loss = closed_loop_loss_refs(raw, refs, model.kind(), c.loss_target);
      if (!std::isfinite(loss.item())) throw TrainingError(epoch, report);
      optimizer.zero_grad();
      nn::backward(loss);
      optimizer.step();
      sum += loss.item() * static_cast<double>(count);
    }
    const double train_loss = sum / static_cast<double>(order.size());
    const double eval_loss = mean_loss(model, eval_set);
    if (!std::isfinite(train_loss) || !std::isfinite(eval_loss)) throw TrainingError(epoch, report);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.train_loss.push_back(train_loss);
    report.eval_loss.push_back(eval_loss);
    report.wall_time_s.push_back(wall);
    if (eval_loss < best) {
      best = eval_loss;
      report.best_epoch = epoch;
      best_values = model.snapshot();
    }
    if (on_epoch) on_epoch(EpochStats{epoch, train_loss, eval_loss, wall});
  }
  if (!best_values.empty()) model.restore(best_values);
  optimizer.zero_grad();
  return report;
}

std::vector<double> estimate_raw_terms(const DCNetModel& model, const VelocitySeries& dvl, const VelocitySeries& gnss,
                                       std::size_t stride_s) {
  const auto windows = window_series(dvl, gnss, nullptr, model.config().window, stride_s);
  const Tensor raw = model.forward(windows, nn::Mode::eval);
  const std::size_t dim = terms_dimension(model.kind());
  std::vector<double> mean(dim, 0.0);
  for (std::size_t n = 0; n < windows.size(); ++n) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += raw.values()[n * dim + k];
  }
  for (std::size_t k = 0; k < dim; ++k) {
    mean[k] /= static_cast<double>(windows.size());
    if (is_scale_slot(model.kind(), k)) mean[k] = std::max(mean[k], kScaleGuard);
  }
  return mean;
}

BodyErrorTerms estimate_terms(const DCNetModel& model, const VelocitySeries& dvl, const VelocitySeries& gnss,
                              std::size_t stride_s) {
  return terms_from_vector(model.kind(), estimate_raw_terms(model, dvl, gnss, stride_s));
}

}  // namespace dvlcal
