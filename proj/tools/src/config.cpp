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

#include "dvlcal/workbench/config.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "dvlcal/errors.hpp"

namespace dvlcal::workbench {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string lower_kind(ErrorModelKind kind) {
  return "em" + std::to_string(static_cast<int>(kind));
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::size_t get_size(const KeyValueFile& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("key '" + key + "' must not be negative");
  return static_cast<std::size_t>(v);
}

const std::vector<std::string> kProfileFields{"kind", "count", "duration_s", "speed_mps", "leg_s", "leg_step_s",
                                              "jitter_mps"};
const std::vector<std::string> kScenarioFields{"scale", "bias_mps", "noise_std_mps"};

ProfileSpec read_profile(const KeyValueFile& kv, const std::string& prefix, ProfileSpec p) {
  if (kv.contains(prefix + "kind")) p.kind = parse_trajectory_kind(kv.get_string(prefix + "kind", ""));
  p.count = get_size(kv, prefix + "count", p.count);
  p.duration_s = kv.get_double(prefix + "duration_s", p.duration_s);
  p.speed_mps = kv.get_double(prefix + "speed_mps", p.speed_mps);
  p.leg_s = kv.get_double(prefix + "leg_s", p.leg_s);
  p.leg_step_s = kv.get_double(prefix + "leg_step_s", p.leg_step_s);
  p.jitter_mps = kv.get_double(prefix + "jitter_mps", p.jitter_mps);
  return p;
}

void write_profile(KeyValueFile& kv, const std::string& prefix, const ProfileSpec& p) {
  kv.set(prefix + "kind", to_string(p.kind));
  kv.set(prefix + "count", std::to_string(p.count));
  kv.set(prefix + "duration_s", format_double(p.duration_s));
  kv.set(prefix + "speed_mps", format_double(p.speed_mps));
  kv.set(prefix + "leg_s", format_double(p.leg_s));
  kv.set(prefix + "leg_step_s", format_double(p.leg_step_s));
  kv.set(prefix + "jitter_mps", format_double(p.jitter_mps));
}

std::string scenario_prefix(const std::string& name) {
  std::string lower;
  for (const char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return "scenario." + lower + ".";
}

}  // namespace

TrajectoryProfile ProfileSpec::profile(std::size_t index, double duration, std::uint64_t seed) const {
  switch (kind) {
    case TrajectoryKind::constant_velocity:
      return TrajectoryProfile::constant_velocity(duration, speed_mps, jitter_mps);
    case TrajectoryKind::lawnmower:
      return TrajectoryProfile::lawnmower(duration, speed_mps, leg_s + leg_step_s * static_cast<double>(index),
                                          jitter_mps);
    case TrajectoryKind::mixed_legs:
      return TrajectoryProfile::mixed_legs(duration, speed_mps, jitter_mps, seed);
  }
  throw ConfigError("unknown trajectory kind");
}

WorkbenchConfig::WorkbenchConfig() {
  for (const auto kind : kAllErrorModels) dcnet.emplace(kind, DCNetConfig::for_kind(kind));
}

BeamGeometry WorkbenchConfig::geometry() const { return BeamGeometry(alpha_deg * kDegToRad); }

FrameRotation WorkbenchConfig::rotation() const {
  return FrameRotation::from_euler(rotation_euler_deg[0] * kDegToRad, rotation_euler_deg[1] * kDegToRad,
                                   rotation_euler_deg[2] * kDegToRad);
}

void WorkbenchConfig::validate() const {
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (!(alpha_deg > 0.0 && alpha_deg < 90.0)) throw ConfigError("geometry.alpha_deg must be in (0, 90)");
  (void)geometry();
  (void)rotation();

  auto check_profile = [](const std::string& name, const ProfileSpec& p, double extra_s) {
    if (p.count == 0) throw ConfigError(name + ".count must be at least 1");
    if (p.kind == TrajectoryKind::lawnmower && !(p.leg_s > 0.0 && p.leg_step_s >= 0.0)) {
      throw ConfigError(name + ": lawnmower legs need leg_s > 0 and leg_step_s >= 0");
    }
    try {
      for (std::size_t i = 0; i < p.count; ++i) p.profile(i, p.duration_s + extra_s, 0).validate();
    } catch (const DomainError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  };
  check_profile("calibration", calibration, calibration_tail_s);
  if (calibration.count != 1) throw ConfigError("calibration.count must be 1");
  if (calibration_tail_s < 0.0) throw ConfigError("calibration.tail_s must not be negative");
  check_profile("test", test, 0.0);
  check_profile("training", training, 0.0);

  if (grid.size() == 0) throw ConfigError("grid needs at least one scale, bias and noise value");
  for (const auto& terms : grid.combinations()) terms.validate();
  if (window_s < 2) throw ConfigError("corpus.window_s must be at least 2");
  if (stride_s == 0) throw ConfigError("corpus.stride_s must be at least 1");
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw ConfigError("corpus.split must be in (0, 1]");
  if (!(gnss_noise_std_mps >= 0.0) || !std::isfinite(gnss_noise_std_mps)) {
    throw ConfigError("gnss.noise_std_mps must be finite and non-negative");
  }
  if (scenarios.empty()) throw ConfigError("at least one scenario is required");
  for (const auto& s : scenarios) s.beam_terms.validate();

  for (const auto& [kind, cfg] : dcnet) {
    try {
      cfg.validate();
    } catch (const DomainError& e) {
      throw ConfigError("dcnet." + lower_kind(kind) + ": " + e.what());
    }
    if (cfg.window != window_s) throw ConfigError("dcnet." + lower_kind(kind) + ".window must equal corpus.window_s");
  }

  if (window_sizes_s.empty()) throw ConfigError("evaluation.windows_s must not be empty");
  for (const auto w : window_sizes_s) {
    if (w < window_s) throw ConfigError("evaluation.windows_s entries must be at least corpus.window_s");
    if (static_cast<double>(w) + 1.0 > calibration.duration_s) {
      throw ConfigError("evaluation.windows_s entries must be shorter than calibration.duration_s");
    }
  }
  if (mc_iterations == 0) throw ConfigError("evaluation.mc_iterations must be at least 1");
}

std::vector<std::string> WorkbenchConfig::keys() {
  std::vector<std::string> out{"seed",
                               "threads",
                               "geometry.alpha_deg",
                               "rotation.euler_deg",
                               "calibration.tail_s",
                               "grid.scales",
                               "grid.biases_mps",
                               "grid.noise_stds_mps",
                               "corpus.window_s",
                               "corpus.stride_s",
                               "corpus.split",
                               "gnss.noise_std_mps",
                               "scenarios",
                               "evaluation.windows_s",
                               "evaluation.mc_iterations",
                               "evaluation.models"};
  for (const char* family : {"calibration.", "test.", "training."}) {
    for (const auto& f : kProfileFields) out.push_back(family + f);
  }
  for (const char* name : {"dvl1", "dvl2"}) {
    for (const auto& f : kScenarioFields) out.push_back(std::string("scenario.") + name + "." + f);
  }
  for (const auto& k : DCNetConfig::keys("dcnet.")) out.push_back(k);
  for (const auto kind : kAllErrorModels) {
    for (const auto& k : DCNetConfig::keys("dcnet." + lower_kind(kind) + ".")) out.push_back(k);
  }
  return out;
}

WorkbenchConfig WorkbenchConfig::from_kv(const KeyValueFile& kv) {
  const auto allowed = keys();
  kv.reject_unknown(std::set<std::string>(allowed.begin(), allowed.end()));

  WorkbenchConfig c;
  c.seed = kv.get_u64("seed", c.seed);
  const auto threads = kv.get_int("threads", c.threads);
  if (threads < 1) throw ConfigError("threads must be at least 1");
  c.threads = static_cast<unsigned>(threads);

  c.alpha_deg = kv.get_double("geometry.alpha_deg", c.alpha_deg);
  const auto euler = kv.get_doubles("rotation.euler_deg", {c.rotation_euler_deg.begin(), c.rotation_euler_deg.end()});
  if (euler.size() != 3) throw ConfigError("rotation.euler_deg needs roll, pitch, yaw");
  std::copy(euler.begin(), euler.end(), c.rotation_euler_deg.begin());

  c.calibration = read_profile(kv, "calibration.", c.calibration);
  c.calibration_tail_s = kv.get_double("calibration.tail_s", c.calibration_tail_s);
  c.test = read_profile(kv, "test.", c.test);
  c.training = read_profile(kv, "training.", c.training);

  c.grid.scales = kv.get_doubles("grid.scales", c.grid.scales);
  c.grid.biases_mps = kv.get_doubles("grid.biases_mps", c.grid.biases_mps);
  c.grid.noise_stds_mps = kv.get_doubles("grid.noise_stds_mps", c.grid.noise_stds_mps);
  c.window_s = get_size(kv, "corpus.window_s", c.window_s);
  c.stride_s = get_size(kv, "corpus.stride_s", c.stride_s);
  c.split_ratio = kv.get_double("corpus.split", c.split_ratio);
  c.gnss_noise_std_mps = kv.get_double("gnss.noise_std_mps", c.gnss_noise_std_mps);

  std::vector<std::string> names;
  for (const auto& s : c.scenarios) names.push_back(s.name);
  names = kv.get_strings("scenarios", names);
  std::vector<Scenario> scenarios;
  for (const auto& name : names) {
    Scenario s;
    if (name == "DVL1") {
      s = dvl1_preset();
    } else if (name == "DVL2") {
      s = dvl2_preset();
    } else {
      throw ConfigError("unknown scenario '" + name + "' (expected DVL1 or DVL2)");
    }
    const auto prefix = scenario_prefix(name);
    s.beam_terms.scale = kv.get_double(prefix + "scale", s.beam_terms.scale);
    s.beam_terms.bias_mps = kv.get_double(prefix + "bias_mps", s.beam_terms.bias_mps);
    s.beam_terms.noise_std_mps = kv.get_double(prefix + "noise_std_mps", s.beam_terms.noise_std_mps);
    scenarios.push_back(s);
  }
  c.scenarios = scenarios;

  for (const auto kind : kAllErrorModels) {
    auto cfg = DCNetConfig::read(kv, "dcnet.", DCNetConfig::for_kind(kind));
    if (!kv.contains("dcnet.window") && !kv.contains("dcnet." + lower_kind(kind) + ".window")) cfg.window = c.window_s;
    c.dcnet[kind] = DCNetConfig::read(kv, "dcnet." + lower_kind(kind) + ".", cfg);
  }

  std::vector<double> windows;
  for (const auto w : c.window_sizes_s) windows.push_back(static_cast<double>(w));
  c.window_sizes_s.clear();
  for (const double w : kv.get_doubles("evaluation.windows_s", windows)) {
    if (!(w > 0.0) || w != std::floor(w)) throw ConfigError("evaluation.windows_s must hold positive integers");
    c.window_sizes_s.push_back(static_cast<std::size_t>(w));
  }
  c.mc_iterations = get_size(kv, "evaluation.mc_iterations", c.mc_iterations);
  if (kv.contains("evaluation.models")) {
    c.models.clear();
    for (const auto& m : kv.get_strings("evaluation.models", {})) c.models.push_back(parse_error_model(m));
  }

  c.validate();
  return c;
}

WorkbenchConfig WorkbenchConfig::load(const std::filesystem::path& path) {
  return from_kv(KeyValueFile::load(path));
}

KeyValueFile WorkbenchConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("seed", std::to_string(seed));
  kv.set("threads", std::to_string(threads));
  kv.set("geometry.alpha_deg", format_double(alpha_deg));
  kv.set("rotation.euler_deg", join(std::vector<double>(rotation_euler_deg.begin(), rotation_euler_deg.end())));
  write_profile(kv, "calibration.", calibration);
  kv.set("calibration.tail_s", format_double(calibration_tail_s));
  write_profile(kv, "test.", test);
  write_profile(kv, "training.", training);
  kv.set("grid.scales", join(grid.scales));
  kv.set("grid.biases_mps", join(grid.biases_mps));
  kv.set("grid.noise_stds_mps", join(grid.noise_stds_mps));
  kv.set("corpus.window_s", std::to_string(window_s));
  kv.set("corpus.stride_s", std::to_string(stride_s));
  kv.set("corpus.split", format_double(split_ratio));
  kv.set("gnss.noise_std_mps", format_double(gnss_noise_std_mps));
  std::string names;
  for (const auto& s : scenarios) {
    names += (names.empty() ? "" : ",") + s.name;
    const auto prefix = scenario_prefix(s.name);
    kv.set(prefix + "scale", format_double(s.beam_terms.scale));
    kv.set(prefix + "bias_mps", format_double(s.beam_terms.bias_mps));
    kv.set(prefix + "noise_std_mps", format_double(s.beam_terms.noise_std_mps));
  }
  kv.set("scenarios", names);
  for (const auto& [kind, cfg] : dcnet) cfg.write(kv, "dcnet." + lower_kind(kind) + ".");
  kv.set("evaluation.windows_s", join(window_sizes_s));
  kv.set("evaluation.mc_iterations", std::to_string(mc_iterations));
  std::string models_list;
  for (const auto kind : models) models_list += (models_list.empty() ? "" : ",") + to_string(kind);
  kv.set("evaluation.models", models_list);
  return kv;
}

}  // namespace dvlcal::workbench
