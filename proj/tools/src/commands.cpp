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

#include "dvlcal/workbench/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "dvlcal/errors.hpp"

namespace fs = std::filesystem;

namespace dvlcal::workbench {

namespace {

VelocitySeries filtered(const TrajectoryProfile& profile, std::uint64_t seed) {
  TrajectoryProfile padded = profile;
  padded.duration_s += static_cast<double>(kDefaultMovingAverage - 1);
  Rng rng(seed);
  return moving_average(generate_trajectory(padded, rng));
}

std::string lower(const std::string& s) {
  std::string out;
  for (const char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

void emit(const fs::path& path, const VelocitySeries& series, std::ostream& log) {
  export_csv(path, series);
  log << "wrote " << path.string() << " (" << series.size() << " samples)\n";
}

void write_loss_table(const fs::path& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "epoch,train_loss,eval_loss\n";
  for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
    out << (i + 1) << ',' << format_double(report.train_loss[i]) << ','
        << format_double(i < report.eval_loss.size() ? report.eval_loss[i] : std::nan("")) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

GroundTruthSet generate_ground_truth(const WorkbenchConfig& config) {
  GroundTruthSet gt;
  const auto& cal = config.calibration;
  const auto cal_n = static_cast<std::size_t>(std::llround(cal.duration_s));
  const auto run = filtered(cal.profile(0, cal.duration_s + config.calibration_tail_s,
                                        derive_seed(config.seed, "calibration-legs")),
                            derive_seed(config.seed, "calibration-trajectory"));
  gt.calibration = run.slice(0, cal_n);
  if (run.size() > cal_n) gt.calibration_tail = run.slice(cal_n, run.size() - cal_n);

  for (std::size_t k = 0; k < config.test.count; ++k) {
    gt.tests.push_back(filtered(config.test.profile(k, config.test.duration_s, derive_seed(config.seed, "test-legs", k)),
                                derive_seed(config.seed, "test-trajectory", k)));
  }
  for (std::size_t k = 0; k < config.training.count; ++k) {
    gt.training.push_back(
        filtered(config.training.profile(k, config.training.duration_s, derive_seed(config.seed, "training-legs", k)),
                 derive_seed(config.seed, "training-trajectory", k)));
  }
  return gt;
}

std::vector<std::string> test_names(const WorkbenchConfig& config) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < config.test.count; ++k) names.push_back("test_" + std::to_string(k + 1));
  if (config.calibration_tail_s > 0.0) names.push_back("calibration_tail");
  return names;
}

EvaluationSetup make_setup(const WorkbenchConfig& config, const GroundTruthSet& gt) {
  EvaluationSetup setup;
  setup.calibration_gt = gt.calibration;
  const auto names = test_names(config);
  for (std::size_t k = 0; k < gt.tests.size(); ++k) setup.test_gt.emplace_back(names[k], gt.tests[k]);
  if (!gt.calibration_tail.empty()) setup.test_gt.emplace_back("calibration_tail", gt.calibration_tail);
  setup.gnss_noise_std_mps = config.gnss_noise_std_mps;
  setup.geometry = config.geometry();
  setup.rotation = config.rotation();
  setup.window_sizes = config.window_sizes_s;
  return setup;
}

std::uint64_t monte_carlo_seed(const WorkbenchConfig& config) { return derive_seed(config.seed, "monte-carlo"); }

TrainingCorpus load_corpus(const WorkbenchConfig& config, const fs::path& manifest_path) {
  const auto manifest = load_manifest(manifest_path);
  if (manifest.trajectories.empty()) throw ConfigError(manifest_path.string() + ": no trajectories listed");
  if (manifest.window_s != config.window_s) {
    throw ConfigError(manifest_path.string() + ": window_s does not match corpus.window_s of the config");
  }
  std::vector<VelocitySeries> series;
  for (const auto& path : manifest.trajectories) {
    series.push_back(ingest_csv(path, Frame::body));
  }
  CorpusOptions options;
  options.window_s = manifest.window_s;
  options.stride_s = manifest.stride_s;
  options.split_ratio = manifest.split_ratio;
  options.gnss_noise_std_mps = manifest.gnss_noise_std_mps;
  options.geometry = config.geometry();
  options.rotation = config.rotation();
  options.seed = manifest.seed;
  options.threads = config.threads;
  auto corpus = build_training_corpus(series, manifest.grid, options);
  if (corpus.train.empty()) throw ConfigError(manifest_path.string() + ": corpus has no training windows");
  return corpus;
}

DCNetModel make_model(const WorkbenchConfig& config, ErrorModelKind kind) {
  return DCNetModel(kind, config.dcnet.at(kind), derive_seed(config.seed, "init", static_cast<std::uint64_t>(kind)));
}

std::uint64_t training_seed(const WorkbenchConfig& config, ErrorModelKind kind) {
  return derive_seed(config.seed, "train", static_cast<std::uint64_t>(kind));
}

fs::path model_path(const fs::path& models_dir, ErrorModelKind kind) {
  return models_dir / (lower(to_string(kind)) + ".model");
}

void cmd_simulate(const WorkbenchConfig& config, const fs::path& out, std::ostream& log) {
  config.validate();
  const auto gt = generate_ground_truth(config);
  const auto setup = make_setup(config, gt);

  make_dirs(out / "gt");
  emit(out / "gt" / "calibration.csv", gt.calibration, log);
  for (const auto& [name, series] : setup.test_gt) emit(out / "gt" / (name + ".csv"), series, log);
  DatasetManifest manifest;
  for (std::size_t k = 0; k < gt.training.size(); ++k) {
    const fs::path rel = fs::path("gt") / ("train_" + std::to_string(k + 1) + ".csv");
    emit(out / rel, gt.training[k], log);
    manifest.trajectories.push_back(out / rel);
  }

  // Noised copies match iteration 0 of the evaluate command's Monte Carlo run.
  for (const auto& scenario : config.scenarios) {
    const fs::path dir = out / "noised" / lower(scenario.name);
    make_dirs(dir);
    const auto iteration_seed = derive_seed(monte_carlo_seed(config), scenario.name, 0);
    NoisingConfig noising;
    noising.beam_terms = scenario.beam_terms;
    noising.gnss_noise_std_mps = config.gnss_noise_std_mps;
    noising.geometry = config.geometry();
    noising.rotation = config.rotation();
    noising.seed = derive_seed(iteration_seed, "calibration");
    auto noised = run_noising_pipeline(gt.calibration, noising);
    emit(dir / "calibration_dvl.csv", noised.dvl, log);
    emit(dir / "calibration_gnss.csv", noised.gnss, log);
    for (std::size_t k = 0; k < setup.test_gt.size(); ++k) {
      noising.seed = derive_seed(iteration_seed, "test", k);
      noised = run_noising_pipeline(setup.test_gt[k].second, noising);
      emit(dir / (setup.test_gt[k].first + "_dvl.csv"), noised.dvl, log);
      emit(dir / (setup.test_gt[k].first + "_gnss.csv"), noised.gnss, log);
    }
  }

  manifest.grid = config.grid;
  manifest.seed = derive_seed(config.seed, "corpus");
  manifest.window_s = config.window_s;
  manifest.stride_s = config.stride_s;
  manifest.split_ratio = config.split_ratio;
  manifest.gnss_noise_std_mps = config.gnss_noise_std_mps;
  save_manifest(out / "manifest.txt", manifest);
  log << "wrote " << (out / "manifest.txt").string() << '\n';
  write_text(out / "workbench.cfg", config.to_kv().to_string());
  log << "wrote " << (out / "workbench.cfg").string() << '\n';
}

TrainReport cmd_train(const WorkbenchConfig& config, ErrorModelKind kind, const fs::path& manifest,
                      const fs::path& out, std::ostream& log) {
  config.validate();
  if (!fs::exists(manifest)) throw ConfigError("corpus manifest not found: " + manifest.string());
  const auto corpus = load_corpus(config, manifest);
  auto model = make_model(config, kind);
  log << to_string(kind) << ": " << corpus.train.size() << " training and " << corpus.eval.size()
      << " evaluation windows, " << model.parameter_count() << " parameters\n";

  const fs::path models = out / "models";
  make_dirs(models);
  const fs::path table = models / (lower(to_string(kind)) + "_train.csv");
  TrainReport report;
  try {
    report = train(model, corpus, training_seed(config, kind), [&](const EpochStats& s) {
      char line[128];
      std::snprintf(line, sizeof line, "epoch %zu train %.6g eval %.6g (%.1f s)\n", s.epoch, s.train_loss,
                    s.eval_loss, s.wall_time_s);
      log << line << std::flush;
    });
  } catch (const TrainingError& e) {
    write_loss_table(table, e.partial_report());
    log << "partial loss table kept at " << table.string() << '\n';
    throw;
  }
  write_loss_table(table, report);
  model.save(model_path(models, kind));
  log << "wrote " << model_path(models, kind).string() << " (best epoch " << report.best_epoch << ")\n";
  log << "wrote " << table.string() << '\n';
  return report;
}

CalibrationReport cmd_evaluate(const WorkbenchConfig& config, const fs::path& data_dir, const fs::path& models_dir,
                               const fs::path& out, bool baseline_only, std::ostream& log) {
  config.validate();
  EvaluationSetup setup;
  setup.calibration_gt = ingest_csv(data_dir / "gt" / "calibration.csv", Frame::body);
  for (const auto& name : test_names(config)) {
    setup.test_gt.emplace_back(name, ingest_csv(data_dir / "gt" / (name + ".csv"), Frame::body));
  }
  setup.gnss_noise_std_mps = config.gnss_noise_std_mps;
  setup.geometry = config.geometry();
  setup.rotation = config.rotation();
  setup.window_sizes = config.window_sizes_s;

  std::vector<DCNetModel> models;
  if (!baseline_only) {
    for (const auto kind : config.models) {
      const auto path = model_path(models_dir, kind);
      if (!fs::exists(path)) throw ConfigError("missing model for " + to_string(kind) + ": " + path.string());
      models.push_back(DCNetModel::load(path));
      if (models.back().kind() != kind) throw ConfigError(path.string() + " holds a " + to_string(models.back().kind()) + " model");
    }
  }
  Approaches approaches;
  for (const auto& m : models) approaches.models.push_back(&m);

  const auto start = std::chrono::steady_clock::now();
  auto report = monte_carlo(config.scenarios, setup, approaches, config.mc_iterations, monte_carlo_seed(config),
                            config.threads);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& runs : report.runs) {
    log << runs.scenario.name << ": " << runs.iterations.size() << " iterations, " << runs.failures << " failed\n";
  }

  make_dirs(out);
  write_report_csv(out / "report.csv", report.rows);
  const auto table = render_report_table(report.rows);
  write_text(out / "report.txt", table);
  log << table;
  char line[96];
  std::snprintf(line, sizeof line, "evaluation took %.1f s\n", elapsed);
  log << line << "wrote " << (out / "report.csv").string() << "\nwrote " << (out / "report.txt").string() << '\n';
  return report;
}

std::string cmd_report(const fs::path& report_csv) { return render_report_table(read_report_csv(report_csv)); }

}  // namespace dvlcal::workbench
