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

#include "dvlcal/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "dvlcal/errors.hpp"
#include "dvlcal/kv_file.hpp"

namespace dvlcal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::span<const Velocity3> span_of(const VelocitySeries& s, std::size_t begin, std::size_t count) {
  return std::span<const Velocity3>(s.samples()).subspan(begin, count);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (const double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double sq = 0.0;
    for (const double x : v) sq += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace

double rmse_cmps(std::span<const Velocity3> calibrated, std::span<const Velocity3> gt) {
  if (calibrated.size() != gt.size()) throw DomainError("rmse: series are not aligned");
  if (calibrated.empty()) throw DomainError("rmse: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) sum += (calibrated[i] - gt[i]).squaredNorm();
  return 100.0 * std::sqrt(sum / static_cast<double>(gt.size()));
}

double rmse_cmps(const VelocitySeries& calibrated, const VelocitySeries& gt) {
  return rmse_cmps(std::span<const Velocity3>(calibrated.samples()), std::span<const Velocity3>(gt.samples()));
}

std::string to_string(Approach approach) {
  switch (approach) {
    case Approach::baseline: return "baseline";
    case Approach::em1: return "EM1";
    case Approach::em2: return "EM2";
    case Approach::em3: return "EM3";
    case Approach::em4: return "EM4";
    case Approach::em5: return "EM5";
  }
  return "?";
}

Approach parse_approach(const std::string& text) {
  if (text == "baseline") return Approach::baseline;
  return approach_of(parse_error_model(text));
}

Approach approach_of(ErrorModelKind kind) { return static_cast<Approach>(static_cast<int>(kind)); }

Velocity3 apply_terms(const CalibrationTerms& terms, const Velocity3& v) {
  return std::visit(Overloaded{[&](const BaselineEstimate& e) { return baseline_calibrate(v, e); },
                               [&](const BodyErrorTerms& t) { return calibrate(v, t); }},
                    terms);
}

std::vector<Velocity3> apply_terms(const CalibrationTerms& terms, std::span<const Velocity3> v) {
  std::vector<Velocity3> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(apply_terms(terms, x));
  return out;
}

std::size_t select_convergence_index(std::span<const double> rmse) {
  if (rmse.empty()) throw DomainError("no RMSE values to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rmse.size(); ++i) {
    if (rmse[i] < rmse[best]) best = i;
  }
  return best;
}

std::vector<CalibrationOutcome> calibration_phase(const SeriesTrio& calib, const Approaches& approaches,
                                                  std::span<const std::size_t> window_sizes) {
  const std::size_t n = calib.dvl.size();
  if (calib.gnss.size() != n || calib.gt.size() != n) throw DomainError("calibration series are not aligned");
  if (window_sizes.empty()) throw DomainError("no calibration window sizes");
  const std::size_t largest = *std::max_element(window_sizes.begin(), window_sizes.end());
  if (n <= largest) {
    throw DomainError("calibration series of " + std::to_string(n) + " s needs more than " + std::to_string(largest) +
                      " s");
  }

  auto run = [&](Approach approach, auto&& estimate) {
    CalibrationOutcome out;
    out.approach = approach;
    std::vector<CalibrationTerms> terms;
    for (const std::size_t w : window_sizes) {
      const CalibrationTerms t = estimate(calib.dvl.slice(0, w), calib.gnss.slice(0, w));
      const auto calibrated = apply_terms(t, span_of(calib.dvl, w, n - w));
      out.window_sizes_s.push_back(w);
      out.rmse_cmps.push_back(rmse_cmps(calibrated, span_of(calib.gt, w, n - w)));
      terms.push_back(t);
    }
    const std::size_t best = select_convergence_index(out.rmse_cmps);
    out.t_conv_s = out.window_sizes_s[best];
    out.chosen_rmse_cmps = out.rmse_cmps[best];
    out.terms = terms[best];
    return out;
  };

  std::vector<CalibrationOutcome> outcomes;
  if (approaches.baseline) {
    outcomes.push_back(run(Approach::baseline, [](const VelocitySeries& dvl, const VelocitySeries& gnss) {
      return CalibrationTerms(scale_factor_average(dvl, gnss));
    }));
  }
  for (const DCNetModel* model : approaches.models) {
    outcomes.push_back(run(approach_of(model->kind()), [model](const VelocitySeries& dvl, const VelocitySeries& gnss) {
      return CalibrationTerms(estimate_terms(*model, dvl, gnss));
    }));
  }
  return outcomes;
}

double improvement_pct(double baseline_rmse, double approach_rmse) {
  return 100.0 * (baseline_rmse - approach_rmse) / baseline_rmse;
}

std::vector<TestResult> evaluate_test(std::span<const NamedTrajectory> tests,
                                      std::span<const CalibrationOutcome> outcomes) {
  const auto baseline = std::find_if(outcomes.begin(), outcomes.end(),
                                     [](const CalibrationOutcome& o) { return o.approach == Approach::baseline; });
  std::vector<TestResult> rows;
  for (const auto& test : tests) {
    const auto gt = std::span<const Velocity3>(test.gt.samples());
    const auto dvl = std::span<const Velocity3>(test.dvl.samples());
    const double base = baseline == outcomes.end() ? kNaN : rmse_cmps(apply_terms(baseline->terms, dvl), gt);
    for (const auto& outcome : outcomes) {
      TestResult r;
      r.trajectory = test.name;
      r.approach = outcome.approach;
      r.rmse_cmps = outcome.approach == Approach::baseline ? base : rmse_cmps(apply_terms(outcome.terms, dvl), gt);
      r.improvement_pct = improvement_pct(base, r.rmse_cmps);
      r.t_conv_s = outcome.t_conv_s;
      rows.push_back(r);
    }
  }
  return rows;
}

Scenario dvl1_preset() { return {"DVL1", BeamErrorTerms{0.01, 0.007, 0.02}}; }
Scenario dvl2_preset() { return {"DVL2", BeamErrorTerms{0.01, 0.007, 0.0002}}; }

IterationResult evaluate_once(const Scenario& scenario, const EvaluationSetup& setup, const Approaches& approaches,
                              std::uint64_t seed) {
  NoisingConfig cfg;
  cfg.beam_terms = scenario.beam_terms;
  cfg.gnss_noise_std_mps = setup.gnss_noise_std_mps;
  cfg.geometry = setup.geometry;
  cfg.rotation = setup.rotation;
  cfg.seed = derive_seed(seed, "calibration");
  const auto calib = run_noising_pipeline(setup.calibration_gt, cfg);

  IterationResult result;
  result.outcomes = calibration_phase({calib.dvl, calib.gnss, setup.calibration_gt}, approaches, setup.window_sizes);

  std::vector<NamedTrajectory> tests;
  for (std::size_t k = 0; k < setup.test_gt.size(); ++k) {
    cfg.seed = derive_seed(seed, "test", k);
    auto noised = run_noising_pipeline(setup.test_gt[k].second, cfg);
    tests.push_back({setup.test_gt[k].first, std::move(noised.dvl), setup.test_gt[k].second});
  }
  result.tests = evaluate_test(tests, result.outcomes);
  return result;
}

CalibrationReport monte_carlo(std::span<const Scenario> scenarios, const EvaluationSetup& setup,
                              const Approaches& approaches, std::size_t iterations, std::uint64_t seed,
                              unsigned threads) {
  if (iterations == 0) throw DomainError("Monte Carlo needs at least one iteration");
  CalibrationReport report;
  for (const auto& scenario : scenarios) {
    std::vector<std::optional<IterationResult>> slots(iterations);
    auto run = [&](std::size_t i) {
      try {
        slots[i] = evaluate_once(scenario, setup, approaches, derive_seed(seed, scenario.name, i));
      } catch (const std::exception&) {
        slots[i].reset();
      }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(iterations)));
    if (workers == 1) {
      for (std::size_t i = 0; i < iterations; ++i) run(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < iterations; i = next++) run(i);
        });
      }
      for (auto& th : pool) th.join();
    }

    ScenarioRuns runs;
    runs.scenario = scenario;
    for (auto& slot : slots) {
      if (slot) {
        runs.iterations.push_back(std::move(*slot));
      } else {
        ++runs.failures;
      }
    }
    if (runs.iterations.empty() || static_cast<double>(runs.failures) > 0.05 * static_cast<double>(iterations)) {
      throw EvaluationError(scenario.name + ": " + std::to_string(runs.failures) + " of " +
                            std::to_string(iterations) + " Monte Carlo iterations failed");
    }

    const IterationResult& rep = runs.iterations.front();
    const auto base_it = std::find_if(rep.outcomes.begin(), rep.outcomes.end(),
                                      [](const CalibrationOutcome& o) { return o.approach == Approach::baseline; });
    const double base_chosen = base_it == rep.outcomes.end() ? kNaN : base_it->chosen_rmse_cmps;
    for (std::size_t a = 0; a < rep.outcomes.size(); ++a) {
      std::vector<double> samples;
      for (const auto& it : runs.iterations) samples.push_back(it.outcomes[a].chosen_rmse_cmps);
      const auto ms = mean_std(samples);
      const auto& o = rep.outcomes[a];
      report.rows.push_back({scenario.name, to_string(o.approach), "calibration", o.chosen_rmse_cmps,
                             improvement_pct(base_chosen, o.chosen_rmse_cmps), o.t_conv_s, ms.mean, ms.std});
    }
    for (std::size_t r = 0; r < rep.tests.size(); ++r) {
      std::vector<double> samples;
      for (const auto& it : runs.iterations) samples.push_back(it.tests[r].rmse_cmps);
      const auto ms = mean_std(samples);
      const auto& t = rep.tests[r];
      report.rows.push_back({scenario.name, to_string(t.approach), t.trajectory, t.rmse_cmps, t.improvement_pct,
                             t.t_conv_s, ms.mean, ms.std});
    }
    report.runs.push_back(std::move(runs));
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kReportCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.approach << ',' << r.trajectory << ',' << format_double(r.rmse_cmps) << ','
        << format_double(r.improvement_pct) << ',' << r.t_conv_s << ',' << format_double(r.mc_mean) << ','
        << format_double(r.mc_std) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw IngestionError(path.string(), 1, "unexpected header");
  std::vector<ReportRow> rows;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      // from_chars does not accept a leading '-' on "nan"
      if (s == "-nan") return kNaN;
      throw IngestionError(path.string(), line_no, "malformed number '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 8) throw IngestionError(path.string(), line_no, "expected 8 fields");
    rows.push_back({f[0], f[1], f[2], number(f[3]), number(f[4]), static_cast<std::size_t>(number(f[5])),
                    number(f[6]), number(f[7])});
  }
  return rows;
}

std::string render_report_table(std::span<const ReportRow> rows) {
  std::vector<std::string> scenarios, approaches, trajectories;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : rows) {
    remember(scenarios, r.scenario);
    remember(approaches, r.approach);
    if (r.trajectory != "calibration") remember(trajectories, r.trajectory);
  }
  auto find = [&](const std::string& s, const std::string& a, const std::string& t) -> const ReportRow* {
    for (const auto& r : rows) {
      if (r.scenario == s && r.approach == a && r.trajectory == t) return &r;
    }
    return nullptr;
  };
  auto fixed2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream out;
  constexpr int kCell = 15;
  out << "Calibration phase: RMSE [cm/s] (Monte Carlo mean), (T_conv [s])\n";
  out << std::left << std::setw(8) << "";
  for (const auto& a : approaches) out << std::setw(kCell) << a;
  out << '\n';
  for (const auto& s : scenarios) {
    out << std::setw(8) << s;
    for (const auto& a : approaches) {
      const ReportRow* r = find(s, a, "calibration");
      out << std::setw(kCell) << (r ? fixed2(r->mc_mean) + ",(" + std::to_string(r->t_conv_s) + ")" : "-");
    }
    out << '\n';
  }

  out << "\nTest trajectories: RMSE [cm/s] (Monte Carlo mean) and improvement [%] over the baseline\n";
  out << std::setw(8) << "" << std::setw(18) << "trajectory";
  for (const auto& a : approaches) out << std::setw(kCell) << a;
  out << '\n';
  for (const auto& s : scenarios) {
    for (const auto& t : trajectories) {
      out << std::setw(8) << s << std::setw(18) << t;
      const ReportRow* base = find(s, "baseline", t);
      for (const auto& a : approaches) {
        const ReportRow* r = find(s, a, t);
        std::string cell = r ? fixed2(r->mc_mean) : "-";
        if (r && base && a != "baseline") {
          const double imp = improvement_pct(base->mc_mean, r->mc_mean);
          if (imp >= 1.0) {
            cell += " (" + std::to_string(static_cast<long>(std::lround(imp))) + ")";
          } else if (imp > 0.0) {
            cell += " (<1)";
          }
        }
        out << std::setw(kCell) << cell;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace dvlcal
