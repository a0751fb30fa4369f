// shuttleopt: command-line front end to the transport simulator.
//
//   shuttleopt basesolve      --config cfg.json --out DIR
//   shuttleopt optimize       --config cfg.json --out DIR [--seed N] [--shots N|exact]
//   shuttleopt scan           --config cfg.json --state best_state.json --out DIR
//   shuttleopt diagnose       --config cfg.json --state best_state.json --out DIR
//   shuttleopt decimate-study --config cfg.json --out DIR [--factor N]

#include "shuttle/config.hpp"
#include "shuttle/errors.hpp"
#include "shuttle/experiment.hpp"
#include "shuttle/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace shuttle;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kPhysics = 3, kIo = 4 };

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string shots;
  bool dump_waveform = false;
  bool dump_trajectory = false;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.sideband.seed = *c.seed;
  if (!c.shots.empty()) {
    if (c.shots == "exact") {
      cfg.sideband.shots = 0;
    } else {
      try {
        std::size_t used = 0;
        cfg.sideband.shots = std::stoi(c.shots, &used);
        if (used != c.shots.size() || cfg.sideband.shots < 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("--shots: expected a positive integer or 'exact', got '" + c.shots + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

std::string offset_tag(std::size_t i) { return "h" + std::to_string(i); }

void dump_runs(const Common& c, const TransportExperiment& exp, const OptState& state, const fs::path& dir) {
  if (!c.dump_waveform && !c.dump_trajectory) return;
  const auto offsets = exp.nominal_offsets();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const OffsetRun run = exp.run_offset(state, offsets[i]);
    if (c.dump_waveform) {
      io::write_waveform(dir / ("waveform_commanded_" + offset_tag(i) + ".tsv"), run.commanded, "commanded");
      io::write_waveform(dir / ("waveform_delivered_" + offset_tag(i) + ".tsv"), run.delivered, "delivered");
    }
    if (c.dump_trajectory)
      io::write_trajectory(dir / ("trajectory_" + offset_tag(i) + ".tsv"), exp.model(), run.delivered,
                           run.trace, exp.config().analog_spec().oversample);
  }
}

int cmd_basesolve(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const fs::path dir = c.out_dir;
  io::ensure_directory(dir);
  const TransportExperiment exp(cfg);
  io::write_base_solutions(dir / "base_solutions.tsv", exp.base());
  io::write_manifest(dir, "basesolve", cfg);
  std::printf("%lld base solutions at %.4g MHz written to %s\n", static_cast<long long>(exp.base().size()),
              exp.base().frequency / units::MHz, (dir / "base_solutions.tsv").c_str());
  return kOk;
}

void write_schedule(const fs::path& dir, const ScheduleResult& s) {
  io::write_state(dir / "stage1_state.json", s.stages.front().best, s.stages.front().best_value);
  io::write_state(dir / "best_state.json", s.best(), s.stages.back().best_value);
}

int cmd_optimize(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const fs::path dir = c.out_dir;
  io::ensure_directory(dir);
  io::write_manifest(dir, "optimize", cfg);
  const TransportExperiment exp(cfg);
  const OptState x0 = cfg.initial_state();
  const fs::path log_path = dir / "history.tsv";
  fs::remove(log_path);
  io::HistoryLog log(log_path, x0.n_f(), x0.n_t(), cfg.transport.offset_count);
  const ScheduleResult s = two_stage_schedule(exp, x0, [&](const OptRecord& r) { log.append(r); });
  write_schedule(dir, s);
  const OptRecord final_eval = evaluate_state(exp, s.best(), 2);
  std::printf("mode %s, %zu evaluations\n", to_string(cfg.optimizer.mode).c_str(), s.history.size());
  for (std::size_t i = 0; i < s.stages.size(); ++i)
    std::printf("stage %zu best loss %.6g\n", i + 1, s.stages[i].best_value);
  std::printf("final worst-offset excitation %.6g quanta\n", worst_excitation(final_eval));
  dump_runs(c, exp, s.best(), dir);
  return kOk;
}

int cmd_scan(const Common& c, const std::string& state_path, int stage) {
  const ExperimentConfig cfg = load(c);
  const OptState state = io::read_state(state_path);
  const fs::path dir = c.out_dir;
  io::ensure_directory(dir);
  io::write_manifest(dir, "scan", cfg);
  const TransportExperiment exp(cfg);
  const auto results = exp.run(state);
  const SidebandParams params = cfg.sideband_params(stage);
  const SidebandBands bands = cfg.sideband_bands(params);

  std::vector<double> offsets;
  std::vector<std::vector<double>> summary;
  for (int order = 1; order <= 2; ++order) {
    std::vector<SidebandScan> scans;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto pop = populations_for_result(results[i], params.fock_cutoff);
      SidebandScan scan = scan_sideband(pop, params, order, bands[order]);
      if (cfg.sideband.shots > 0)
        scan = measure_with_shots(scan, cfg.sideband.shots, cfg.sideband.seed + 131 * i + order);
      scans.push_back(std::move(scan));
      if (order == 1) offsets.push_back(results[i].hold_offset);
    }
    io::write_scan(dir / ("scan_r" + std::to_string(order) + ".tsv"), scans, offsets);
  }
  const LossValue loss = loss_function(results, params, bands, cfg.loss_weights(),
                                       Measurement{cfg.sideband.shots, cfg.sideband.seed});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    summary.push_back({r.hold_offset / units::ns, r.coherent_quanta, r.thermal_quanta, r.total_quanta(),
                       loss.per_offset[i].second});
  }
  io::write_table(dir / "scan_summary.tsv",
                  {"offset_ns", "coherent_quanta", "thermal_quanta", "total_quanta", "loss"}, summary,
                  "probe stage " + std::to_string(stage));
  std::printf("worst-offset loss %.6g\n", loss.total);
  dump_runs(c, exp, state, dir);
  return kOk;
}

int cmd_diagnose(const Common& c, const std::string& state_path) {
  const ExperimentConfig cfg = load(c);
  const OptState state = io::read_state(state_path);
  const fs::path dir = c.out_dir;
  io::ensure_directory(dir);
  io::write_manifest(dir, "diagnose", cfg);
  const TransportExperiment exp(cfg);
  const auto results = exp.run(state);
  const SidebandParams params = cfg.sideband_params(1);
  // Ground-state blue-sideband pi time; thermometry and the Rabi scan use it.
  const double t_pi = kPi / (2.0 * params.lamb_dicke * params.carrier_coupling);

  std::vector<std::vector<double>> thermo, fits;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto pop = populations_for_result(r, params.fock_cutoff);
    const ThermometryPeaks peaks = thermometry_peaks(pop, params, t_pi);
    double estimate = std::nan("");
    double valid = 1.0;
    try {
      estimate = sideband_thermometry(peaks.red, peaks.blue);
    } catch (const InvalidRatio& e) {
      valid = 0.0;
      std::fprintf(stderr, "offset %zu: %s\n", i, e.what());
    }
    thermo.push_back({r.hold_offset / units::ns, r.coherent_quanta, r.thermal_quanta, r.total_quanta(),
                      peaks.red, peaks.blue, estimate, valid});

    const int points = 81;
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(points, 0.0, 4.0 * t_pi);
    Eigen::VectorXd signal(points);
    for (int k = 0; k < points; ++k) signal(k) = bsb_rabi_signal(pop, params, times(k));
    const DisplacedThermalFit fit = fit_displaced_thermal(times, signal, params);
    const auto fit_pop = populations_displaced_thermal(
        fit.coherent_quanta, fit.thermal_quanta,
        cutoff_for(fit.coherent_quanta, fit.thermal_quanta, params.fock_cutoff));
    std::vector<std::vector<double>> rabi;
    for (int k = 0; k < points; ++k)
      rabi.push_back({times(k) / units::us, signal(k), bsb_rabi_signal(fit_pop, params, times(k))});
    io::write_table(dir / ("rabi_" + offset_tag(i) + ".tsv"), {"time_us", "signal", "fit"}, rabi);
    fits.push_back({r.hold_offset / units::ns, fit.coherent_quanta, fit.thermal_quanta,
                    fit.coherent_quanta + fit.thermal_quanta, fit.residual});
  }
  io::write_table(dir / "thermometry.tsv",
                  {"offset_ns", "coherent_quanta", "thermal_quanta", "total_quanta", "red_peak", "blue_peak",
                   "nbar_estimate", "valid"},
                  thermo, "probe time " + std::to_string(t_pi / units::us) + " us");
  io::write_table(dir / "rabi_fit.tsv",
                  {"offset_ns", "fit_coherent", "fit_thermal", "fit_total", "residual"}, fits);

  const Eigen::VectorXd grid = default_quanta_grid();
  for (int stage = 1; stage <= 2; ++stage) {
    const SidebandParams p = cfg.sideband_params(stage);
    const SidebandBands bands = cfg.sideband_bands(p);
    for (auto kind : {PopulationKind::thermal, PopulationKind::coherent}) {
      std::vector<std::vector<double>> rows;
      for (const auto& pt : loss_to_quanta_curve(kind, p, bands, cfg.loss_weights(), grid))
        rows.push_back({pt.nbar, pt.loss});
      const std::string name = kind == PopulationKind::thermal ? "thermal" : "coherent";
      io::write_table(dir / ("loss_curve_" + name + "_stage" + std::to_string(stage) + ".tsv"),
                      {"nbar", "loss"}, rows);
    }
  }
  for (const auto& row : thermo)
    std::printf("offset %6.1f ns: simulated %.4g quanta, thermometry %.4g\n", row[0], row[3], row[6]);
  dump_runs(c, exp, state, dir);
  return kOk;
}

int cmd_decimate(const Common& c, int factor) {
  ExperimentConfig cfg = load(c);
  if (factor <= 0) factor = cfg.electronics.study_decimation_factor;
  const fs::path dir = c.out_dir;
  io::ensure_directory(dir);
  io::write_manifest(dir, "decimate-study", cfg);
  const OptState x0 = cfg.initial_state();
  fs::remove(dir / "history_full.tsv");
  fs::remove(dir / "history_decimated.tsv");
  io::HistoryLog full(dir / "history_full.tsv", x0.n_f(), x0.n_t(), cfg.transport.offset_count);
  io::HistoryLog dec(dir / "history_decimated.tsv", x0.n_f(), x0.n_t(), cfg.transport.offset_count);
  bool first_arm = true;
  int last_index = -1;
  const DecimationStudy s = run_decimation_study(cfg, factor, [&](int, const OptRecord& r) {
    // Index restarts at 0 when the second arm begins.
    if (r.eval_index <= last_index) first_arm = false;
    last_index = r.eval_index;
    (first_arm ? full : dec).append(r);
  });
  io::write_state(dir / "best_state_full.json", s.full_rate.schedule.best(), s.full_rate.final_eval.total);
  io::write_state(dir / "best_state_decimated.json", s.decimated.schedule.best(), s.decimated.final_eval.total);
  const double e_full = worst_excitation(s.full_rate.final_eval);
  const double e_dec = worst_excitation(s.decimated.final_eval);
  io::write_table(dir / "decimate_study.tsv",
                  {"factor", "evaluations", "final_loss", "worst_quanta"},
                  {{1.0, double(s.full_rate.schedule.history.size()), s.full_rate.final_eval.total, e_full},
                   {double(factor), double(s.decimated.schedule.history.size()), s.decimated.final_eval.total,
                    e_dec}});
  std::printf("full rate: %.6g quanta; decimated x%d: %.6g quanta; ratio %.3g\n", e_full, factor, e_dec,
              e_dec / e_full);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop optimization of simulated ion transport waveforms"};
  app.require_subcommand(1);
  Common common;
  std::string state_path;
  int stage = 2;
  int factor = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON configuration (defaults apply when omitted)");
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option("--seed", common.seed, "Override the measurement seed");
    sub->add_option("--shots", common.shots, "Shots per scan point, or 'exact'");
    sub->add_flag("--dump-waveform", common.dump_waveform, "Write commanded and delivered waveforms");
    sub->add_flag("--dump-trajectory", common.dump_trajectory, "Write the ion trajectory per offset");
  };
  auto* basesolve = app.add_subcommand("basesolve", "Write the least-norm base solution set");
  auto* optimize = app.add_subcommand("optimize", "Run the two-stage closed-loop optimization");
  auto* scan = app.add_subcommand("scan", "Red-sideband scans for a state");
  auto* diagnose = app.add_subcommand("diagnose", "Thermometry, Rabi fits and loss curves for a state");
  auto* decimate = app.add_subcommand("decimate-study", "Full-rate vs decimated DAC optimization");
  for (auto* sub : {basesolve, optimize, scan, diagnose, decimate}) add_common(sub);
  scan->add_option("--state", state_path, "State file")->required();
  scan->add_option("--stage", stage, "Probe-time stage (1 or 2)")->check(CLI::Range(1, 2));
  diagnose->add_option("--state", state_path, "State file")->required();
  decimate->add_option("--factor", factor, "Decimation factor (config default when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*basesolve) return cmd_basesolve(common);
    if (*optimize) return cmd_optimize(common);
    if (*scan) return cmd_scan(common, state_path, stage);
    if (*diagnose) return cmd_diagnose(common, state_path);
    if (*decimate) return cmd_decimate(common, factor);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IonLost& e) {
    std::cerr << "ion lost: " << e.what() << '\n';
    return kPhysics;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
