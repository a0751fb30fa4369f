#pragma once

#include "shuttle/control_state.hpp"
#include "shuttle/dynamics.hpp"
#include "shuttle/optimizer.hpp"
#include "shuttle/sidebands.hpp"
#include "shuttle/trap_model.hpp"
#include "shuttle/waveform.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace shuttle {

enum class OptimizationMode { trajectory, axial, both };

std::string to_string(OptimizationMode mode);
OptimizationMode parse_mode(const std::string& text);

struct ProbePair {
  double t1_us;
  double t2_us;
  bool operator==(const ProbePair&) const = default;
};

/// Every tunable of a simulated experiment. Keys in the file carry their unit
/// as a suffix (_um, _us, _mhz, ...); SI accessors convert.
struct ExperimentConfig {
  struct Trap {
    int electrode_count = 12;
    double pitch_um = 70.0;
    double ion_height_um = 70.0;
    bool operator==(const Trap&) const = default;
  } trap;

  struct Ion {
    double mass_amu = 39.962590863;
    double charge_e = 1.0;
    double prepared_nbar = 0.03;
    double heating_rate_per_s = 295.0;
    bool operator==(const Ion&) const = default;
  } ion;

  struct Transport {
    double x_a_um = -105.0;
    double x_b_um = 105.0;
    double t_f_us = 6.0;
    double hold_us = 12.0;
    int offset_count = 4;
    int base_count = 211;
    double base_frequency_mhz = 2.5;
    double preroll_us = 0.5;
    double settle_us = 5.0;
    int integrator_substeps = 8;  // per delivered sample
    bool operator==(const Transport&) const = default;
  } transport;

  struct Electronics {
    double sample_period_ns = 30.0;
    bool fir_enabled = true;
    double fir_pass_mhz = 12.0;
    double fir_stop_mhz = 15.0;
    double fir_atten_db = 100.0;
    bool analog_enabled = true;
    int analog_order = 6;
    double analog_cutoff_mhz = 1.3;
    int analog_oversample = 8;
    int decimation_factor = 1;
    int study_decimation_factor = 16;
    bool operator==(const Electronics&) const = default;
  } electronics;

  struct Sideband {
    double g0_khz = 50.0;           // carrier coupling g0 / 2pi
    std::optional<double> lamb_dicke;  // derived from the wavelength when absent
    double wavelength_nm = 729.0;
    ProbePair stage1{3.0, 10.0};
    ProbePair stage2{25.0, 45.0};
    double band_width_factor = 10.0;
    int band_points = 41;
    int fock_cutoff = 60;
    int shots = 0;  // 0: exact probabilities
    std::uint64_t seed = 1;
    double alpha1_per_khz = 2.0;
    double alpha2_per_khz = 2.0;
    bool operator==(const Sideband&) const = default;
  } sideband;

  struct Optimizer {
    OptimizationMode mode = OptimizationMode::axial;
    int n_t = 3;
    int n_f = 6;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double freq_step_mhz = 0.1;
    double traj_step = 0.05;
    int evals_per_stage = 150;
    bool operator==(const Optimizer&) const = default;
  } optimizer;

  struct Constraints {
    double freq_min_mhz = 1.5;
    double freq_max_mhz = 3.5;
    double voltage_budget_v = 10.0;
    double freq_penalty_scale = 10.0;
    double freq_penalty_sharpness_per_mhz = 4.0;
    double voltage_penalty_scale = 10.0;
    double voltage_penalty_sharpness_per_v = 2.0;
    bool operator==(const Constraints&) const = default;
  } constraints;

  bool operator==(const ExperimentConfig&) const = default;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  TrapModel trap_model() const;
  ConstraintPolicy constraint_policy() const;
  FirBand fir_band() const;
  AnalogSpec analog_spec() const;
  double sample_period() const { return electronics.sample_period_ns * units::ns; }
  double base_frequency() const { return transport.base_frequency_mhz * units::MHz; }
  double lamb_dicke() const;
  SidebandParams sideband_params(int stage) const;
  SidebandBands sideband_bands(const SidebandParams& params) const;
  LossWeights loss_weights() const { return {sideband.alpha1_per_khz, sideband.alpha2_per_khz}; }
  NelderMeadConfig nelder_mead(Eigen::Index n_f, Eigen::Index n_t) const;

  /// Number of frequency / trajectory parameters implied by the mode.
  Eigen::Index active_n_f() const;
  Eigen::Index active_n_t() const;
  /// Constant base frequency and the minimal ramp.
  OptState initial_state() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace shuttle
