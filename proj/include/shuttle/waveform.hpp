#pragma once

#include "shuttle/constants.hpp"
#include "shuttle/control_state.hpp"
#include "shuttle/filters.hpp"
#include "shuttle/trap_model.hpp"

#include <Eigen/Core>

namespace shuttle {

/// Sample indices (exclusive ends) of the round-trip stages.
struct StageMarkers {
  Eigen::Index forward_end = 0;
  Eigen::Index hold_end = 0;
  Eigen::Index reverse_end = 0;

  bool operator==(const StageMarkers&) const = default;
};

/// Multi-channel voltage timeline at a fixed sample period. Column k holds
/// the electrode voltages applied over [k T, (k+1) T).
struct Waveform {
  double sample_period = 30.0 * units::ns;
  Eigen::MatrixXd samples;  // channels x time, volts
  StageMarkers markers;
  bool filtered = false;
  bool decimated = false;
  bool over_budget = false;

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index length() const { return samples.cols(); }
  double duration() const { return sample_period * double(length()); }
};

struct FirBand {
  double pass_band = 12.0 * units::MHz;
  double stop_band = 15.0 * units::MHz;
  double attenuation_db = 100.0;
};

struct AnalogSpec {
  int order = 6;
  double cutoff = 1.3 * units::MHz;
  int oversample = 8;  // discretization rate / DAC rate
};

/// Commanded voltages at normalized transport time tau: trajectory ->
/// linear interpolation in the base set -> rescale to the profile frequency.
class ForwardSynthesizer {
 public:
  ForwardSynthesizer(const OptState& state, const BaseSolutionSet& base);

  Eigen::VectorXd voltages_at(double tau) const;
  /// Path fraction s(tau), clamped to the base-solution span.
  double path_fraction(double tau) const;

 private:
  const BaseSolutionSet& base_;
  TrajectoryCurve curve_;
  FrequencyProfile profile_;
};

/// Forward stage sampled at tau_k = k/n, k = 1..n, n = round(t_f / T). The
/// DAC idles at the tau = 0 solution before the first sample.
Waveform synthesize_forward(const OptState& state, const BaseSolutionSet& base, double t_f,
                            double sample_period);

/// [fwd | last column repeated round((hold + offset)/T) times | reversed fwd].
Waveform assemble_roundtrip(const Waveform& fwd, double hold, double offset);

struct BudgetCheck {
  bool ok;
  double penalty;
  double max_abs;
};

BudgetCheck check_voltage_budget(const Waveform& w, const ConstraintPolicy& policy);

/// Per-channel linear-phase FIR at the waveform's sample rate, delay trimmed.
Waveform apply_digital_fir(const Waveform& w, const FirBand& band);

/// Zero-order-hold upsampling by spec.oversample followed by the digital
/// Butterworth model of the feedthrough filter. Output stays at the fine rate.
Waveform apply_analog_chain(const Waveform& w, const AnalogSpec& spec);

/// Keep every factor-th sample and hold it for factor samples; length preserved
/// (the final partial block is truncated).
Waveform decimate_zoh(const Waveform& w, int factor);

/// Repeat each column `factor` times.
Waveform upsample_zoh(const Waveform& w, int factor);

}  // namespace shuttle
