#include "shuttle/waveform.hpp"

#include "shuttle/errors.hpp"

#include <algorithm>
#include <cmath>

namespace shuttle {

ForwardSynthesizer::ForwardSynthesizer(const OptState& state, const BaseSolutionSet& base)
    : base_(base),
      curve_(build_trajectory(state.traj_points)),
      profile_(state.freq_points_mhz * units::MHz, base.frequency, base.positions(0),
               base.positions(base.size() - 1)) {}

double ForwardSynthesizer::path_fraction(double tau) const {
  return std::clamp(bezier_eval(curve_, tau), 0.0, 1.0);
}

Eigen::VectorXd ForwardSynthesizer::voltages_at(double tau) const {
  const double s = path_fraction(tau);
  const Eigen::Index last = base_.size() - 1;
  const double pos = s * double(last);
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), last - 1);
  const double w = pos - double(i);
  const double r = profile_.at_fraction(s) / base_.frequency;
  return ((1.0 - w) * base_.voltages.col(i) + w * base_.voltages.col(i + 1)) * (r * r);
}

Waveform synthesize_forward(const OptState& state, const BaseSolutionSet& base, double t_f,
                            double sample_period) {
  if (!(t_f > 0.0)) throw ShuttleError("transport time must be positive");
  const auto n = static_cast<Eigen::Index>(std::llround(t_f / sample_period));
  ForwardSynthesizer synth(state, base);
  Waveform w;
  w.sample_period = sample_period;
  w.samples.resize(base.electrodes(), n);
  for (Eigen::Index k = 1; k <= n; ++k) w.samples.col(k - 1) = synth.voltages_at(double(k) / double(n));
  w.markers = {n, n, n};
  return w;
}

Waveform assemble_roundtrip(const Waveform& fwd, double hold, double offset) {
  if (hold < 0.0 || offset < 0.0) throw ShuttleError("hold and offset must be non-negative");
  const Eigen::Index n = fwd.length();
  const auto n_hold = static_cast<Eigen::Index>(std::llround((hold + offset) / fwd.sample_period));
  Waveform w;
  w.sample_period = fwd.sample_period;
  w.filtered = fwd.filtered;
  w.decimated = fwd.decimated;
  w.samples.resize(fwd.channels(), 2 * n + n_hold);
  w.samples.leftCols(n) = fwd.samples;
  if (n_hold > 0) w.samples.middleCols(n, n_hold) = fwd.samples.col(n - 1).replicate(1, n_hold);
  w.samples.rightCols(n) = fwd.samples.rowwise().reverse();
  w.markers = {n, n + n_hold, 2 * n + n_hold};
  return w;
}

BudgetCheck check_voltage_budget(const Waveform& w, const ConstraintPolicy& policy) {
  const double max_abs = w.length() > 0 ? w.samples.cwiseAbs().maxCoeff() : 0.0;
  const double excess = max_abs - policy.voltage_budget;
  const double penalty =
      exponential_penalty(excess, policy.voltage_penalty_scale, policy.voltage_penalty_sharpness);
  return {excess <= 0.0, penalty, max_abs};
}

Waveform apply_digital_fir(const Waveform& w, const FirBand& band) {
  const auto taps = fir_taps({1.0 / w.sample_period, band.pass_band, band.stop_band, band.attenuation_db});
  Waveform out = w;
  for (Eigen::Index c = 0; c < w.channels(); ++c)
    out.samples.row(c) = fir_filter_aligned(*taps, w.samples.row(c).transpose()).transpose();
  out.filtered = true;
  return out;
}

Waveform upsample_zoh(const Waveform& w, int factor) {
  Waveform out = w;
  out.sample_period = w.sample_period / factor;
  out.samples.resize(w.channels(), w.length() * factor);
  for (Eigen::Index k = 0; k < w.length(); ++k)
    out.samples.middleCols(k * factor, factor) = w.samples.col(k).replicate(1, factor);
  out.markers = {w.markers.forward_end * factor, w.markers.hold_end * factor,
                 w.markers.reverse_end * factor};
  return out;
}

Waveform apply_analog_chain(const Waveform& w, const AnalogSpec& spec) {
  if (spec.oversample < 4) throw InfeasibleSpec("analog discretization must be >= 4x the DAC rate");
  Waveform out = upsample_zoh(w, spec.oversample);
  const ButterworthLowpass lp(spec.order, spec.cutoff, 1.0 / out.sample_period);
  for (Eigen::Index c = 0; c < out.channels(); ++c)
    out.samples.row(c) = lp.filter(out.samples.row(c).transpose()).transpose();
  out.filtered = true;
  return out;
}

Waveform decimate_zoh(const Waveform& w, int factor) {
  if (factor < 1) throw ShuttleError("decimation factor must be >= 1");
  Waveform out = w;
  if (factor == 1) return out;
  for (Eigen::Index k = 0; k < w.length(); ++k) out.samples.col(k) = w.samples.col(k - k % factor);
  out.decimated = true;
  return out;
}

}  // namespace shuttle
