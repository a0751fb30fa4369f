#include <doctest.h>

#include "shuttle/errors.hpp"
#include "shuttle/waveform.hpp"

#include <cmath>

using namespace shuttle;

namespace {

const TrapModel model = TrapModel::standard();
const BaseSolutionSet& base() {
  static const BaseSolutionSet set = generate_base_solutions(model, -105e-6, 105e-6, 211, 2.5e6);
  return set;
}

OptState sample_state() {
  Eigen::VectorXd f(4);
  f << 2.9, 2.2, 2.7, 2.4;
  Eigen::VectorXd b(2);
  b << 0.05, 0.3;
  return {f, b};
}

// The whole forward map in long double, written out step by step.
Eigen::VectorXd reference_voltages(const OptState& s, long double tau) {
  const int n_t = int(s.n_t());
  const int order = 2 * n_t + 3;
  std::vector<long double> c(order + 1);
  c[0] = c[1] = 0;
  for (int j = 0; j < n_t; ++j) c[j + 2] = s.traj_points(j);
  for (int j = 0; j <= n_t + 1; ++j) c[order - j] = 1 - c[j];
  long double u = 0;
  for (int k = 0; k <= order; ++k) {
    long double binom = 1;
    for (int i = 1; i <= k; ++i) binom = binom * (order - k + i) / i;
    u += c[k] * binom * std::pow(tau, k) * std::pow(1 - tau, order - k);
  }
  u = std::clamp<long double>(u, 0, 1);
  const int nf = int(s.n_f());
  std::vector<long double> knots(nf + 2);
  knots[0] = knots[nf + 1] = 2.5L;
  for (int j = 0; j < nf; ++j) knots[j + 1] = s.freq_points_mhz(j);
  long double seg = u * (nf + 1);
  int j = std::min(int(seg), nf);
  const long double f = knots[j] + (seg - j) * (knots[std::min(j + 1, nf + 1)] - knots[j]);
  const long double pos = u * 210;
  const int i = std::min(int(pos), 209);
  const long double w = pos - i;
  const long double r = f / 2.5L;
  Eigen::VectorXd out(12);
  for (int e = 0; e < 12; ++e)
    out(e) = double(((1 - w) * base().voltages(e, i) + w * base().voltages(e, i + 1)) * r * r);
  return out;
}

}  // namespace

TEST_CASE("forward synthesis against an unfused long-double pipeline") {
  const OptState s = sample_state();
  const ForwardSynthesizer synth(s, base());
  for (double tau : {0.0, 0.004, 0.1, 0.333, 0.5, 0.81, 0.97, 1.0})
    CHECK((synth.voltages_at(tau) - reference_voltages(s, tau)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward stage sampling and endpoints") {
  const OptState s = sample_state();
  const Waveform w = synthesize_forward(s, base(), 6e-6, 30e-9);
  CHECK(w.length() == 200);
  CHECK(w.channels() == 12);
  CHECK(w.samples.col(199) == base().voltages.col(210));
  const ForwardSynthesizer synth(s, base());
  CHECK(synth.voltages_at(0.0) == base().voltages.col(0));
  CHECK((w.samples.col(0) - synth.voltages_at(1.0 / 200)).norm() == 0.0);
  CHECK_THROWS(synthesize_forward(s, base(), 0.0, 30e-9));
}

TEST_CASE("commanded well follows the trajectory and the profile") {
  const OptState s = sample_state();
  const ForwardSynthesizer synth(s, base());
  const FrequencyProfile profile(s.freq_points_mhz * 1e6, 2.5e6, -105e-6, 105e-6);
  for (double tau : {0.15, 0.4, 0.6, 0.9}) {
    const double u = synth.path_fraction(tau);
    const double x = -105e-6 + 210e-6 * u;
    const WellProperties w = well_properties(model, synth.voltages_at(tau), x);
    CHECK(std::abs(w.position - x) < 20e-9);
    CHECK(w.frequency == doctest::Approx(profile.at_fraction(u)).epsilon(1e-3));
  }
}

TEST_CASE("round trip layout") {
  const Waveform fwd = synthesize_forward(sample_state(), base(), 6e-6, 30e-9);
  const Waveform rt = assemble_roundtrip(fwd, 12e-6, 100e-9);
  // 100 ns rounds to 3 DAC samples.
  CHECK(rt.length() == 200 + 403 + 200);
  CHECK(rt.markers.forward_end == 200);
  CHECK(rt.markers.hold_end == 603);
  CHECK(rt.markers.reverse_end == 803);
  for (Eigen::Index k = 200; k < 603; ++k) CHECK(rt.samples.col(k) == fwd.samples.col(199));
  for (Eigen::Index k = 0; k < 200; ++k) CHECK(rt.samples.col(603 + k) == fwd.samples.col(199 - k));
  CHECK(assemble_roundtrip(fwd, 0.0, 0.0).length() == 400);
  CHECK_THROWS(assemble_roundtrip(fwd, -1e-6, 0.0));
}

TEST_CASE("voltage budget") {
  const Waveform fwd = synthesize_forward(sample_state(), base(), 6e-6, 30e-9);
  const ConstraintPolicy policy;
  const BudgetCheck ok = check_voltage_budget(fwd, policy);
  CHECK(ok.ok);
  CHECK(ok.penalty == 0.0);
  Waveform big = fwd;
  big.samples *= 12.0 / ok.max_abs;
  const BudgetCheck bad = check_voltage_budget(big, policy);
  CHECK_FALSE(bad.ok);
  CHECK(bad.max_abs == doctest::Approx(12.0));
  CHECK(bad.penalty == doctest::Approx(10.0 * std::expm1(2.0 * 2.0)));
}

TEST_CASE("decimation is an analytic staircase") {
  Waveform w;
  w.sample_period = 30e-9;
  w.samples.resize(2, 50);
  for (int k = 0; k < 50; ++k) w.samples.col(k) << k, -2.0 * k;
  const Waveform same = decimate_zoh(w, 1);
  CHECK(same.samples == w.samples);
  CHECK_FALSE(same.decimated);
  const Waveform d = decimate_zoh(w, 16);
  CHECK(d.length() == 50);
  CHECK(d.decimated);
  for (int k = 0; k < 50; ++k) {
    CHECK(d.samples(0, k) == double(16 * (k / 16)));
    CHECK(d.samples(1, k) == -2.0 * (16 * (k / 16)));
  }
  CHECK_THROWS(decimate_zoh(w, 0));
}

TEST_CASE("upsampling and the analog chain") {
  Waveform w;
  w.sample_period = 30e-9;
  w.samples = Eigen::MatrixXd::Constant(3, 40, 1.5);
  w.markers = {10, 20, 30};
  const Waveform up = upsample_zoh(w, 8);
  CHECK(up.length() == 320);
  CHECK(up.sample_period == doctest::Approx(3.75e-9));
  CHECK(up.markers.hold_end == 160);
  const Waveform a = apply_analog_chain(w, AnalogSpec{});
  CHECK((a.samples.array() - 1.5).abs().maxCoeff() < 1e-12);
  CHECK(a.filtered);
  CHECK_THROWS_AS(apply_analog_chain(w, AnalogSpec{6, 1.3e6, 2}), InfeasibleSpec);
  const Waveform f = apply_digital_fir(w, FirBand{});
  CHECK((f.samples.array() - 1.5).abs().maxCoeff() < 1e-12);
}
