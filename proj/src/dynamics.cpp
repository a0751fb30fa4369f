#include "shuttle/dynamics.hpp"

#include "shuttle/errors.hpp"

#include <cmath>
#include <sstream>

namespace shuttle {

double force_at(const TrapModel& model, const Eigen::Ref<const Eigen::VectorXd>& voltages, double x) {
  const auto& g = model.geometry;
  double acc = 0.0;
  for (Eigen::Index e = 0; e < voltages.size(); ++e)
    acc += voltages(e) * strip_gradient(x, g.centers(e), g.pitch, g.ion_height);
  return -model.ion_charge * acc;
}

double total_energy(const TrapModel& model, const Eigen::VectorXd& voltages, const IonState& s) {
  return 0.5 * model.ion_mass * s.velocity * s.velocity +
         model.ion_charge * electric_potential(model.geometry, voltages, s.position);
}

MotionTrace integrate_motion(const TrapModel& model, const Waveform& delivered, IonState init,
                             double dt) {
  if (!(dt > 0.0)) throw ShuttleError("integration step must be positive");
  const double period = delivered.sample_period;
  const int substeps = static_cast<int>(std::ceil(period / dt * (1.0 - 1e-12)));
  const double h = period / substeps;
  const double inv_m = 1.0 / model.ion_mass;
  const double lo = model.geometry.span_min();
  const double hi = model.geometry.span_max();

  const Eigen::Index n = delivered.length();
  MotionTrace trace;
  trace.substeps = substeps;
  trace.times.resize(n + 1);
  trace.positions.resize(n + 1);
  trace.velocities.resize(n + 1);
  trace.times(0) = 0.0;
  trace.positions(0) = init.position;
  trace.velocities(0) = init.velocity;

  double x = init.position;
  double v = init.velocity;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto volts = delivered.samples.col(k);
    double a = force_at(model, volts, x) * inv_m;
    for (int j = 0; j < substeps; ++j) {
      v += 0.5 * h * a;
      x += h * v;
      a = force_at(model, volts, x) * inv_m;
      v += 0.5 * h * a;
    }
    if (!(x > lo && x < hi)) {
      std::ostringstream msg;
      msg << "ion left the electrode span at t = " << (k + 1) * period / units::us << " us";
      throw IonLost(msg.str(), (k + 1) * period);
    }
    trace.times(k + 1) = (k + 1) * period;
    trace.positions(k + 1) = x;
    trace.velocities(k + 1) = v;
  }
  trace.final_state = {x, v};
  return trace;
}

TransportResult final_excitation(const MotionTrace& trace, const TrapModel& model,
                                 const Eigen::VectorXd& final_voltages, double prepared_nbar) {
  const IonState s = trace.final_state;
  const WellProperties well = well_properties(model, final_voltages, s.position);
  const double omega = kTwoPi * well.frequency;
  const double scale = std::sqrt(model.ion_mass * omega / (2.0 * kHbar));
  TransportResult r;
  r.coherent_amplitude = scale * std::complex<double>(s.position - well.position, s.velocity / omega);
  r.coherent_quanta = std::norm(r.coherent_amplitude);
  r.thermal_quanta = prepared_nbar;
  r.final_frequency = well.frequency;
  r.final_well = well.position;
  return r;
}

TransportResult add_background_heating(TransportResult result, double rate, double elapsed) {
  if (rate < 0.0 || elapsed < 0.0) throw ShuttleError("heating rate and duration must be non-negative");
  result.thermal_quanta += rate * elapsed;
  return result;
}

IonState at_rest_in_well(const TrapModel& model, const Eigen::VectorXd& voltages, double guess) {
  return {well_properties(model, voltages, guess).position, 0.0};
}

}  // namespace shuttle
