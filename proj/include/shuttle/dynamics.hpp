#pragma once

#include "shuttle/trap_model.hpp"
#include "shuttle/waveform.hpp"

#include <Eigen/Core>

#include <complex>

namespace shuttle {

struct IonState {
  double position = 0.0;  // m
  double velocity = 0.0;  // m/s
};

/// Ion state sampled at every boundary of the delivered waveform
/// (times(0) = 0, then one entry per delivered sample), plus the final state.
struct MotionTrace {
  Eigen::VectorXd times;
  Eigen::VectorXd positions;
  Eigen::VectorXd velocities;
  IonState final_state;
  int substeps = 0;  // integrator steps per delivered sample
};

struct TransportResult {
  double hold_offset = 0.0;                // s
  std::complex<double> coherent_amplitude;  // final-well frame
  double coherent_quanta = 0.0;            // |alpha|^2
  double thermal_quanta = 0.0;
  double final_frequency = 0.0;            // Hz
  double final_well = 0.0;                 // m

  double total_quanta() const { return coherent_quanta + thermal_quanta; }
};

/// Axial force -q sum_e V_e phi_e'(x).
double force_at(const TrapModel& model, const Eigen::Ref<const Eigen::VectorXd>& voltages, double x);

/// Potential energy q sum_e V_e phi_e(x) plus kinetic energy.
double total_energy(const TrapModel& model, const Eigen::VectorXd& voltages, const IonState& s);

/// Velocity Verlet with the field of each delivered sample held over its
/// period; ceil(T/dt) equal substeps per sample. Throws IonLost when the ion
/// leaves the electrode span.
MotionTrace integrate_motion(const TrapModel& model, const Waveform& delivered, IonState init,
                             double dt);

/// alpha = sqrt(m w / 2 hbar) (u + i v / w) relative to the well of
/// `final_voltages`; thermal part initialised to `prepared_nbar`.
TransportResult final_excitation(const MotionTrace& trace, const TrapModel& model,
                                 const Eigen::VectorXd& final_voltages, double prepared_nbar);

TransportResult add_background_heating(TransportResult result, double rate, double elapsed);

/// Ion at rest at the bottom of the well formed by `voltages`.
IonState at_rest_in_well(const TrapModel& model, const Eigen::VectorXd& voltages, double guess);

}  // namespace shuttle
