#pragma once

#include "shuttle/constants.hpp"
#include "shuttle/dynamics.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

namespace shuttle {

struct SidebandParams {
  double carrier_coupling = kTwoPi * 50.0 * units::kHz;  // g0, rad/s
  double lamb_dicke = 0.061;
  double trap_frequency = kTwoPi * 2.5 * units::MHz;     // omega_t, rad/s
  double probe_time_1 = 3.0 * units::us;
  double probe_time_2 = 10.0 * units::us;
  int fock_cutoff = 60;

  double probe_time(int order) const { return order == 1 ? probe_time_1 : probe_time_2; }
};

/// Lamb-Dicke parameter k sqrt(hbar / 2 m omega) for a beam along the axis.
double lamb_dicke_parameter(double wavelength, double mass, double trap_frequency_hz);

/// Largest Fock level used by the loss; mass beyond it is lumped into the top level.
inline constexpr int kMaxFockCutoff = 600;

/// Diagonal of the motional density matrix, n = 0..cutoff.
struct MotionalPopulations {
  Eigen::VectorXd p;

  int cutoff() const { return static_cast<int>(p.size()) - 1; }
  double mass() const { return p.sum(); }
  double deficit() const { return 1.0 - p.sum(); }
  double mean() const;
  double variance() const;
};

MotionalPopulations populations_thermal(double nbar, int cutoff);
MotionalPopulations populations_coherent(double alpha2, int cutoff);

/// Displaced thermal state, closed form (Laguerre series written as a sum of
/// positive terms and evaluated in log space).
MotionalPopulations populations_displaced_thermal(double alpha2, double nbar_th, int cutoff);

/// Same populations from the definition: truncated displacement operator
/// applied to the thermal density matrix in a padded Fock space.
MotionalPopulations populations_displaced_thermal_operator(double alpha2, double nbar_th, int cutoff);

/// Cutoff holding all but ~1e-9 of the displaced-thermal mass, clamped to
/// [min_cutoff, max_cutoff].
int cutoff_for(double alpha2, double nbar_th, int min_cutoff, int max_cutoff = kMaxFockCutoff);

/// Displaced-thermal populations at an automatically chosen cutoff; any
/// residual mass is folded into the top level.
MotionalPopulations populations_for_result(const TransportResult& r, int min_cutoff);

/// |g_nm|: eta g0 sqrt(n) for m = 1, eta^2 g0 sqrt(n(n-1)) / 2 for m = 2.
double sideband_coupling(const SidebandParams& params, int order, int n);

/// Excitation probability of the m-th red sideband at detuning `detuning`
/// (rad/s) after probe time params.probe_time(m).
double rsb_lineshape(const MotionalPopulations& pop, const SidebandParams& params, int order,
                     double detuning);

/// Resonant first blue sideband after probe time t.
double bsb_rabi_signal(const MotionalPopulations& pop, const SidebandParams& params, double t);

struct SidebandScan {
  int order = 1;
  Eigen::VectorXd detunings;   // rad/s from the sideband
  Eigen::VectorXd excitation;  // [0, 1]
  int shots = 0;               // 0: exact probabilities
};

/// Integration band for each order, in rad/s.
struct SidebandBands {
  Eigen::VectorXd order1;
  Eigen::VectorXd order2;

  const Eigen::VectorXd& operator[](int order) const { return order == 1 ? order1 : order2; }
};

/// Bands of full width width_factor / t_m (Hz) centred on each sideband.
SidebandBands default_bands(const SidebandParams& params, double width_factor = 10.0, int points = 41);

SidebandScan scan_sideband(const MotionalPopulations& pop, const SidebandParams& params, int order,
                           const Eigen::VectorXd& detunings);

/// Trapezoidal integral of r over Delta / 2 pi, in kHz.
double integrate_sideband(const SidebandScan& scan);

/// Each excitation replaced by Binomial(shots, r) / shots.
SidebandScan measure_with_shots(const SidebandScan& scan, int shots, std::uint64_t seed);

struct LossWeights {
  double alpha1 = 2.0;  // 1/kHz
  double alpha2 = 2.0;  // 1/kHz
};

struct Measurement {
  int shots = 0;  // 0: exact
  std::uint64_t seed = 0;
};

struct LossValue {
  std::vector<std::pair<double, double>> per_offset;  // (hold offset, loss)
  double total = 0.0;
  double penalty_component = 0.0;
};

/// alpha1 * I1 + (alpha2 * I2)^2 for one motional state.
double loss_for_populations(const MotionalPopulations& pop, const SidebandParams& params,
                            const SidebandBands& bands, const LossWeights& weights,
                            const Measurement& measurement = {});

/// Worst offset of the per-offset sideband loss.
LossValue loss_function(const std::vector<TransportResult>& results, const SidebandParams& params,
                        const SidebandBands& bands, const LossWeights& weights,
                        const Measurement& measurement = {});

/// Upper bound on alpha1 I1 + (alpha2 I2)^2 for any state supported below `cutoff`:
/// each integral is at most min(band width in Hz, max_n |g_nm|).
double loss_upper_bound(const SidebandParams& params, const SidebandBands& bands,
                        const LossWeights& weights, int cutoff);

enum class PopulationKind { thermal, coherent };

struct LossCurvePoint {
  double nbar;
  double loss;
};

/// Loss against mean quanta for a thermal or coherent family (n = 0 first,
/// then a log-spaced grid).
std::vector<LossCurvePoint> loss_to_quanta_curve(PopulationKind kind, const SidebandParams& params,
                                                 const SidebandBands& bands,
                                                 const LossWeights& weights,
                                                 const Eigen::VectorXd& nbar_grid);

Eigen::VectorXd default_quanta_grid(double lo = 1e-2, double hi = 1e2, int points = 25);

/// n = R / (1 - R), R = r1 / b1. Throws InvalidRatio unless 0 <= r1 < b1 <= 1.
double sideband_thermometry(double r1_peak, double b1_peak);

struct ThermometryPeaks {
  double red;
  double blue;
};

/// Resonant first red and blue sideband excitation after probe time t.
ThermometryPeaks thermometry_peaks(const MotionalPopulations& pop, const SidebandParams& params,
                                   double t);

struct DisplacedThermalFit {
  double coherent_quanta;
  double thermal_quanta;
  double residual;  // sum of squares
};

/// Least-squares fit of blue-sideband Rabi data to a displaced thermal state.
DisplacedThermalFit fit_displaced_thermal(const Eigen::VectorXd& times, const Eigen::VectorXd& signal,
                                          const SidebandParams& params);

}  // namespace shuttle
