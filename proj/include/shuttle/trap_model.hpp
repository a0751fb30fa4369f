#pragma once

#include "shuttle/constants.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace shuttle {

/// Linear array of gapless strip electrodes below the ion.
struct ElectrodeGeometry {
  double pitch = 70.0 * units::um;
  double ion_height = 70.0 * units::um;
  Eigen::VectorXd centers;  // strictly increasing, spaced by pitch

  /// `count` electrodes centred on x = 0.
  static ElectrodeGeometry uniform(int count, double pitch, double ion_height);

  int count() const { return static_cast<int>(centers.size()); }
  double span_min() const { return centers(0) - 0.5 * pitch; }
  double span_max() const { return centers(centers.size() - 1) + 0.5 * pitch; }
};

struct TrapModel {
  ElectrodeGeometry geometry;
  double ion_mass = kCalcium40Mass;
  double ion_charge = kElementaryCharge;

  /// 12 electrodes, 70 um pitch, 70 um ion height, 40Ca+.
  static TrapModel standard();
};

// Potential of a unit-voltage infinite strip of width `width` centred at
// `center`, seen at height `height` above the plane, as a function of the
// axial coordinate. Values in [0, 1].
template <typename Scalar>
Scalar strip_potential(Scalar x, Scalar center, Scalar width, Scalar height) {
  using std::atan;
  const Scalar half = width / Scalar(2);
  return (atan((x - center + half) / height) - atan((x - center - half) / height)) /
         Scalar(kPi);
}

template <typename Scalar>
Scalar strip_gradient(Scalar x, Scalar center, Scalar width, Scalar height) {
  const Scalar half = width / Scalar(2);
  const Scalar up = x - center + half;
  const Scalar um = x - center - half;
  const Scalar h2 = height * height;
  return (height / (h2 + up * up) - height / (h2 + um * um)) / Scalar(kPi);
}

template <typename Scalar>
Scalar strip_curvature(Scalar x, Scalar center, Scalar width, Scalar height) {
  const Scalar half = width / Scalar(2);
  const Scalar up = x - center + half;
  const Scalar um = x - center - half;
  const Scalar h2 = height * height;
  const Scalar dp = h2 + up * up;
  const Scalar dm = h2 + um * um;
  return (Scalar(-2) * height * up / (dp * dp) + Scalar(2) * height * um / (dm * dm)) /
         Scalar(kPi);
}

/// phi_e(x), dimensionless potential of electrode e per unit voltage.
double electrode_basis_potential(const ElectrodeGeometry& geometry, int electrode, double x);

Eigen::VectorXd basis_potentials(const ElectrodeGeometry& geometry, double x);
Eigen::VectorXd basis_gradients(const ElectrodeGeometry& geometry, double x);
Eigen::VectorXd basis_curvatures(const ElectrodeGeometry& geometry, double x);

/// Electric potential (V) at x for electrode voltages `voltages`.
double electric_potential(const ElectrodeGeometry& geometry, const Eigen::VectorXd& voltages,
                          double x);

struct WellProperties {
  double position;   // m
  double frequency;  // Hz
};

/// Step used for the central-difference curvature in well searches.
inline constexpr double kCurvatureStep = 100.0 * units::nm;

/// Minimum of a 1-D potential energy `energy(x)` (J) within guess +- half_width
/// and the harmonic frequency sqrt(U''/m)/2pi from a central difference with
/// step kCurvatureStep. Throws NoWellFound when the minimum sits on the
/// bracket edge or the curvature is not positive.
template <typename EnergyFn>
WellProperties find_well(EnergyFn&& energy, double guess, double half_width, double mass);

WellProperties well_properties(const TrapModel& model, const Eigen::VectorXd& voltages,
                               double guess);

struct TrapSolution {
  double well_position;      // m
  Eigen::VectorXd voltages;  // V, one per electrode
  double axial_frequency;    // Hz
};

/// Minimum-norm voltages with a stationary point at x0 and curvature giving
/// axial frequency f0.
TrapSolution solve_least_norm_solution(const TrapModel& model, double x0, double f0);

/// The two constraint rows (gradient, curvature) at x0, 2 x N.
Eigen::MatrixXd constraint_matrix(const ElectrodeGeometry& geometry, double x0);

struct BaseSolutionSet {
  Eigen::VectorXd positions;  // m, equally spaced
  Eigen::MatrixXd voltages;   // electrodes x positions
  double frequency = 0.0;     // Hz, shared by all solutions
  double spacing = 0.0;

  Eigen::Index size() const { return positions.size(); }
  int electrodes() const { return static_cast<int>(voltages.rows()); }
  TrapSolution solution(Eigen::Index i) const { return {positions(i), voltages.col(i), frequency}; }
};

BaseSolutionSet generate_base_solutions(const TrapModel& model, double x_a, double x_b, int count,
                                        double f0);

}  // namespace shuttle

#include "shuttle/errors.hpp"
#include "shuttle/numerics.hpp"

namespace shuttle {

template <typename EnergyFn>
WellProperties find_well(EnergyFn&& energy, double guess, double half_width, double mass) {
  const double lo = guess - half_width;
  const double hi = guess + half_width;
  const auto min = numerics::brent_minimize(energy, lo, hi, 1e-7 * half_width);
  const double edge = 1e-3 * half_width;
  if (min.x - lo < edge || hi - min.x < edge) {
    throw NoWellFound("no potential minimum within " + std::to_string(half_width / units::um) +
                      " um of " + std::to_string(guess / units::um) + " um");
  }
  const double h = kCurvatureStep;
  const double curvature = (energy(min.x + h) - 2.0 * min.value + energy(min.x - h)) / (h * h);
  if (!(curvature > 0.0)) {
    throw NoWellFound("non-positive curvature at " + std::to_string(min.x / units::um) + " um");
  }
  return {min.x, std::sqrt(curvature / mass) / kTwoPi};
}

}  // namespace shuttle
