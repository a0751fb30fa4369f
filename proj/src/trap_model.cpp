#include "shuttle/trap_model.hpp"

#include "shuttle/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace shuttle {

ElectrodeGeometry ElectrodeGeometry::uniform(int count, double pitch, double ion_height) {
  ElectrodeGeometry g;
  g.pitch = pitch;
  g.ion_height = ion_height;
  g.centers.resize(count);
  for (int i = 0; i < count; ++i) g.centers(i) = (i - 0.5 * (count - 1)) * pitch;
  return g;
}

TrapModel TrapModel::standard() {
  TrapModel m;
  m.geometry = ElectrodeGeometry::uniform(12, 70.0 * units::um, 70.0 * units::um);
  return m;
}

double electrode_basis_potential(const ElectrodeGeometry& g, int e, double x) {
  return strip_potential(x, g.centers(e), g.pitch, g.ion_height);
}

Eigen::VectorXd basis_potentials(const ElectrodeGeometry& g, double x) {
  Eigen::VectorXd out(g.count());
  for (int e = 0; e < g.count(); ++e) out(e) = strip_potential(x, g.centers(e), g.pitch, g.ion_height);
  return out;
}

Eigen::VectorXd basis_gradients(const ElectrodeGeometry& g, double x) {
  Eigen::VectorXd out(g.count());
  for (int e = 0; e < g.count(); ++e) out(e) = strip_gradient(x, g.centers(e), g.pitch, g.ion_height);
  return out;
}

Eigen::VectorXd basis_curvatures(const ElectrodeGeometry& g, double x) {
  Eigen::VectorXd out(g.count());
  for (int e = 0; e < g.count(); ++e) out(e) = strip_curvature(x, g.centers(e), g.pitch, g.ion_height);
  return out;
}

double electric_potential(const ElectrodeGeometry& g, const Eigen::VectorXd& voltages, double x) {
  return voltages.dot(basis_potentials(g, x));
}

WellProperties well_properties(const TrapModel& model, const Eigen::VectorXd& voltages,
                               double guess) {
  const auto energy = [&](double x) {
    return model.ion_charge * electric_potential(model.geometry, voltages, x);
  };
  WellProperties well = find_well(energy, guess, 0.5 * model.geometry.pitch, model.ion_mass);
  // Polish the bracketed minimum with Newton steps on the analytic gradient.
  for (int it = 0; it < 4; ++it) {
    const double grad = voltages.dot(basis_gradients(model.geometry, well.position));
    const double curv = voltages.dot(basis_curvatures(model.geometry, well.position));
    if (!(curv > 0.0)) break;
    const double step = grad / curv;
    if (!(std::abs(step) < 1e-3 * model.geometry.pitch)) break;
    well.position -= step;
    if (step == 0.0) break;
  }
  return well;
}

Eigen::MatrixXd constraint_matrix(const ElectrodeGeometry& g, double x0) {
  Eigen::MatrixXd a(2, g.count());
  a.row(0) = basis_gradients(g, x0).transpose();
  a.row(1) = basis_curvatures(g, x0).transpose();
  return a;
}

TrapSolution solve_least_norm_solution(const TrapModel& model, double x0, double f0) {
  const double omega = kTwoPi * f0;
  Eigen::MatrixXd a = constraint_matrix(model.geometry, x0);
  Eigen::Vector2d rhs(0.0, model.ion_mass * omega * omega / model.ion_charge);

  // Row scaling leaves the feasible set, and therefore its minimum-norm
  // point, unchanged; it only balances the 1/m and 1/m^2 rows for the rank test.
  for (int r = 0; r < 2; ++r) {
    const double n = a.row(r).norm();
    if (n > 0.0) {
      a.row(r) /= n;
      rhs(r) /= n;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 2 || sv(0) == 0.0 || sv(1) / sv(0) < 1e-10) {
    std::ostringstream msg;
    msg << "rank-deficient trapping constraints at x = " << x0 / units::um << " um";
    throw SingularConstraints(msg.str(), x0);
  }
  return {x0, svd.solve(rhs), f0};
}

BaseSolutionSet generate_base_solutions(const TrapModel& model, double x_a, double x_b, int count,
                                        double f0) {
  if (count < 2) throw ShuttleError("base solution count must be >= 2");
  BaseSolutionSet set;
  set.frequency = f0;
  set.positions.resize(count);
  for (int i = 0; i < count; ++i) set.positions(i) = x_a + (x_b - x_a) * i / double(count - 1);
  set.positions(count - 1) = x_b;
  set.spacing = (x_b - x_a) / double(count - 1);
  set.voltages.resize(model.geometry.count(), count);
  for (int i = 0; i < count; ++i)
    set.voltages.col(i) = solve_least_norm_solution(model, set.positions(i), f0).voltages;
  return set;
}

}  // namespace shuttle
