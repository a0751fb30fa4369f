#include "shuttle/control_state.hpp"

#include <algorithm>

namespace shuttle {

Eigen::VectorXd OptState::flatten() const {
  Eigen::VectorXd flat(n_f() + n_t());
  flat << freq_points_mhz, traj_points;
  return flat;
}

OptState OptState::unflatten(const Eigen::VectorXd& flat, Eigen::Index n_f) {
  return {flat.head(n_f), flat.tail(flat.size() - n_f)};
}

TrajectoryCurve build_trajectory(const Eigen::VectorXd& b) {
  const Eigen::Index n_t = b.size();
  const Eigen::Index order = 2 * n_t + 3;
  Eigen::VectorXd s(order + 1);
  s(0) = 0.0;
  s(1) = 0.0;
  for (Eigen::Index j = 0; j < n_t; ++j) s(j + 2) = b(j);
  for (Eigen::Index j = 0; j <= n_t + 1; ++j) s(order - j) = 1.0 - s(j);
  return {s};
}

Eigen::VectorXd minimal_ramp_points(Eigen::Index n_t) {
  Eigen::VectorXd c(4);
  c << 0.0, 0.0, 1.0, 1.0;
  while (c.size() < 2 * n_t + 4) {
    const Eigen::Index n = c.size() - 1;  // current order
    Eigen::VectorXd e(c.size() + 1);
    e(0) = c(0);
    e(n + 1) = c(n);
    for (Eigen::Index j = 1; j <= n; ++j) {
      const double w = double(j) / double(n + 1);
      e(j) = w * c(j - 1) + (1.0 - w) * c(j);
    }
    c = e;
  }
  return c.segment(2, n_t);
}

FrequencyProfile::FrequencyProfile(const Eigen::VectorXd& f, double base, double x_a, double x_b)
    : base_(base), x_a_(x_a), x_b_(x_b) {
  const Eigen::Index n = f.size();
  positions_.resize(n + 2);
  values_.resize(n + 2);
  for (Eigen::Index j = 0; j <= n + 1; ++j) positions_(j) = x_a + (x_b - x_a) * double(j) / double(n + 1);
  values_(0) = base;
  values_.segment(1, n) = f;
  values_(n + 1) = base;
}

double FrequencyProfile::at_fraction(double u) const {
  const Eigen::Index segments = values_.size() - 1;
  if (u <= 0.0) return values_(0);
  if (u >= 1.0) return values_(segments);
  const double pos = u * double(segments);
  const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), segments - 1);
  const double w = pos - double(j);
  return (1.0 - w) * values_(j) + w * values_(j + 1);
}

double state_penalty(const OptState& state, const ConstraintPolicy& policy) {
  double total = 0.0;
  for (double f : state.freq_points_mhz) {
    const double excess = std::max(policy.freq_min_mhz - f, f - policy.freq_max_mhz);
    total += exponential_penalty(excess, policy.freq_penalty_scale, policy.freq_penalty_sharpness);
  }
  return total;
}

TrapSolution scale_solution_for_frequency(const TrapSolution& sol, double f_target) {
  const double r = f_target / sol.axial_frequency;
  return {sol.well_position, sol.voltages * (r * r), f_target};
}

}  // namespace shuttle
