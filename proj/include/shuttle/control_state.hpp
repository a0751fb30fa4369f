#pragma once

#include "shuttle/trap_model.hpp"

#include <Eigen/Core>

#include <cmath>

namespace shuttle {

/// Optimizer state: interior axial-frequency points (MHz) followed by
/// trajectory control points (dimensionless).
struct OptState {
  Eigen::VectorXd freq_points_mhz;
  Eigen::VectorXd traj_points;

  Eigen::Index n_f() const { return freq_points_mhz.size(); }
  Eigen::Index n_t() const { return traj_points.size(); }
  bool all_finite() const { return freq_points_mhz.allFinite() && traj_points.allFinite(); }

  /// Flat layout used in logs and by the optimizer: [f_1..f_nf, b_1..b_nt].
  Eigen::VectorXd flatten() const;
  static OptState unflatten(const Eigen::VectorXd& flat, Eigen::Index n_f);

  bool operator==(const OptState&) const = default;
};

/// Symmetric Bezier trajectory s(tau) with s(0)=0, s(1)=1 and zero end slopes.
struct TrajectoryCurve {
  Eigen::VectorXd coefficients;  // s_0..s_N
  Eigen::Index order() const { return coefficients.size() - 1; }
};

/// De Casteljau evaluation of a Bezier polynomial with coefficients `c`.
template <typename Scalar, typename Derived>
Scalar bezier_eval(const Eigen::MatrixBase<Derived>& c, Scalar tau) {
  const Eigen::Index n = c.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> work = c.template cast<Scalar>();
  const Scalar one_minus = Scalar(1) - tau;
  for (Eigen::Index level = n - 1; level > 0; --level)
    for (Eigen::Index j = 0; j < level; ++j) work(j) = one_minus * work(j) + tau * work(j + 1);
  return work(0);
}

inline double bezier_eval(const TrajectoryCurve& curve, double tau) {
  return bezier_eval<double>(curve.coefficients, tau);
}

/// Coefficients s_0=s_1=0, s_{j+1}=b_j, s_{N-j}=1-s_j; order N = 2 n_t + 3.
TrajectoryCurve build_trajectory(const Eigen::VectorXd& traj_points);

/// Control points reproducing the minimal ramp 3 tau^2 - 2 tau^3 at order
/// 2 n_t + 3 (degree elevation); the natural starting trajectory.
Eigen::VectorXd minimal_ramp_points(Eigen::Index n_t);

/// Piecewise-linear axial frequency along the path, pinned to the base
/// frequency at both ends.
class FrequencyProfile {
 public:
  FrequencyProfile(const Eigen::VectorXd& freq_points_hz, double base_frequency, double x_a,
                   double x_b);

  /// Frequency (Hz) at path fraction u = (x - x_a)/(x_b - x_a), clamped to [0, 1].
  double at_fraction(double u) const;
  /// Frequency (Hz) at position x.
  double at(double x) const { return at_fraction((x - x_a_) / (x_b_ - x_a_)); }

  const Eigen::VectorXd& knot_positions() const { return positions_; }
  const Eigen::VectorXd& knot_values() const { return values_; }
  double base_frequency() const { return base_; }

 private:
  Eigen::VectorXd positions_;
  Eigen::VectorXd values_;
  double base_;
  double x_a_, x_b_;
};

struct ConstraintPolicy {
  double freq_min_mhz = 1.5;
  double freq_max_mhz = 3.5;
  double voltage_budget = 10.0;  // V, symmetric
  double freq_penalty_scale = 10.0;
  double freq_penalty_sharpness = 4.0;  // 1/MHz
  double voltage_penalty_scale = 10.0;
  double voltage_penalty_sharpness = 2.0;  // 1/V
};

/// scale * (exp(sharpness * excess) - 1), zero for non-positive excess.
inline double exponential_penalty(double excess, double scale, double sharpness) {
  return excess > 0.0 ? scale * std::expm1(sharpness * excess) : 0.0;
}

/// Sum of exponential penalties of the frequency points outside the allowed range.
double state_penalty(const OptState& state, const ConstraintPolicy& policy);

/// Voltages rescaled by (f_target / f_base)^2; the well position is unchanged.
TrapSolution scale_solution_for_frequency(const TrapSolution& solution, double f_target);

}  // namespace shuttle
