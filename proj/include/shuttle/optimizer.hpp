#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace shuttle {

struct NelderMeadConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  Eigen::VectorXd initial_step;  // per coordinate; size 1 broadcasts
  int max_evals = 150;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless rho > 0, chi > 1, 0 < gamma < 1, 0 < sigma < 1.
  void validate() const;
};

struct Evaluation {
  Eigen::VectorXd x;
  double value;
};

struct NelderMeadResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  std::vector<Evaluation> history;  // every objective call, in order
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Fixed-coefficient Nelder-Mead from the axis-aligned simplex x0 + step_i e_i.
/// Stops after exactly max_evals objective calls; there is no tolerance test.
NelderMeadResult nelder_mead_run(const Objective& objective, const Eigen::VectorXd& x0,
                                 const NelderMeadConfig& cfg);

}  // namespace shuttle
