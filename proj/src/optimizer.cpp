#include "shuttle/optimizer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace shuttle {

void NelderMeadConfig::validate() const {
  if (!(reflection > 0.0)) throw std::invalid_argument("Nelder-Mead reflection must be > 0");
  if (!(expansion > 1.0)) throw std::invalid_argument("Nelder-Mead expansion must be > 1");
  if (!(contraction > 0.0 && contraction < 1.0))
    throw std::invalid_argument("Nelder-Mead contraction must be in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("Nelder-Mead shrink must be in (0, 1)");
  if (max_evals < 1) throw std::invalid_argument("Nelder-Mead needs at least one evaluation");
}

namespace {

class BudgetedObjective {
 public:
  BudgetedObjective(const Objective& f, int budget, NelderMeadResult& out)
      : f_(f), budget_(budget), out_(out) {}

  bool exhausted() const { return static_cast<int>(out_.history.size()) >= budget_; }

  // Returns false without calling f when the budget is spent.
  bool operator()(const Eigen::VectorXd& x, double& value) {
    if (exhausted()) return false;
    value = f_(x);
    out_.history.push_back({x, value});
    if (out_.history.size() == 1 || value < out_.best_value) {
      out_.best = x;
      out_.best_value = value;
    }
    return true;
  }

 private:
  const Objective& f_;
  int budget_;
  NelderMeadResult& out_;
};

}  // namespace

NelderMeadResult nelder_mead_run(const Objective& objective, const Eigen::VectorXd& x0,
                                 const NelderMeadConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x0.size();
  if (n < 1) throw std::invalid_argument("Nelder-Mead needs at least one dimension");
  Eigen::VectorXd step = cfg.initial_step;
  if (step.size() == 1) step = Eigen::VectorXd::Constant(n, step(0));
  if (step.size() != n) throw std::invalid_argument("initial_step size does not match dimension");

  NelderMeadResult result;
  BudgetedObjective eval(objective, cfg.max_evals, result);

  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  simplex.reserve(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) {
    Eigen::VectorXd x = x0;
    if (i > 0) x(i - 1) += step(i - 1);
    double fx;
    if (!eval(x, fx)) return result;
    simplex.push_back(std::move(x));
    values.push_back(fx);
  }

  std::vector<std::size_t> order(n + 1);
  while (!eval.exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    {
      std::vector<Eigen::VectorXd> s2;
      std::vector<double> v2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        v2.push_back(values[i]);
      }
      simplex.swap(s2);
      values.swap(v2);
    }
    const double f_best = values.front();
    const double f_next_worst = values[n - 1];
    const double f_worst = values[n];

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= double(n);

    const Eigen::VectorXd xr = centroid + cfg.reflection * (centroid - simplex[n]);
    double fr;
    if (!eval(xr, fr)) break;

    if (fr < f_best) {
      const Eigen::VectorXd xe = centroid + cfg.expansion * (xr - centroid);
      double fe;
      if (!eval(xe, fe)) break;
      if (fe < fr) {
        simplex[n] = xe;
        values[n] = fe;
      } else {
        simplex[n] = xr;
        values[n] = fr;
      }
      continue;
    }
    if (fr < f_next_worst) {
      simplex[n] = xr;
      values[n] = fr;
      continue;
    }

    bool shrink = false;
    if (fr < f_worst) {
      const Eigen::VectorXd xc = centroid + cfg.contraction * (xr - centroid);
      double fc;
      if (!eval(xc, fc)) break;
      if (fc <= fr) {
        simplex[n] = xc;
        values[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      const Eigen::VectorXd xcc = centroid + cfg.contraction * (simplex[n] - centroid);
      double fcc;
      if (!eval(xcc, fcc)) break;
      if (fcc < f_worst) {
        simplex[n] = xcc;
        values[n] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (Eigen::Index i = 1; i <= n; ++i) {
        simplex[i] = simplex[0] + cfg.shrink * (simplex[i] - simplex[0]);
        if (!eval(simplex[i], values[i])) break;
      }
    }
  }
  return result;
}

}  // namespace shuttle
