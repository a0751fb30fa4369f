#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <utility>

namespace shuttle::numerics {

/// Result of a bracketed 1-D minimization.
struct Minimum {
  double x;
  double value;
};

/// Brent's method (golden section with parabolic steps) on [a, b].
template <typename F>
Minimum brent_minimize(F&& f, double a, double b, double xtol = 0.0, int max_iter = 200) {
  constexpr double kGolden = 0.3819660112501051;
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + xtol + 1e-300;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m >= x) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x >= m) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx};
}

/// Trapezoidal integral of samples y over abscissae x.
template <typename DerivedX, typename DerivedY>
double trapezoid(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  double acc = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) acc += 0.5 * (x(i) - x(i - 1)) * (y(i) + y(i - 1));
  return acc;
}

inline Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n) {
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

}  // namespace shuttle::numerics
