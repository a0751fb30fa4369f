#include "shuttle/sidebands.hpp"

#include "shuttle/errors.hpp"
#include "shuttle/numerics.hpp"
#include "shuttle/optimizer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace shuttle {

double lamb_dicke_parameter(double wavelength, double mass, double trap_frequency_hz) {
  return (kTwoPi / wavelength) * std::sqrt(kHbar / (2.0 * mass * kTwoPi * trap_frequency_hz));
}

double MotionalPopulations::mean() const {
  double m = 0.0;
  for (Eigen::Index n = 0; n < p.size(); ++n) m += double(n) * p(n);
  return m;
}

double MotionalPopulations::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (Eigen::Index n = 0; n < p.size(); ++n) v += (double(n) - mu) * (double(n) - mu) * p(n);
  return v;
}

MotionalPopulations populations_thermal(double nbar, int cutoff) {
  if (nbar < 0.0) throw ShuttleError("mean quanta must be non-negative");
  MotionalPopulations out{Eigen::VectorXd::Zero(cutoff + 1)};
  const double r = nbar / (nbar + 1.0);
  double term = 1.0 / (nbar + 1.0);
  for (int n = 0; n <= cutoff; ++n, term *= r) out.p(n) = term;
  return out;
}

MotionalPopulations populations_coherent(double alpha2, int cutoff) {
  if (alpha2 < 0.0) throw ShuttleError("|alpha|^2 must be non-negative");
  MotionalPopulations out{Eigen::VectorXd::Zero(cutoff + 1)};
  if (alpha2 == 0.0) {
    out.p(0) = 1.0;
    return out;
  }
  const double log_a = std::log(alpha2);
  for (int n = 0; n <= cutoff; ++n) out.p(n) = std::exp(-alpha2 + n * log_a - std::lgamma(n + 1.0));
  return out;
}

MotionalPopulations populations_displaced_thermal(double alpha2, double nth, int cutoff) {
  if (alpha2 < 0.0 || nth < 0.0) throw ShuttleError("populations need non-negative quanta");
  if (nth == 0.0) return populations_coherent(alpha2, cutoff);
  if (alpha2 == 0.0) return populations_thermal(nth, cutoff);
  // p_n = e^{-|a|^2/(1+n)}/(1+n) sum_k C(n,k) r^{n-k} beta^k / k!
  // with r = n/(1+n), beta = |a|^2/(1+n)^2; every term is positive.
  const double log_r = std::log(nth / (1.0 + nth));
  const double log_beta = std::log(alpha2 / ((1.0 + nth) * (1.0 + nth)));
  const double log_pref = -alpha2 / (1.0 + nth) - std::log1p(nth);
  MotionalPopulations out{Eigen::VectorXd::Zero(cutoff + 1)};
  std::vector<double> logs(cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) {
    double lt = n * log_r;  // k = 0
    logs[0] = lt;
    double top = lt;
    for (int k = 0; k < n; ++k) {
      lt += std::log(double(n - k)) - 2.0 * std::log(double(k + 1)) + log_beta - log_r;
      logs[k + 1] = lt;
      top = std::max(top, lt);
    }
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) acc += std::exp(logs[k] - top);
    out.p(n) = std::exp(log_pref + top + std::log(acc));
  }
  return out;
}

MotionalPopulations populations_displaced_thermal_operator(double alpha2, double nth, int cutoff) {
  if (alpha2 < 0.0 || nth < 0.0) throw ShuttleError("populations need non-negative quanta");
  const double alpha = std::sqrt(alpha2);
  const int pad = 40 + static_cast<int>(std::ceil(4.0 * alpha2 + 10.0 * alpha + 25.0 * nth));
  const int dim = cutoff + 1 + pad;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
  // D = exp(alpha (a^dag - a)); the generator is anti-Hermitian, so
  // K = i alpha (a^dag - a) is Hermitian and D = exp(-i K).
  const Eigen::MatrixXcd k = std::complex<double>(0.0, 1.0) * (alpha * (a.transpose() - a)).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k);
  const Eigen::VectorXcd phases =
      (es.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0.0, -1.0)).array().exp();
  const Eigen::MatrixXcd d = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();

  const Eigen::VectorXd rho_th = populations_thermal(nth, dim - 1).p;
  // diag(D rho D^dag)_n = sum_k |D_nk|^2 rho_k
  const Eigen::MatrixXd weights = d.cwiseAbs2();
  MotionalPopulations out{(weights * rho_th).head(cutoff + 1)};
  return out;
}

int cutoff_for(double alpha2, double nth, int min_cutoff, int max_cutoff) {
  const double mean = alpha2 + nth;
  const double sd = std::sqrt(nth * (nth + 1.0) + alpha2 * (2.0 * nth + 1.0));
  const double want = std::ceil(mean + 20.0 * sd + 20.0);
  return static_cast<int>(std::clamp(want, double(min_cutoff), double(std::max(min_cutoff, max_cutoff))));
}

MotionalPopulations populations_for_result(const TransportResult& r, int min_cutoff) {
  const int cutoff = cutoff_for(r.coherent_quanta, r.thermal_quanta, min_cutoff);
  MotionalPopulations pop = populations_displaced_thermal(r.coherent_quanta, r.thermal_quanta, cutoff);
  const double missing = pop.deficit();
  if (missing > 0.0) pop.p(cutoff) += missing;
  return pop;
}

double sideband_coupling(const SidebandParams& params, int order, int n) {
  const double g0 = params.carrier_coupling;
  const double eta = params.lamb_dicke;
  if (order == 1) return eta * g0 * std::sqrt(double(n));
  if (order == 2) return 0.5 * eta * eta * g0 * std::sqrt(double(n) * double(n - 1));
  throw ShuttleError("sideband order must be 1 or 2");
}

double rsb_lineshape(const MotionalPopulations& pop, const SidebandParams& params, int order,
                     double detuning) {
  if (order != 1 && order != 2) throw ShuttleError("sideband order must be 1 or 2");
  const double t = params.probe_time(order);
  const double d2 = detuning * detuning;
  double r = 0.0;
  for (int n = order; n <= pop.cutoff(); ++n) {
    const double g = sideband_coupling(params, order, n);
    const double four_g2 = 4.0 * g * g;
    const double omega2 = four_g2 + d2;
    if (omega2 == 0.0) continue;
    const double s = std::sin(0.5 * std::sqrt(omega2) * t);
    r += pop.p(n) * four_g2 / omega2 * s * s;
  }
  return r;
}

double bsb_rabi_signal(const MotionalPopulations& pop, const SidebandParams& params, double t) {
  if (t < 0.0) throw ShuttleError("probe time must be non-negative");
  const double base = params.lamb_dicke * params.carrier_coupling * t;
  double r = 0.0;
  for (int n = 0; n <= pop.cutoff(); ++n) {
    const double s = std::sin(base * std::sqrt(double(n + 1)));
    r += pop.p(n) * s * s;
  }
  return r;
}

SidebandBands default_bands(const SidebandParams& params, double width_factor, int points) {
  auto band = [&](double t) {
    const double half = 0.5 * kTwoPi * width_factor / t;
    return numerics::linspace(-half, half, points);
  };
  return {band(params.probe_time_1), band(params.probe_time_2)};
}

SidebandScan scan_sideband(const MotionalPopulations& pop, const SidebandParams& params, int order,
                           const Eigen::VectorXd& detunings) {
  SidebandScan scan;
  scan.order = order;
  scan.detunings = detunings;
  scan.excitation.resize(detunings.size());
  for (Eigen::Index i = 0; i < detunings.size(); ++i)
    scan.excitation(i) = rsb_lineshape(pop, params, order, detunings(i));
  return scan;
}

double integrate_sideband(const SidebandScan& scan) {
  const auto& d = scan.detunings;
  if (d.size() < 2) throw DegenerateGrid("sideband integral needs at least two detunings");
  if (!(d(d.size() - 1) - d(0) > 0.0)) throw DegenerateGrid("sideband detuning span is zero");
  return numerics::trapezoid(d, scan.excitation) / kTwoPi / units::kHz;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SidebandScan measure_with_shots(const SidebandScan& scan, int shots, std::uint64_t seed) {
  if (shots < 1) throw ShuttleError("shots must be >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  SidebandScan out = scan;
  out.shots = shots;
  for (Eigen::Index i = 0; i < scan.excitation.size(); ++i) {
    const double p = std::clamp(scan.excitation(i), 0.0, 1.0);
    std::binomial_distribution<int> draw(shots, p);
    out.excitation(i) = double(draw(rng)) / double(shots);
  }
  return out;
}

double loss_for_populations(const MotionalPopulations& pop, const SidebandParams& params,
                            const SidebandBands& bands, const LossWeights& weights,
                            const Measurement& measurement) {
  double integral[2];
  for (int order = 1; order <= 2; ++order) {
    SidebandScan scan = scan_sideband(pop, params, order, bands[order]);
    if (measurement.shots > 0)
      scan = measure_with_shots(scan, measurement.shots, splitmix64(measurement.seed) + order);
    integral[order - 1] = integrate_sideband(scan);
  }
  const double second = weights.alpha2 * integral[1];
  return weights.alpha1 * integral[0] + second * second;
}

LossValue loss_function(const std::vector<TransportResult>& results, const SidebandParams& params,
                        const SidebandBands& bands, const LossWeights& weights,
                        const Measurement& measurement) {
  LossValue value;
  value.total = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MotionalPopulations pop = populations_for_result(results[i], params.fock_cutoff);
    Measurement m = measurement;
    m.seed = splitmix64(measurement.seed ^ (0x5bd1e995ULL * (i + 1)));
    const double loss = loss_for_populations(pop, params, bands, weights, m);
    value.per_offset.emplace_back(results[i].hold_offset, loss);
    value.total = (i == 0) ? loss : std::max(value.total, loss);
  }
  return value;
}

double loss_upper_bound(const SidebandParams& params, const SidebandBands& bands,
                        const LossWeights& weights, int cutoff) {
  double bound[2];
  for (int order = 1; order <= 2; ++order) {
    const auto& d = bands[order];
    const double width_hz = (d(d.size() - 1) - d(0)) / kTwoPi;
    const double g_max = sideband_coupling(params, order, cutoff);
    bound[order - 1] = std::min(width_hz, g_max) / units::kHz;
  }
  const double second = weights.alpha2 * bound[1];
  return weights.alpha1 * bound[0] + second * second;
}

Eigen::VectorXd default_quanta_grid(double lo, double hi, int points) {
  Eigen::VectorXd grid(points);
  for (int i = 0; i < points; ++i)
    grid(i) = lo * std::pow(hi / lo, points > 1 ? double(i) / double(points - 1) : 0.0);
  return grid;
}

std::vector<LossCurvePoint> loss_to_quanta_curve(PopulationKind kind, const SidebandParams& params,
                                                 const SidebandBands& bands,
                                                 const LossWeights& weights,
                                                 const Eigen::VectorXd& nbar_grid) {
  std::vector<LossCurvePoint> curve;
  auto add = [&](double nbar) {
    const int cutoff = kind == PopulationKind::thermal ? cutoff_for(0.0, nbar, params.fock_cutoff, 4000)
                                                       : cutoff_for(nbar, 0.0, params.fock_cutoff, 4000);
    const MotionalPopulations pop = kind == PopulationKind::thermal ? populations_thermal(nbar, cutoff)
                                                                    : populations_coherent(nbar, cutoff);
    curve.push_back({nbar, loss_for_populations(pop, params, bands, weights)});
  };
  add(0.0);
  for (double nbar : nbar_grid) add(nbar);
  return curve;
}

double sideband_thermometry(double r1, double b1) {
  if (!(r1 >= 0.0 && r1 < b1 && b1 <= 1.0))
    throw InvalidRatio("sideband thermometry needs 0 <= r1 < b1 <= 1");
  const double ratio = r1 / b1;
  return ratio / (1.0 - ratio);
}

ThermometryPeaks thermometry_peaks(const MotionalPopulations& pop, const SidebandParams& params,
                                   double t) {
  SidebandParams p = params;
  p.probe_time_1 = t;
  return {rsb_lineshape(pop, p, 1, 0.0), bsb_rabi_signal(pop, p, t)};
}

DisplacedThermalFit fit_displaced_thermal(const Eigen::VectorXd& times, const Eigen::VectorXd& signal,
                                          const SidebandParams& params) {
  // Fit sqrt of each quanta so the search is unconstrained.
  const auto model_sse = [&](const Eigen::VectorXd& q) {
    const double a2 = q(0) * q(0);
    const double nth = q(1) * q(1);
    const auto pop = populations_displaced_thermal(a2, nth, cutoff_for(a2, nth, params.fock_cutoff));
    double sse = 0.0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
      const double e = bsb_rabi_signal(pop, params, times(i)) - signal(i);
      sse += e * e;
    }
    return sse;
  };
  NelderMeadConfig cfg;
  cfg.initial_step = Eigen::VectorXd::Constant(2, 0.2);
  cfg.max_evals = 400;
  Eigen::VectorXd start = Eigen::VectorXd::Constant(2, std::sqrt(0.2));
  NelderMeadResult best = nelder_mead_run(model_sse, start, cfg);
  // Restart once around the first optimum to tighten the simplex.
  cfg.initial_step = Eigen::VectorXd::Constant(2, 0.02);
  NelderMeadResult refined = nelder_mead_run(model_sse, best.best, cfg);
  if (refined.best_value < best.best_value) best = refined;
  return {best.best(0) * best.best(0), best.best(1) * best.best(1), best.best_value};
}

}  // namespace shuttle
