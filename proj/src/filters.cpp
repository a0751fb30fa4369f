#include "shuttle/filters.hpp"

#include "shuttle/constants.hpp"
#include "shuttle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace shuttle {
namespace {

double kaiser_beta(double atten) {
  if (atten > 50.0) return 0.1102 * (atten - 8.7);
  if (atten >= 21.0) return 0.5842 * std::pow(atten - 21.0, 0.4) + 0.07886 * (atten - 21.0);
  return 0.0;
}

Eigen::VectorXd windowed_sinc(int length, double cutoff_norm, double beta) {
  // cutoff_norm is the cutoff as a fraction of the sample rate.
  Eigen::VectorXd h(length);
  const double mid = 0.5 * (length - 1);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  for (int n = 0; n < length; ++n) {
    const double t = n - mid;
    const double arg = 2.0 * cutoff_norm * t;
    const double sinc = (t == 0.0) ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    const double r = t / mid;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h(n) = 2.0 * cutoff_norm * sinc * w;
  }
  return h / h.sum();
}

double worst_stopband_db(const Eigen::VectorXd& h, const FirSpec& spec) {
  const double nyq = 0.5 * spec.sample_rate;
  const int grid = 2048;
  double worst = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double f = spec.stop_band + (nyq - spec.stop_band) * i / grid;
    worst = std::max(worst, fir_magnitude(h, f, spec.sample_rate));
  }
  return -20.0 * std::log10(worst);
}

}  // namespace

double fir_magnitude(const Eigen::VectorXd& taps, double f, double fs) {
  const double w = kTwoPi * f / fs;
  std::complex<double> acc = 0.0;
  for (Eigen::Index n = 0; n < taps.size(); ++n) acc += taps(n) * std::polar(1.0, -w * double(n));
  return std::abs(acc);
}

Eigen::VectorXd design_kaiser_lowpass(const FirSpec& spec) {
  const double nyq = 0.5 * spec.sample_rate;
  if (!(spec.pass_band > 0.0 && spec.pass_band < spec.stop_band))
    throw InfeasibleSpec("FIR pass band must be positive and below the stop band");
  if (spec.stop_band >= nyq) throw InfeasibleSpec("FIR stop band at or beyond Nyquist");

  const double transition = kTwoPi * (spec.stop_band - spec.pass_band) / spec.sample_rate;
  int length = static_cast<int>(std::ceil((spec.attenuation_db - 7.95) / (2.285 * transition))) + 1;
  if (length % 2 == 0) ++length;
  const double cutoff = 0.5 * (spec.pass_band + spec.stop_band) / spec.sample_rate;
  const double beta = kaiser_beta(spec.attenuation_db);
  for (int attempt = 0; attempt < 64; ++attempt, length += 2) {
    Eigen::VectorXd h = windowed_sinc(length, cutoff, beta);
    if (worst_stopband_db(h, spec) >= spec.attenuation_db) return h;
  }
  throw InfeasibleSpec("FIR design did not reach the requested attenuation");
}

std::shared_ptr<const Eigen::VectorXd> fir_taps(const FirSpec& spec) {
  static std::mutex mutex;
  static std::map<FirSpec, std::shared_ptr<const Eigen::VectorXd>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(spec);
  if (it != cache.end()) return it->second;
  auto taps = std::make_shared<const Eigen::VectorXd>(design_kaiser_lowpass(spec));
  cache.emplace(spec, taps);
  return taps;
}

Eigen::VectorXd fir_filter_aligned(const Eigen::VectorXd& taps, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = taps.size();
  const Eigen::Index delay = (m - 1) / 2;
  Eigen::VectorXd y(n);
  if (n == 0) return y;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::Index src = i + delay - k;
      src = std::clamp<Eigen::Index>(src, 0, n - 1);
      acc += taps(k) * x(src);
    }
    y(i) = acc;
  }
  return y;
}

ButterworthLowpass::ButterworthLowpass(int order, double cutoff, double fs) : fs_(fs) {
  if (order <= 0 || order % 2 != 0) throw InfeasibleSpec("Butterworth order must be even");
  if (!(cutoff > 0.0 && cutoff < 0.5 * fs)) throw InfeasibleSpec("Butterworth cutoff beyond Nyquist");
  const double k = std::tan(kPi * cutoff / fs);
  const double k2 = k * k;
  for (int i = 1; i <= order / 2; ++i) {
    const double damping = 2.0 * std::sin((2 * i - 1) * kPi / (2.0 * order));
    const double norm = 1.0 + damping * k + k2;
    Biquad s;
    s.b0 = k2 / norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) / norm;
    s.a2 = (1.0 - damping * k + k2) / norm;
    sections_.push_back(s);
  }
}

Eigen::VectorXd ButterworthLowpass::filter(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = x;
  if (x.size() == 0) return y;
  for (const Biquad& s : sections_) {
    const double u0 = y(0);  // unity DC gain: steady-state output equals input
    double z1 = (1.0 - s.b0) * u0;
    double z2 = (s.b2 - s.a2) * u0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double in = y(i);
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      y(i) = out;
    }
  }
  return y;
}

std::complex<double> ButterworthLowpass::response(double f) const {
  const std::complex<double> z1 = std::polar(1.0, -kTwoPi * f / fs_);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections_) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

}  // namespace shuttle
