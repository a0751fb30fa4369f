#include <doctest.h>

#include "oracles.hpp"
#include "shuttle/constants.hpp"
#include "shuttle/errors.hpp"
#include "shuttle/filters.hpp"

#include <cmath>
#include <complex>
#include <thread>
#include <vector>

using namespace shuttle;

namespace {

const FirSpec dac_spec{1.0 / 30e-9, 12e6, 15e6, 100.0};

}  // namespace

TEST_CASE("Kaiser design: odd, symmetric, unity DC") {
  const Eigen::VectorXd h = design_kaiser_lowpass(dac_spec);
  CHECK(h.size() % 2 == 1);
  CHECK(h.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((h - h.reverse()).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("FFT of the taps meets the band specification") {
  const Eigen::VectorXd h = design_kaiser_lowpass(dac_spec);
  const std::size_t n = 1 << 16;
  const auto spectrum = oracle::fft_padded(h, n);
  double worst_stop = 0.0, max_pass = 0.0, min_pass = 1e9;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = dac_spec.sample_rate * double(k) / double(n);
    const double mag = std::abs(spectrum[k]);
    if (f >= 15e6) worst_stop = std::max(worst_stop, mag);
    if (f <= 12e6) {
      max_pass = std::max(max_pass, mag);
      min_pass = std::min(min_pass, mag);
    }
  }
  CHECK(-20.0 * std::log10(worst_stop) >= 100.0);
  CHECK(20.0 * std::log10(max_pass / min_pass) <= 0.1);
  // fir_magnitude agrees with the FFT bins.
  for (std::size_t k : {0ul, 1000ul, 20000ul, 31000ul})
    CHECK(fir_magnitude(h, dac_spec.sample_rate * double(k) / double(n), dac_spec.sample_rate) ==
          doctest::Approx(std::abs(spectrum[k])).epsilon(1e-9));
}

TEST_CASE("infeasible FIR specifications") {
  CHECK_THROWS_AS(design_kaiser_lowpass({1.0 / 30e-9, 15e6, 12e6, 100.0}), InfeasibleSpec);
  CHECK_THROWS_AS(design_kaiser_lowpass({1.0 / 30e-9, 12e6, 17e6, 100.0}), InfeasibleSpec);
  CHECK_THROWS_AS(design_kaiser_lowpass({1.0 / 30e-9, 0.0, 10e6, 100.0}), InfeasibleSpec);
}

TEST_CASE("tap cache is shared and thread safe") {
  const auto a = fir_taps(dac_spec);
  std::vector<std::shared_ptr<const Eigen::VectorXd>> got(8);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { got[i] = fir_taps(dac_spec); });
  for (auto& t : threads) t.join();
  for (const auto& g : got) CHECK(g.get() == a.get());
}

TEST_CASE("aligned FIR filtering") {
  const Eigen::VectorXd h = design_kaiser_lowpass(dac_spec);
  SUBCASE("constant input is preserved at the edges") {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(50, -1.25);
    CHECK((fir_filter_aligned(h, x).array() + 1.25).abs().maxCoeff() < 1e-13);
  }
  SUBCASE("impulse response is centred on the impulse") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(301);
    x(150) = 1.0;
    const Eigen::VectorXd y = fir_filter_aligned(h, x);
    const Eigen::Index half = h.size() / 2;
    for (Eigen::Index k = -half; k <= half; ++k) CHECK(y(150 + k) == doctest::Approx(h(half + k)));
  }
  SUBCASE("slow sinusoid passes with zero phase") {
    const int n = 2000;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = std::sin(kTwoPi * 1e6 * i * 30e-9);
    const Eigen::VectorXd y = fir_filter_aligned(h, x);
    CHECK((y - x).segment(200, n - 400).cwiseAbs().maxCoeff() < 1e-4);
  }
}

namespace {

// RK4 integration of the analog Butterworth cascade driven by a unit step.
double analog_step(int order, double fc, double t_end, int steps_per_ns) {
  const double wc = kTwoPi * fc;
  const int sections = order / 2;
  std::vector<double> y(sections), v(sections);
  auto deriv = [&](const std::vector<double>& yy, const std::vector<double>& vv, std::vector<double>& dy,
                   std::vector<double>& dv) {
    double in = 1.0;
    for (int i = 0; i < sections; ++i) {
      const double d = 2.0 * std::sin((2 * i + 1) * kPi / (2.0 * order));
      dy[i] = vv[i];
      dv[i] = wc * wc * (in - yy[i]) - d * wc * vv[i];
      in = yy[i];
    }
  };
  const int steps = int(t_end * 1e9) * steps_per_ns;
  const double h = t_end / steps;
  std::vector<double> k1y(sections), k1v(sections), k2y(sections), k2v(sections), k3y(sections),
      k3v(sections), k4y(sections), k4v(sections), ty(sections), tv(sections);
  for (int s = 0; s < steps; ++s) {
    deriv(y, v, k1y, k1v);
    for (int i = 0; i < sections; ++i) ty[i] = y[i] + 0.5 * h * k1y[i], tv[i] = v[i] + 0.5 * h * k1v[i];
    deriv(ty, tv, k2y, k2v);
    for (int i = 0; i < sections; ++i) ty[i] = y[i] + 0.5 * h * k2y[i], tv[i] = v[i] + 0.5 * h * k2v[i];
    deriv(ty, tv, k3y, k3v);
    for (int i = 0; i < sections; ++i) ty[i] = y[i] + h * k3y[i], tv[i] = v[i] + h * k3v[i];
    deriv(ty, tv, k4y, k4v);
    for (int i = 0; i < sections; ++i) {
      y[i] += h / 6 * (k1y[i] + 2 * k2y[i] + 2 * k3y[i] + k4y[i]);
      v[i] += h / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    }
  }
  return y.back();
}

}  // namespace

TEST_CASE("Butterworth response") {
  const double fs = 8.0 / 30e-9;
  const ButterworthLowpass lp(6, 1.3e6, fs);
  CHECK(lp.sections().size() == 3);
  CHECK(std::abs(lp.response(0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(lp.response(1.3e6)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  double prev = 2.0;
  for (double f = 0.0; f < 0.5 * fs; f += 1e6) {
    const double m = std::abs(lp.response(f));
    CHECK(m <= prev + 1e-15);
    prev = m;
  }
  // Analog Butterworth magnitude 1/sqrt(1 + (f/fc)^12) away from Nyquist.
  for (double f : {0.5e6, 2.5e6, 5e6})
    CHECK(std::abs(lp.response(f)) == doctest::Approx(1.0 / std::sqrt(1.0 + std::pow(f / 1.3e6, 12))).epsilon(2e-3));
  CHECK_THROWS(ButterworthLowpass(5, 1.3e6, fs));
}

TEST_CASE("Butterworth steady-state start and step response against RK4") {
  const double fs = 8.0 / 30e-9;
  const ButterworthLowpass lp(6, 1.3e6, fs);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(200, 0.7);
  CHECK((lp.filter(flat).array() - 0.7).abs().maxCoeff() < 1e-12);

  Eigen::VectorXd step = Eigen::VectorXd::Ones(2000);
  step(0) = 0.0;
  const Eigen::VectorXd y = lp.filter(step);
  for (int k : {100, 200, 300, 500, 1000}) {
    // Bilinear sample k sees the step rising over the first interval; the
    // analog reference starts half a sample later.
    const double t = (k - 0.5) / fs;
    CHECK(std::abs(y(k) - analog_step(6, 1.3e6, t, 20)) < 2e-3);
  }
}
