#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <memory>
#include <vector>

namespace shuttle {

/// Low-pass FIR requirement at a given sample rate.
struct FirSpec {
  double sample_rate;      // Hz
  double pass_band;        // Hz
  double stop_band;        // Hz
  double attenuation_db;   // minimum stop-band attenuation

  auto operator<=>(const FirSpec&) const = default;
};

/// Kaiser-windowed sinc, odd length, unity DC gain. The Kaiser length estimate
/// is grown until the designed response meets the attenuation on a dense
/// stop-band grid. Throws InfeasibleSpec when pass >= stop or stop >= Nyquist.
Eigen::VectorXd design_kaiser_lowpass(const FirSpec& spec);

/// Cached design; safe to call concurrently.
std::shared_ptr<const Eigen::VectorXd> fir_taps(const FirSpec& spec);

/// Magnitude |H(f)| of an FIR at frequency f.
double fir_magnitude(const Eigen::VectorXd& taps, double f, double sample_rate);

/// Zero-phase filtering of one sequence: full convolution with edge-value
/// extension, trimmed symmetrically by the group delay so output aligns with input.
Eigen::VectorXd fir_filter_aligned(const Eigen::VectorXd& taps, const Eigen::VectorXd& x);

/// One direct-form-II-transposed second-order section.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Digital Butterworth low-pass as cascaded biquads (bilinear transform,
/// pre-warped so the -3 dB point lands at `cutoff`). `order` must be even.
class ButterworthLowpass {
 public:
  ButterworthLowpass(int order, double cutoff, double sample_rate);

  /// Filter a sequence with the internal state initialised to steady state at x(0).
  Eigen::VectorXd filter(const Eigen::VectorXd& x) const;

  std::complex<double> response(double f) const;
  const std::vector<Biquad>& sections() const { return sections_; }
  double sample_rate() const { return fs_; }

 private:
  std::vector<Biquad> sections_;
  double fs_;
};

}  // namespace shuttle
