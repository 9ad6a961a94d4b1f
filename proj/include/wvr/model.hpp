#pragma once

// Closed-form weak-value and photon-recycling quantities.

#include <array>
#include <complex>
#include <vector>

namespace wvr {

using Complex = std::complex<double>;

/// Normalized state of the which-path qubit in the {CW, CCW} basis.
class TwoPathState {
 public:
  /// Normalizes the given amplitudes; throws InvalidArgument for the zero vector.
  TwoPathState(Complex amp_cw, Complex amp_ccw);

  Complex cw() const noexcept { return cw_; }
  Complex ccw() const noexcept { return ccw_; }

  /// <this|other>
  Complex overlap(const TwoPathState& other) const noexcept;

 private:
  Complex cw_;
  Complex ccw_;
};

/// State inside the Sagnac after the input beam splitter with relative phase phi:
/// (e^{i phi/2}|CW> + i e^{-i phi/2}|CCW>)/sqrt(2).
TwoPathState sagnac_initial(double phi);

/// Ket whose bra is the dark-port projection (<CW| + i<CCW|)/sqrt(2).
TwoPathState sagnac_dark_port();

/// Hermitian 2x2 observable in the {CW, CCW} basis.
class PathOperator {
 public:
  using Matrix = std::array<std::array<Complex, 2>, 2>;

  /// Throws InvalidArgument unless m is Hermitian within 1e-12.
  explicit PathOperator(const Matrix& m);

  static PathOperator identity();
  /// diag(+1, -1)
  static PathOperator which_path();

  const Matrix& matrix() const noexcept { return m_; }

  /// <f|A|i>
  Complex matrix_element(const TwoPathState& f, const TwoPathState& i) const noexcept;

 private:
  Matrix m_;
};

/// <f|A|i> / <f|i>. Throws OverlapZero when |<f|i>| < 1e-14.
Complex weak_value(const TwoPathState& i, const TwoPathState& f, const PathOperator& a);

/// sin^2(phi/2)
double postselection_probability(double phi);

/// g sqrt(N) / sigma. Throws NonPositiveWidth when sigma <= 0.
double quantum_limited_snr(double g, double n, double sigma);

struct RecyclingParams {
  double p = 0.0;      ///< post-selection probability per pass
  double gamma = 0.0;  ///< optical loss per pass
  int r = 1;           ///< number of passes

  /// Throws InvalidArgument on 0<=p<=1, 0<=gamma<1, r>=1 violations.
  void validate() const;
};

/// 1 - (1-p)^r. Requires gamma == 0.
double recycled_power_fraction(const RecyclingParams& params);

/// Explicit sum of (1-p)^{n-1} p over n = 1..r. Requires gamma == 0.
double recycled_power_fraction_sum(const RecyclingParams& params);

/// sqrt((1 - (1-p)^r) / p). Requires gamma == 0; throws ZeroPostselection when p == 0.
double snr_gain(const RecyclingParams& params);

/// r -> infinity limit of snr_gain: 1/sqrt(p).
double snr_gain_limit(double p);

/// First-order expansion sqrt(r) (1 - (r-1) p/4). Requires p (r-1) < 1.
double snr_gain_small_p(double p, int r);

/// f_n = p (1-gamma)^n (1-p)^{n-1}, n = 1..r: one loop of loss precedes every
/// post-selection.
std::vector<double> detected_fraction_per_pass(const RecyclingParams& params);

}  // namespace wvr
