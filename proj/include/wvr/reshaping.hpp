#pragma once

// Transverse beam-profile evolution under repeated post-selection.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wvr {

/// Photon number density n(x) [photons/m] sampled on a uniform grid.
class BeamProfile {
 public:
  static constexpr std::size_t kDefaultPoints = 4097;
  static constexpr double kDefaultHalfWidthSigmas = 6.0;

  /// Throws InvalidArgument unless grid_min < grid_max, density.size() >= 3 and
  /// every value is finite and nonnegative.
  BeamProfile(double grid_min, double grid_max, std::vector<double> density);

  /// Gaussian of rms width sigma holding `total` photons, centred on `center`,
  /// on [center - h*sigma, center + h*sigma].
  static BeamProfile gaussian(double sigma, double total, double center = 0.0,
                              std::size_t n_points = kDefaultPoints,
                              double half_width_sigmas = kDefaultHalfWidthSigmas);

  /// Same grid as *this, density replaced by f(x, n(x)) pointwise.
  BeamProfile mapped(const std::function<double(double, double)>& f) const;

  double grid_min() const noexcept { return min_; }
  double grid_max() const noexcept { return max_; }
  std::size_t size() const noexcept { return density_.size(); }
  double spacing() const noexcept { return (max_ - min_) / static_cast<double>(size() - 1); }
  double x(std::size_t i) const noexcept { return min_ + static_cast<double>(i) * spacing(); }
  std::span<const double> density() const noexcept { return density_; }

  /// Trapezoid integral of n(x).
  double integral() const;

 private:
  double min_;
  double max_;
  std::vector<double> density_;
};

struct ReshapingParams {
  double phi = 0.0;    ///< relative Sagnac phase [rad]
  double k = 0.0;      ///< transverse kick [rad/m]
  double gamma = 0.0;  ///< loss per pass
  bool parity_flip = false;

  /// Throws InvalidArgument for non-finite phi/k or gamma outside [0, 1).
  void validate() const;

  /// k*sigma > 0.5: outside the weak regime.
  bool strong_coupling(double sigma) const noexcept { return k * sigma > 0.5; }
};

/// Density detected on pass r >= 1:
///   n0(x) (1-gamma)^r sin^2(phi/2 - kx) cos^{2(r-1)}(phi/2 - kx).
/// With parity_flip the beam is mirrored on every pass, so the survival factors
/// alternate between cos^2(phi/2 + kx) and cos^2(phi/2 - kx).
BeamProfile density_pass(const BeamProfile& n0, const ReshapingParams& params, int r);

/// Sum of density_pass over passes 1..r, evaluated in closed form (explicit sum
/// when parity_flip is set).
BeamProfile density_accumulated(const BeamProfile& n0, const ReshapingParams& params, int r);

/// r -> infinity limit n0 (1-gamma) / (1 + gamma cot^2(phi/2 - kx)); n0 itself
/// for gamma = 0. Ignores parity_flip.
BeamProfile density_infinite(const BeamProfile& n0, const ReshapingParams& params);

/// Lossless infinite-pass profile with the beam flipped on consecutive passes:
///   n0 sin^2(a-kx)(1 + cos^2(a-kx)) / (1 - cos^2(a-kx) cos^2(a+kx)),  a = phi/2.
/// Throws LossyFlipUnsupported when gamma > 0.
BeamProfile density_flipped_infinite(const BeamProfile& n0, const ReshapingParams& params);

/// Centroid of the profile. Throws EmptyProfile when the integral is below 1e-300.
double centroid_shift(const BeamProfile& profile);

/// Ratio of centroid * sqrt(count) after r passes to the same after one pass.
/// sigma_detector only rescales both SNRs and cancels; it must be positive.
double reshaped_snr_boost(const BeamProfile& n0, const ReshapingParams& params, int r,
                          double sigma_detector);

/// Ratio of count-weighted centroid (total difference signal) after r passes to
/// the same after one pass.
double reshaped_signal_boost(const BeamProfile& n0, const ReshapingParams& params, int r);

}  // namespace wvr
