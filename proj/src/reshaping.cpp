#include "wvr/reshaping.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "wvr/errors.hpp"
#include "wvr/kernels.hpp"

namespace wvr {

namespace {

struct Trig {
  double s;  // sin^2
  double c;  // cos^2
};

Trig trig_sq(double angle) noexcept {
  const double sn = std::sin(angle);
  const double cs = std::cos(angle);
  return {sn * sn, cs * cs};
}

void require_pass(int r) {
  if (r < 1) throw InvalidArgument("pass index must be at least 1");
}

// Survival through passes 1..j-1 for a photon detected at position y on pass j
// when the profile flips every pass: the factors run backwards from pass j-1 as
// cos^2(a+ky), cos^2(a-ky), ...
double flipped_survival(const Trig& minus, const Trig& plus, int j) noexcept {
  double out = 1.0;
  for (int back = 1; back < j; ++back) out *= (back % 2 == 1) ? plus.c : minus.c;
  return out;
}

}  // namespace

BeamProfile::BeamProfile(double grid_min, double grid_max, std::vector<double> density)
    : min_(grid_min), max_(grid_max), density_(std::move(density)) {
  if (!(grid_min < grid_max) || !std::isfinite(grid_min) || !std::isfinite(grid_max)) {
    throw InvalidArgument("beam profile grid needs finite bounds with min < max");
  }
  if (density_.size() < 3) throw InvalidArgument("beam profile grid needs at least 3 points");
  for (double v : density_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("beam profile density must be finite and nonnegative");
    }
  }
}

BeamProfile BeamProfile::gaussian(double sigma, double total, double center, std::size_t n_points,
                                  double half_width_sigmas) {
  if (!(sigma > 0.0)) throw NonPositiveWidth("Gaussian width must be positive");
  if (!(total >= 0.0)) throw InvalidArgument("photon number must be nonnegative");
  if (n_points < 3) throw InvalidArgument("beam profile grid needs at least 3 points");
  const double lo = center - half_width_sigmas * sigma;
  const double hi = center + half_width_sigmas * sigma;
  const double dx = (hi - lo) / static_cast<double>(n_points - 1);
  const double peak = total / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  std::vector<double> density(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double u = (lo + static_cast<double>(i) * dx - center) / sigma;
    density[i] = peak * std::exp(-0.5 * u * u);
  }
  return {lo, hi, std::move(density)};
}

BeamProfile BeamProfile::mapped(const std::function<double(double, double)>& f) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = f(x(i), density_[i]);
  return {min_, max_, std::move(out)};
}

double BeamProfile::integral() const {
  return kernels::trapezoid_moments(density_, min_, spacing()).mass;
}

void ReshapingParams::validate() const {
  if (!std::isfinite(phi) || !std::isfinite(k)) {
    throw InvalidArgument("reshaping phase and kick must be finite");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("loss per pass must lie in [0, 1)");
}

BeamProfile density_pass(const BeamProfile& n0, const ReshapingParams& params, int r) {
  params.validate();
  require_pass(r);
  const double a = params.phi / 2;
  const double loss = std::pow(1.0 - params.gamma, r);
  return n0.mapped([&](double x, double n) {
    const Trig minus = trig_sq(a - params.k * x);
    double survival;
    if (params.parity_flip) {
      survival = flipped_survival(minus, trig_sq(a + params.k * x), r);
    } else {
      survival = std::pow(minus.c, r - 1);
    }
    return n * loss * minus.s * survival;
  });
}

BeamProfile density_accumulated(const BeamProfile& n0, const ReshapingParams& params, int r) {
  params.validate();
  require_pass(r);
  const double a = params.phi / 2;
  const double transmit = 1.0 - params.gamma;
  if (params.parity_flip) {
    return n0.mapped([&](double x, double n) {
      const Trig minus = trig_sq(a - params.k * x);
      const Trig plus = trig_sq(a + params.k * x);
      double sum = 0.0;
      double loss = 1.0;
      double survival = 1.0;
      for (int j = 1; j <= r; ++j) {
        loss *= transmit;
        sum += loss * survival;
        survival *= (j % 2 == 1) ? plus.c : minus.c;
      }
      return n * minus.s * sum;
    });
  }
  // (1-g) s (1 - Q^r)/(1 - Q) with Q = (1-g) c and 1 - Q = s + g c, which equals
  // the closed form (1-g)(1 - Q^r)/(1 + g cot^2) away from s = 0 and stays finite there.
  return n0.mapped([&](double x, double n) {
    const Trig t = trig_sq(a - params.k * x);
    if (t.s == 0.0) return 0.0;
    const double one_minus_q = t.s + params.gamma * t.c;
    const double geometric = -std::expm1(r * std::log1p(-one_minus_q)) / one_minus_q;
    return n * transmit * t.s * geometric;
  });
}

BeamProfile density_infinite(const BeamProfile& n0, const ReshapingParams& params) {
  params.validate();
  if (params.gamma == 0.0) return n0;
  const double a = params.phi / 2;
  const double transmit = 1.0 - params.gamma;
  return n0.mapped([&](double x, double n) {
    const Trig t = trig_sq(a - params.k * x);
    if (t.s == 0.0) return 0.0;
    return n * transmit * t.s / (t.s + params.gamma * t.c);
  });
}

BeamProfile density_flipped_infinite(const BeamProfile& n0, const ReshapingParams& params) {
  params.validate();
  if (params.gamma > 0.0) {
    throw LossyFlipUnsupported("flipped-profile limit is only defined for gamma = 0");
  }
  if (params.k == 0.0) return n0;
  const double a = params.phi / 2;
  return n0.mapped([&](double x, double n) {
    const Trig minus = trig_sq(a - params.k * x);
    const Trig plus = trig_sq(a + params.k * x);
    // 1 - c- c+ = s- + c- s+
    const double denom = minus.s + minus.c * plus.s;
    if (denom == 0.0) return n;
    return n * minus.s * (1.0 + minus.c) / denom;
  });
}

double centroid_shift(const BeamProfile& profile) {
  const auto m = kernels::trapezoid_moments(profile.density(), profile.grid_min(), profile.spacing());
  if (!(m.mass >= 1e-300)) throw EmptyProfile("centroid of an empty profile");
  return m.first / m.mass;
}

double reshaped_snr_boost(const BeamProfile& n0, const ReshapingParams& params, int r,
                          double sigma_detector) {
  if (!(sigma_detector > 0.0)) throw NonPositiveWidth("detector beam width must be positive");
  if (params.k == 0.0) throw InvalidArgument("SNR boost needs a nonzero kick");
  const BeamProfile single = density_pass(n0, params, 1);
  const BeamProfile many = density_accumulated(n0, params, r);
  const double snr_single = centroid_shift(single) * std::sqrt(single.integral()) / sigma_detector;
  const double snr_many = centroid_shift(many) * std::sqrt(many.integral()) / sigma_detector;
  return snr_many / snr_single;
}

double reshaped_signal_boost(const BeamProfile& n0, const ReshapingParams& params, int r) {
  if (params.k == 0.0) throw InvalidArgument("signal boost needs a nonzero kick");
  const BeamProfile single = density_pass(n0, params, 1);
  const BeamProfile many = density_accumulated(n0, params, r);
  return (centroid_shift(many) * many.integral()) / (centroid_shift(single) * single.integral());
}

}  // namespace wvr
