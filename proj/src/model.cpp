#include "wvr/model.hpp"

#include <cmath>
#include <numbers>

#include "wvr/errors.hpp"

namespace wvr {

namespace {

constexpr double kOverlapFloor = 1e-14;
constexpr double kHermitianTol = 1e-12;

void require_lossless(const RecyclingParams& params, const char* what) {
  params.validate();
  if (params.gamma != 0.0) {
    throw InvalidArgument(std::string(what) + " is defined for the lossless case only (gamma = 0)");
  }
}

}  // namespace

TwoPathState::TwoPathState(Complex amp_cw, Complex amp_ccw) {
  const double norm = std::sqrt(std::norm(amp_cw) + std::norm(amp_ccw));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgument("two-path state needs a finite, nonzero amplitude");
  }
  cw_ = amp_cw / norm;
  ccw_ = amp_ccw / norm;
}

Complex TwoPathState::overlap(const TwoPathState& other) const noexcept {
  return std::conj(cw_) * other.cw_ + std::conj(ccw_) * other.ccw_;
}

TwoPathState sagnac_initial(double phi) {
  const Complex i{0.0, 1.0};
  return {std::exp(i * (phi / 2)), i * std::exp(-i * (phi / 2))};
}

TwoPathState sagnac_dark_port() {
  // <f| = (<CW| + i<CCW|)/sqrt(2), so |f> carries the conjugate amplitudes.
  return {Complex{1.0, 0.0}, Complex{0.0, -1.0}};
}

PathOperator::PathOperator(const Matrix& m) : m_(m) {
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      if (std::abs(m_[r][c] - std::conj(m_[c][r])) > kHermitianTol) {
        throw InvalidArgument("path operator must be Hermitian");
      }
    }
  }
}

PathOperator PathOperator::identity() {
  return PathOperator(Matrix{{{Complex{1.0}, Complex{0.0}}, {Complex{0.0}, Complex{1.0}}}});
}

PathOperator PathOperator::which_path() {
  return PathOperator(Matrix{{{Complex{1.0}, Complex{0.0}}, {Complex{0.0}, Complex{-1.0}}}});
}

Complex PathOperator::matrix_element(const TwoPathState& f, const TwoPathState& i) const noexcept {
  const Complex a_cw = m_[0][0] * i.cw() + m_[0][1] * i.ccw();
  const Complex a_ccw = m_[1][0] * i.cw() + m_[1][1] * i.ccw();
  return std::conj(f.cw()) * a_cw + std::conj(f.ccw()) * a_ccw;
}

Complex weak_value(const TwoPathState& i, const TwoPathState& f, const PathOperator& a) {
  const Complex overlap = f.overlap(i);
  if (std::abs(overlap) < kOverlapFloor) {
    throw OverlapZero("weak value diverges: pre- and post-selected states are orthogonal");
  }
  return a.matrix_element(f, i) / overlap;
}

double postselection_probability(double phi) {
  const double s = std::sin(phi / 2);
  return s * s;
}

double quantum_limited_snr(double g, double n, double sigma) {
  if (!(sigma > 0.0)) throw NonPositiveWidth("meter width must be positive");
  if (n < 0.0) throw InvalidArgument("photon count must be nonnegative");
  return g * std::sqrt(n) / sigma;
}

void RecyclingParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("post-selection probability must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("loss per pass must lie in [0, 1)");
  if (r < 1) throw InvalidArgument("pass count must be at least 1");
}

double recycled_power_fraction(const RecyclingParams& params) {
  require_lossless(params, "recycled_power_fraction");
  // 1 - (1-p)^r without cancellation for small p.
  if (params.p == 1.0) return 1.0;
  return -std::expm1(params.r * std::log1p(-params.p));
}

double recycled_power_fraction_sum(const RecyclingParams& params) {
  require_lossless(params, "recycled_power_fraction_sum");
  double sum = 0.0;
  double remaining = 1.0;
  for (int n = 1; n <= params.r; ++n) {
    sum += remaining * params.p;
    remaining *= 1.0 - params.p;
  }
  return sum;
}

double snr_gain(const RecyclingParams& params) {
  require_lossless(params, "snr_gain");
  if (params.p == 0.0) {
    throw ZeroPostselection("snr_gain is 0/0 at p = 0; use snr_gain_small_p for the sqrt(r) limit");
  }
  return std::sqrt(recycled_power_fraction(params) / params.p);
}

double snr_gain_limit(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ZeroPostselection("infinite-pass gain needs 0 < p <= 1");
  return 1.0 / std::sqrt(p);
}

double snr_gain_small_p(double p, int r) {
  if (r < 1) throw InvalidArgument("pass count must be at least 1");
  if (!(p >= 0.0) || !(p * (r - 1) < 1.0)) {
    throw InvalidArgument("small-p expansion needs p >= 0 and p (r-1) < 1");
  }
  return std::sqrt(static_cast<double>(r)) * (1.0 - (r - 1) * p / 4.0);
}

std::vector<double> detected_fraction_per_pass(const RecyclingParams& params) {
  params.validate();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(params.r));
  const double transmit = 1.0 - params.gamma;
  // Light reaching the n-th post-selection: (1-gamma)^n (1-p)^{n-1}.
  double reaching = transmit;
  for (int n = 1; n <= params.r; ++n) {
    out.push_back(params.p * reaching);
    reaching *= (1.0 - params.p) * transmit;
  }
  return out;
}

}  // namespace wvr
