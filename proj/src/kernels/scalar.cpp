#include <algorithm>
#include <cmath>
#include <numbers>

#include "wvr/kernels.hpp"

namespace wvr::kernels::scalar {

Moments trapezoid_moments(std::span<const double> f, double x0, double dx) noexcept {
  const std::size_t n = f.size();
  if (n < 2) return {};
  double sum = 0.0;
  double index_weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += f[i];
    index_weighted += static_cast<double>(i) * f[i];
  }
  const double last = static_cast<double>(n - 1);
  const double mass_sum = sum - 0.5 * (f[0] + f[n - 1]);
  const double index_sum = index_weighted - 0.5 * last * f[n - 1];
  return {dx * mass_sum, dx * (x0 * mass_sum + dx * index_sum)};
}

void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) noexcept {
  const std::size_t n = values.size();
  for (std::size_t k = 0; k < cycles_per_sample.size(); ++k) {
    const double nu = cycles_per_sample[k];
    const double step = -2.0 * std::numbers::pi * nu;
    const double wr = std::cos(step);
    const double wi = std::sin(step);
    double acc_r = 0.0;
    double acc_i = 0.0;
    for (std::size_t start = 0; start < n; start += kAnchorStride) {
      const auto z0 = detail::anchor_phasor(nu, start);
      double zr = z0.real();
      double zi = z0.imag();
      const std::size_t stop = std::min(n, start + kAnchorStride);
      for (std::size_t i = start; i < stop; ++i) {
        acc_r += values[i] * zr;
        acc_i += values[i] * zi;
        const double nr = zr * wr - zi * wi;
        zi = zr * wi + zi * wr;
        zr = nr;
      }
    }
    out[k] = {acc_r, acc_i};
  }
}

}  // namespace wvr::kernels::scalar
