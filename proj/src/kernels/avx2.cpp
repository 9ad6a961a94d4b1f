// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "wvr/kernels.hpp"

namespace wvr::kernels::avx2 {

namespace {

double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Four frequencies at once, one per lane.
void correlate4(std::span<const double> values, const std::array<double, 4>& nu,
                std::array<std::complex<double>, 4>& result) noexcept {
  alignas(32) std::array<double, 4> wr_l{};
  alignas(32) std::array<double, 4> wi_l{};
  for (int l = 0; l < 4; ++l) {
    const double step = -2.0 * std::numbers::pi * nu[l];
    wr_l[l] = std::cos(step);
    wi_l[l] = std::sin(step);
  }
  const __m256d wr = _mm256_load_pd(wr_l.data());
  const __m256d wi = _mm256_load_pd(wi_l.data());
  __m256d acc_r = _mm256_setzero_pd();
  __m256d acc_i = _mm256_setzero_pd();

  const std::size_t n = values.size();
  alignas(32) std::array<double, 4> zr_l{};
  alignas(32) std::array<double, 4> zi_l{};
  for (std::size_t start = 0; start < n; start += kAnchorStride) {
    for (int l = 0; l < 4; ++l) {
      const auto z0 = detail::anchor_phasor(nu[l], start);
      zr_l[l] = z0.real();
      zi_l[l] = z0.imag();
    }
    __m256d zr = _mm256_load_pd(zr_l.data());
    __m256d zi = _mm256_load_pd(zi_l.data());
    const std::size_t stop = std::min(n, start + kAnchorStride);
    for (std::size_t i = start; i < stop; ++i) {
      const __m256d v = _mm256_broadcast_sd(&values[i]);
      acc_r = _mm256_fmadd_pd(v, zr, acc_r);
      acc_i = _mm256_fmadd_pd(v, zi, acc_i);
      const __m256d nr = _mm256_fmsub_pd(zr, wr, _mm256_mul_pd(zi, wi));
      zi = _mm256_fmadd_pd(zr, wi, _mm256_mul_pd(zi, wr));
      zr = nr;
    }
  }
  alignas(32) std::array<double, 4> out_r{};
  alignas(32) std::array<double, 4> out_i{};
  _mm256_store_pd(out_r.data(), acc_r);
  _mm256_store_pd(out_i.data(), acc_i);
  for (int l = 0; l < 4; ++l) result[l] = {out_r[l], out_i[l]};
}

}  // namespace

Moments trapezoid_moments(std::span<const double> f, double x0, double dx) noexcept {
  const std::size_t n = f.size();
  if (n < 2) return {};
  __m256d sum = _mm256_setzero_pd();
  __m256d index_weighted = _mm256_setzero_pd();
  __m256d index = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&f[i]);
    sum = _mm256_add_pd(sum, v);
    index_weighted = _mm256_fmadd_pd(index, v, index_weighted);
    index = _mm256_add_pd(index, four);
  }
  double s = hsum(sum);
  double w = hsum(index_weighted);
  for (; i < n; ++i) {
    s += f[i];
    w += static_cast<double>(i) * f[i];
  }
  const double last = static_cast<double>(n - 1);
  const double mass_sum = s - 0.5 * (f[0] + f[n - 1]);
  const double index_sum = w - 0.5 * last * f[n - 1];
  return {dx * mass_sum, dx * (x0 * mass_sum + dx * index_sum)};
}

void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) noexcept {
  const std::size_t m = cycles_per_sample.size();
  std::array<double, 4> nu{};
  std::array<std::complex<double>, 4> result{};
  for (std::size_t k = 0; k < m; k += 4) {
    const std::size_t lanes = std::min<std::size_t>(4, m - k);
    for (std::size_t l = 0; l < 4; ++l) nu[l] = l < lanes ? cycles_per_sample[k + l] : 0.0;
    correlate4(values, nu, result);
    for (std::size_t l = 0; l < lanes; ++l) out[k + l] = result[l];
  }
}

}  // namespace wvr::kernels::avx2
