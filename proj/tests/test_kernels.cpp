#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "wvr/errors.hpp"
#include "wvr/kernels.hpp"
#include "wvr/rng.hpp"

using namespace wvr;
using namespace wvr::kernels;

namespace {

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (isa_supported(Isa::Avx2)) out.push_back(Isa::Avx2);
  return out;
}

// Textbook DFT with long-double phase reduction per sample.
std::complex<double> naive_dft(const std::vector<double>& v, double nu) {
  long double re = 0.0L;
  long double im = 0.0L;
  for (std::size_t n = 0; n < v.size(); ++n) {
    long double ph = static_cast<long double>(nu) * static_cast<long double>(n);
    ph -= std::floor(ph);
    const long double a = -2.0L * std::numbers::pi_v<long double> * ph;
    re += v[n] * std::cos(a);
    im += v[n] * std::sin(a);
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = std::round(g(rng));
  return v;
}

}  // namespace

TEST_CASE("ISA reporting") {
  CHECK(isa_name(Isa::Scalar) == "scalar");
  CHECK(isa_name(Isa::Avx2) == "avx2");
  CHECK(isa_supported(Isa::Scalar));
  CHECK(isa_supported(best_supported_isa()));
  const Isa before = active_isa();
  set_active_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  set_active_isa(before);
#ifndef WVR_HAVE_AVX2_KERNELS
  CHECK_THROWS_AS(set_active_isa(Isa::Avx2), InvalidArgument);
#endif
}

TEST_CASE("trapezoid moments") {
  for (Isa isa : available_isas()) {
    CAPTURE(isa_name(isa));
    SUBCASE("linear function is integrated exactly") {
      // f(x) = x on [0, 1]: mass 1/2, first moment 1/3 + dx^2/6 for the trapezoid rule
      const std::size_t n = 1001;
      const double dx = 1.0 / (n - 1);
      std::vector<double> f(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = i * dx;
      const Moments m = trapezoid_moments(isa, f, 0.0, dx);
      CHECK(m.mass == doctest::Approx(0.5).epsilon(1e-14));
      CHECK(m.first == doctest::Approx(1.0 / 3.0 + dx * dx / 6.0).epsilon(1e-13));
    }
    SUBCASE("short inputs") {
      for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{5}, std::size_t{7}}) {
        std::vector<double> f(n, 2.0);
        const Moments m = trapezoid_moments(isa, f, 1.0, 0.5);
        const double span = n > 1 ? (n - 1) * 0.5 : 0.0;
        CHECK(m.mass == doctest::Approx(2.0 * span));
        CHECK(m.first == doctest::Approx(2.0 * ((1.0 + span) * (1.0 + span) - 1.0) / 2.0));
      }
    }
  }
}

TEST_CASE("trapezoid moments: SIMD matches scalar") {
  if (!isa_supported(Isa::Avx2)) return;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 5000;
    std::vector<double> f(n);
    for (auto& x : f) x = u(rng);
    const double x0 = -u(rng);
    const double dx = 1e-3 * (0.1 + u(rng));
    const Moments a = trapezoid_moments(Isa::Scalar, f, x0, dx);
    const Moments b = trapezoid_moments(Isa::Avx2, f, x0, dx);
    REQUIRE(b.mass == doctest::Approx(a.mass).epsilon(1e-12));
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs((x0 + i * dx) * f[i]) * dx;
    REQUIRE(std::abs(b.first - a.first) <= 1e-12 * scale);
  }
}

TEST_CASE("correlate against a textbook DFT") {
  const std::vector<double> v = random_values(100000, 11);
  const std::vector<double> nus{0.05, 0.05 + 1e-5, 0.05 - 3e-5, 0.25, 0.5, 0.0, 0.123456789, 0.999};
  for (Isa isa : available_isas()) {
    CAPTURE(isa_name(isa));
    std::vector<std::complex<double>> out(nus.size());
    correlate(isa, v, nus, out);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    for (std::size_t k = 0; k < nus.size(); ++k) {
      const auto ref = naive_dft(v, nus[k]);
      CAPTURE(nus[k]);
      CHECK(std::abs(out[k] - ref) < 1e-9 * std::sqrt(norm * v.size()));
    }
  }
}

TEST_CASE("correlate: SIMD matches scalar") {
  if (!isa_supported(Isa::Avx2)) return;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 20000;
    const std::size_t m = 1 + rng() % 13;
    const std::vector<double> v = random_values(n, rng());
    std::vector<double> nus(m);
    for (auto& nu : nus) nu = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    std::vector<std::complex<double>> a(m), b(m);
    correlate(Isa::Scalar, v, nus, a);
    correlate(Isa::Avx2, v, nus, b);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    for (std::size_t k = 0; k < m; ++k) REQUIRE(std::abs(a[k] - b[k]) < 1e-11 * std::sqrt(norm * n) + 1e-300);
  }
}

TEST_CASE("correlate errors and edge cases") {
  std::vector<double> v{1.0, 2.0};
  std::vector<double> nus{0.1, 0.2};
  std::vector<std::complex<double>> out(1);
  CHECK_THROWS_AS(correlate(v, nus, out), InvalidArgument);
  std::vector<std::complex<double>> ok(2);
  correlate(std::span<const double>{}, nus, ok);
  CHECK(ok[0] == std::complex<double>{});
  CHECK(detail::anchor_phasor(0.25, 1).imag() == doctest::Approx(-1.0));
  CHECK(std::abs(detail::anchor_phasor(0.1, 10'000'000'000ull) - 1.0) < 1e-6);
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using Block = std::array<std::uint32_t, 4>;
  CHECK(PhiloxStream::block({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(PhiloxStream::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(PhiloxStream::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox streams") {
  PhiloxStream a(42, 7);
  PhiloxStream b(42, 7);
  PhiloxStream c(42, 8);
  int same_c = 0;
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto x = a();
    REQUIRE(x == b());
    if (x == c()) ++same_c;
    const double u = a.uniform();
    b.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(same_c == 0);
  CHECK(std::abs(sum / n - 0.5) < 5 * std::sqrt(1.0 / 12.0 / n));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(mix_seed(0) == 0xE220A8397B1DCDAFull);
}
