#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "wvr/errors.hpp"
#include "wvr/kernels.hpp"

namespace wvr::kernels {

namespace {

Isa initial_isa() noexcept {
  const char* force = std::getenv("WVR_FORCE_SCALAR");
  if (force != nullptr && *force != '\0') return Isa::Scalar;
  return best_supported_isa();
}

std::atomic<Isa>& active_slot() noexcept {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

void check_sizes(std::span<const double> freqs, std::span<std::complex<double>> out) {
  if (freqs.size() != out.size()) {
    throw InvalidArgument("correlate: output size must match the frequency list");
  }
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#ifdef WVR_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_supported_isa() noexcept {
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa active_isa() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw InvalidArgument("kernel ISA '" + std::string(isa_name(isa)) + "' is not supported here");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

Moments trapezoid_moments(Isa isa, std::span<const double> f, double x0, double dx) {
#ifdef WVR_HAVE_AVX2_KERNELS
  if (isa == Isa::Avx2) {
    if (!isa_supported(isa)) throw InvalidArgument("AVX2 kernels unavailable on this CPU");
    return avx2::trapezoid_moments(f, x0, dx);
  }
#endif
  (void)isa;
  return scalar::trapezoid_moments(f, x0, dx);
}

Moments trapezoid_moments(std::span<const double> f, double x0, double dx) {
  return trapezoid_moments(active_isa(), f, x0, dx);
}

void correlate(Isa isa, std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) {
  check_sizes(cycles_per_sample, out);
#ifdef WVR_HAVE_AVX2_KERNELS
  if (isa == Isa::Avx2) {
    if (!isa_supported(isa)) throw InvalidArgument("AVX2 kernels unavailable on this CPU");
    avx2::correlate(values, cycles_per_sample, out);
    return;
  }
#endif
  (void)isa;
  scalar::correlate(values, cycles_per_sample, out);
}

void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) {
  correlate(active_isa(), values, cycles_per_sample, out);
}

namespace detail {

std::complex<double> anchor_phasor(double nu, std::size_t n) noexcept {
  const double cycles = nu * static_cast<double>(n);
  const double frac = cycles - std::round(cycles);
  const double angle = -2.0 * std::numbers::pi * frac;
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace detail

}  // namespace wvr::kernels
