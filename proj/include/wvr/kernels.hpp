#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and, on x86-64,
// an AVX2+FMA variant picked at runtime. The variants are equivalence-tested
// against the scalar path, not bit-matched to it.

#include <complex>
#include <span>
#include <string_view>

namespace wvr::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;

/// Widest ISA the running CPU supports.
Isa best_supported_isa() noexcept;

/// ISA used by the dispatching overloads. Starts at best_supported_isa() unless
/// the environment variable WVR_FORCE_SCALAR is set to a non-empty value.
Isa active_isa() noexcept;

/// Throws InvalidArgument if the CPU lacks `isa`.
void set_active_isa(Isa isa);

/// Trapezoid integrals of f and x*f on the uniform grid x_i = x0 + i*dx.
struct Moments {
  double mass = 0.0;
  double first = 0.0;
};

Moments trapezoid_moments(std::span<const double> f, double x0, double dx);
Moments trapezoid_moments(Isa isa, std::span<const double> f, double x0, double dx);

/// out[k] = sum_n values[n] * exp(-2 pi i * cycles_per_sample[k] * n).
/// The phasor is advanced by complex multiplication and re-anchored from an
/// exact sin/cos every kAnchorStride samples.
inline constexpr std::size_t kAnchorStride = 512;

void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out);
void correlate(Isa isa, std::span<const double> values,
               std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out);

namespace scalar {
Moments trapezoid_moments(std::span<const double> f, double x0, double dx) noexcept;
void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define WVR_HAVE_AVX2_KERNELS 1
namespace avx2 {
Moments trapezoid_moments(std::span<const double> f, double x0, double dx) noexcept;
void correlate(std::span<const double> values, std::span<const double> cycles_per_sample,
               std::span<std::complex<double>> out) noexcept;
}  // namespace avx2
#endif

namespace detail {
/// exp(-2 pi i * frac(nu * n)), reducing the phase before the trig call.
std::complex<double> anchor_phasor(double nu, std::size_t n) noexcept;
}  // namespace detail

}  // namespace wvr::kernels
