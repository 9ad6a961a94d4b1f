#include "wvr/analysis.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "wvr/errors.hpp"
#include "wvr/kernels.hpp"
#include "wvr/rng.hpp"

namespace wvr {

namespace {

// sqrt(pi/2) maps the knife-edge count imbalance of a Gaussian beam onto its
// displacement; 4 turns a one-sided DFT amplitude into peak-to-peak.
const double kGaussianPeakToPeak = 4.0 * std::sqrt(std::numbers::pi / 2.0);

void require_counts(const BinnedSeries& series) {
  if (series.total_counts <= 0) throw EmptyTagSet("no counts to normalize by");
}

std::vector<double> amplitudes(const BinnedSeries& series, std::span<const double> freqs) {
  require_counts(series);
  std::vector<double> nu(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) nu[i] = freqs[i] * series.bin_width;
  std::vector<std::complex<double>> coeff(freqs.size());
  kernels::correlate(series.values, nu, coeff);
  std::vector<double> out(freqs.size());
  const double scale = kGaussianPeakToPeak / static_cast<double>(series.total_counts);
  for (std::size_t i = 0; i < freqs.size(); ++i) out[i] = scale * std::abs(coeff[i]);
  return out;
}

void check_resolvable(const BinnedSeries& series, double f) {
  if (!(f > 0.0)) throw FrequencyUnresolvable("drive frequency must be positive");
  if (series.duration * f < 2.0) {
    throw FrequencyUnresolvable("acquisition window holds fewer than two drive periods");
  }
  if (!(1.0 / series.bin_width > 2.0 * f)) {
    throw FrequencyUnresolvable("bin rate must exceed twice the drive frequency");
  }
}

}  // namespace

BinnedSeries bin_timetags(const TimeTagSet& tags, double bin_width) {
  if (!(bin_width > 0.0)) throw InvalidArgument("bin width must be positive");
  if (tags.records.empty()) throw EmptyTagSet("time-tag set has no records");
  const double duration = tags.acquisition_time();
  const auto n_bins = static_cast<std::size_t>(std::floor(duration / bin_width + 1e-9));
  if (n_bins == 0) throw InvalidArgument("acquisition window is shorter than one bin");

  BinnedSeries series;
  series.bin_width = bin_width;
  series.duration = static_cast<double>(n_bins) * bin_width;
  series.values.assign(n_bins, 0.0);
  series.counts.assign(n_bins, 0.0);
  const double bin_ns = bin_width * 1e9;
  for (const auto& tag : tags.records) {
    const auto bin = static_cast<std::size_t>(std::floor(static_cast<double>(tag.timestamp_ns) / bin_ns));
    if (bin >= n_bins) continue;
    series.values[bin] += tag.detector == Detector::Left ? 1.0 : -1.0;
    series.counts[bin] += 1.0;
    ++series.total_counts;
  }
  return series;
}

double normalized_amplitude(const BinnedSeries& series, double frequency) {
  const double f[] = {frequency};
  return amplitudes(series, f)[0];
}

double extract_signal(const BinnedSeries& series, double drive_frequency) {
  check_resolvable(series, drive_frequency);
  return normalized_amplitude(series, drive_frequency);
}

std::vector<double> noise_frequencies(const BinnedSeries& series, double drive_frequency,
                                      int n_offsets, double offset_spacing) {
  if (n_offsets < 1) throw OffsetsOutOfBand("need at least one offset frequency");
  const double spacing = offset_spacing > 0.0 ? offset_spacing : 1.0 / series.duration;
  const double nyquist = 0.5 / series.bin_width;
  // Offsets -below..-1 and +1..above, drive bin excluded.
  const int below = n_offsets / 2;
  const int above = n_offsets - below;
  std::vector<double> freqs;
  freqs.reserve(static_cast<std::size_t>(n_offsets));
  for (int j = -below; j <= above; ++j) {
    if (j == 0) continue;
    const double f = drive_frequency + j * spacing;
    if (!(f > 0.0 && f < nyquist)) {
      throw OffsetsOutOfBand("noise offset frequency " + std::to_string(f) + " Hz leaves (0, Nyquist)");
    }
    freqs.push_back(f);
  }
  return freqs;
}

double noise_floor(const BinnedSeries& series, double drive_frequency, int n_offsets,
                   double offset_spacing) {
  const auto freqs = noise_frequencies(series, drive_frequency, n_offsets, offset_spacing);
  double power = 0.0;
  for (double a : amplitudes(series, freqs)) power += a * a;
  return std::sqrt(power / static_cast<double>(freqs.size()));
}

SpectrumResult measure_snr(const BinnedSeries& series, double drive_frequency,
                           const AnalysisOptions& options) {
  check_resolvable(series, drive_frequency);
  // Drive bin first, then the offsets, in one kernel pass.
  std::vector<double> freqs{drive_frequency};
  const auto offsets =
      noise_frequencies(series, drive_frequency, options.n_offsets, options.offset_spacing);
  freqs.insert(freqs.end(), offsets.begin(), offsets.end());
  const auto amp = amplitudes(series, freqs);

  double power = 0.0;
  for (std::size_t i = 1; i < amp.size(); ++i) power += amp[i] * amp[i];

  SpectrumResult r;
  r.signal_amplitude = amp[0];
  r.noise_floor = std::sqrt(power / static_cast<double>(offsets.size()));
  r.snr = r.noise_floor > 0.0 ? r.signal_amplitude / r.noise_floor : 0.0;
  r.detected_photons = series.total_counts;
  r.drive_frequency = drive_frequency;
  r.frequency_resolution = 1.0 / series.duration;
  return r;
}

SpectrumResult measure_snr(const TimeTagSet& tags, double drive_frequency,
                           const AnalysisOptions& options) {
  return measure_snr(bin_timetags(tags, options.bin_width), drive_frequency, options);
}

RepeatabilityReport repeatability_check(const SimulationConfig& config, int n_repeats,
                                        const AnalysisOptions& options, unsigned workers) {
  if (n_repeats < 2) throw InvalidArgument("repeatability check needs at least two repeats");
  RepeatabilityReport report;
  report.runs.reserve(static_cast<std::size_t>(n_repeats));
  for (int i = 0; i < n_repeats; ++i) {
    SimulationConfig run = config;
    run.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    report.runs.push_back(measure_snr(simulate(run, workers), config.drive.drive_frequency, options));
  }
  double sum = 0.0;
  double noise = 0.0;
  for (const auto& r : report.runs) {
    sum += r.signal_amplitude;
    noise += r.noise_floor;
  }
  const double n = static_cast<double>(n_repeats);
  report.mean_signal = sum / n;
  double sq = 0.0;
  for (const auto& r : report.runs) sq += (r.signal_amplitude - report.mean_signal) * (r.signal_amplitude - report.mean_signal);
  report.std_signal = std::sqrt(sq / (n - 1.0));
  report.predicted_std = noise / n / std::sqrt(2.0);
  report.excess_noise = report.std_signal > 1.5 * report.predicted_std;
  return report;
}

}  // namespace wvr
