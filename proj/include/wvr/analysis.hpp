#pragma once

// Difference-count spectral analysis of knife-edge time tags.

#include <cstdint>
#include <vector>

#include "wvr/montecarlo.hpp"

namespace wvr {

/// Per-bin left-minus-right counts over the acquisition window.
struct BinnedSeries {
  double bin_width = 100e-6;     ///< s
  std::vector<double> values;    ///< left - right per bin
  std::vector<double> counts;    ///< left + right per bin
  std::int64_t total_counts = 0;
  double duration = 0.0;         ///< values.size() * bin_width
};

struct AnalysisOptions {
  double bin_width = 100e-6;   ///< s
  int n_offsets = 100;         ///< off-signal frequencies for the noise floor
  double offset_spacing = 0.0; ///< Hz; 0 selects 1/duration (one DFT bin)
};

struct SpectrumResult {
  double signal_amplitude = 0.0;  ///< peak-to-peak displacement in units of the PSD beam width
  double noise_floor = 0.0;       ///< same units
  double snr = 0.0;
  std::int64_t detected_photons = 0;
  double drive_frequency = 0.0;       ///< Hz
  double frequency_resolution = 0.0;  ///< Hz

  /// signal_amplitude * detected_photons: the peak-to-peak difference-count
  /// amplitude, comparable across modes at equal input photon number.
  double signal_counts() const noexcept {
    return signal_amplitude * static_cast<double>(detected_photons);
  }
  double noise_counts() const noexcept {
    return noise_floor * static_cast<double>(detected_photons);
  }
};

/// Bins the tags over [0, acquisition_time); the partial trailing bin is dropped.
/// Throws EmptyTagSet for a set without records and InvalidArgument when the
/// window is shorter than one bin.
BinnedSeries bin_timetags(const TimeTagSet& tags, double bin_width);

/// 4 sqrt(pi/2) |X(f)| / total_counts at one frequency: the single-bin DFT
/// magnitude of the difference series turned into a peak-to-peak displacement
/// for a Gaussian beam on a knife edge.
double normalized_amplitude(const BinnedSeries& series, double frequency);

/// normalized_amplitude at the drive frequency. Throws FrequencyUnresolvable
/// when the window holds fewer than two drive periods or the bin rate is not
/// above twice the drive frequency.
double extract_signal(const BinnedSeries& series, double drive_frequency);

/// RMS of normalized_amplitude over n_offsets frequencies spaced around (and
/// excluding) the drive frequency. Throws OffsetsOutOfBand when any offset
/// frequency leaves (0, Nyquist).
double noise_floor(const BinnedSeries& series, double drive_frequency, int n_offsets = 100,
                   double offset_spacing = 0.0);

/// Offset frequencies used by noise_floor, in increasing order.
std::vector<double> noise_frequencies(const BinnedSeries& series, double drive_frequency,
                                      int n_offsets, double offset_spacing);

SpectrumResult measure_snr(const BinnedSeries& series, double drive_frequency,
                           const AnalysisOptions& options = {});
SpectrumResult measure_snr(const TimeTagSet& tags, double drive_frequency,
                           const AnalysisOptions& options = {});

struct RepeatabilityReport {
  std::vector<SpectrumResult> runs;
  double mean_signal = 0.0;
  double std_signal = 0.0;  ///< sample standard deviation
  /// Shot-noise standard deviation of one quadrature: mean noise floor / sqrt(2).
  double predicted_std = 0.0;
  /// std_signal exceeds predicted_std by more than 50 %.
  bool excess_noise = false;
};

/// Simulates and analyses n_repeats runs of `config` with seeds derived from
/// config.seed. Requires n_repeats >= 2.
RepeatabilityReport repeatability_check(const SimulationConfig& config, int n_repeats = 20,
                                        const AnalysisOptions& options = {}, unsigned workers = 0);

}  // namespace wvr
