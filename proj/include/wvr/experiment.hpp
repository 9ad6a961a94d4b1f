#pragma once

// Sweeps over modes, tilts and repeats; aggregation, line fits and the
// cross-mode SNR comparison.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "wvr/analysis.hpp"
#include "wvr/montecarlo.hpp"

namespace wvr {

struct RunRecord {
  Mode mode = Mode::MultiPass;
  double tilt_peak = 0.0;  ///< rad
  int repeat = 0;
  std::uint64_t seed = 0;
  double acquisition_time = 0.0;  ///< s
  SpectrumResult result;
};

struct SweepPlan {
  SimulationConfig base;
  std::vector<Mode> modes;
  std::vector<double> tilts;  ///< peak tilt amplitudes [rad]
  /// Acquisition times [s]; empty means base.source.acquisition_time only.
  std::vector<double> durations;
  /// Repeats per (mode, tilt, duration) point, indexed like `durations`
  /// (or a single entry).
  std::vector<int> repeats{1};
  AnalysisOptions analysis;
  unsigned workers = 0;
  /// Called once per run as runs finish, serialized under a lock, with the
  /// analysed record and its tags.
  std::function<void(const RunRecord&, const TimeTagSet&)> on_run;
};

/// Seed of run (mode, point, repeat) under a parent seed.
std::uint64_t run_seed(std::uint64_t parent, Mode mode, std::size_t point, int repeat);

/// Rounds duration to a whole number (>= 2) of drive periods so the drive
/// frequency sits exactly on a DFT bin.
double align_duration(double duration, double drive_frequency);

/// Runs every (mode, duration, tilt, repeat) combination. Records come back in
/// that nesting order regardless of `workers`.
std::vector<RunRecord> run_sweep(const SweepPlan& plan);

/// Repeats of one (mode, tilt, duration) point, combined with the noise power
/// subtracted: sqrt(<S^2> - <N^2>) removes the |signal + noise| rectification
/// bias that dominates at low SNR.
struct SweepPoint {
  Mode mode = Mode::MultiPass;
  double tilt_peak = 0.0;
  double acquisition_time = 0.0;
  int repeats = 0;
  double mean_detected = 0.0;
  double signal = 0.0;         ///< debiased normalized amplitude
  double noise = 0.0;          ///< rms noise floor
  double snr = 0.0;            ///< signal / noise
  double signal_counts = 0.0;  ///< debiased difference-count amplitude
  double mean_raw_snr = 0.0;   ///< plain average of per-run SNR
};

/// Groups records of `mode` by (acquisition_time, tilt), in first-seen order.
std::vector<SweepPoint> aggregate(std::span<const RunRecord> records, Mode mode);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// y = slope * x. r_squared is uncentered (1 - SSres / sum y^2).
LineFit fit_through_origin(std::span<const double> x, std::span<const double> y);
/// y = intercept + slope * x with the usual centered r_squared.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct BoostReport {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through the origin of SNR_a against SNR_b over the
/// matched sweep points (debiased per-point SNRs). Throws MismatchedSweeps
/// unless both sides cover the same (tilt, duration) points.
BoostReport compare(std::span<const RunRecord> a, Mode mode_a, std::span<const RunRecord> b,
                    Mode mode_b);

/// Columns: mode,tilt_peak_to_peak_urad,repeat,seed,acquisition_time_s,
/// detected_photons,signal,noise,snr,signal_counts
void write_results_csv(std::span<const RunRecord> records, std::ostream& out);
/// Throws FormatError on malformed rows.
std::vector<RunRecord> read_results_csv(std::istream& in);

/// Closed-form expectations for one configuration at one tilt.
struct AnalyticPrediction {
  double postselection = 0.0;
  double lossless_snr_gain = 0.0;   ///< sqrt((1-(1-p)^r)/p)
  double infinite_pass_gain = 0.0;  ///< 1/sqrt(p)
  double count_ratio = 0.0;         ///< multi / single detected photons
  double shift_ratio = 0.0;         ///< multi / single centroid
  double signal_boost = 0.0;        ///< count_ratio * shift_ratio
  double snr_boost = 0.0;           ///< sqrt(count_ratio) * shift_ratio
  double single_pass_fraction = 0.0;
  double multi_pass_fraction = 0.0;
};

AnalyticPrediction analytic_prediction(const SimulationConfig& config, double tilt_peak);

}  // namespace wvr
