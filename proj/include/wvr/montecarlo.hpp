#pragma once

// Photon-level simulation of the conventional, single-pass and recycled
// weak-value experiments. Produces time-tag streams.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wvr/model.hpp"
#include "wvr/reshaping.hpp"

namespace wvr {

enum class Mode { Conventional, SinglePass, MultiPass };

std::string_view mode_name(Mode mode) noexcept;
/// Accepts "conventional", "single", "multi". Throws InvalidConfig otherwise.
Mode parse_mode(std::string_view name);

struct SourceParams {
  double pulse_rate = 200e3;            ///< Hz
  double mean_photons_per_pulse = 2.0;  ///< Poisson mean
  double acquisition_time = 10.0;       ///< s
  double wavelength = 690e-9;           ///< m

  void validate() const;
  /// More than 10 photons per pulse on average.
  bool multi_photon_regime() const noexcept { return mean_photons_per_pulse > 10.0; }
};

/// theta(t) = tilt_amplitude_peak * sin(2 pi f t)
struct MirrorDrive {
  double drive_frequency = 500.0;     ///< Hz
  double tilt_amplitude_peak = 7.5e-6;  ///< rad

  void validate() const;
  double tilt(double t) const noexcept;
};

/// How a mirror tilt theta becomes the transverse kick k of the weak interaction.
enum class KickModel {
  /// k = theta / (2 sigma sigma_theta): the tilt measured in units of the
  /// beam's angular width, so conventional and weak-value meters share one scale.
  AngularWidth,
  /// k = 4 pi theta / lambda: reflection doubles the deflection angle.
  MirrorReflection,
};

std::string_view kick_model_name(KickModel model) noexcept;
KickModel parse_kick_model(std::string_view name);

struct InterferometerParams {
  double phi = 0.35;          ///< relative CW/CCW phase [rad]
  double gamma = 0.16;        ///< optical loss per pass
  int max_passes = 27;        ///< Pockels-cell trapping limit
  bool parity_flip = false;   ///< odd number of reflections in the loop
  double beam_sigma = 86e-6;  ///< rms beam width at the tilt mirror [m]
  KickModel kick_model = KickModel::AngularWidth;
  double angular_width = 0.94e-3;  ///< rad, used by KickModel::AngularWidth
  double loop_length = 1.2;        ///< m

  void validate() const;
  double postselection() const noexcept { return postselection_probability(phi); }
  double kick(double tilt, double wavelength) const noexcept;
  int passes(Mode mode) const noexcept { return mode == Mode::MultiPass ? max_passes : 1; }
  RecyclingParams recycling(Mode mode) const;
  ReshapingParams reshaping(double tilt, double wavelength) const;
};

/// Knife-edge position-sensitive detector: two photon counters split at the edge.
struct DetectorModel {
  double knife_edge_position = 0.0;  ///< m
  double dead_zone_width = 3.75e-6;  ///< m, centred on the edge
  double efficiency = 0.65;
  double dark_count_rate = 250.0;  ///< Hz per counter
  double detector_sigma = 20e-6;   ///< beam width at the PSD in weak-value modes [m]

  void validate() const;
};

/// Lens that converts tilt into displacement for the direct measurement.
struct ConventionalOptics {
  double focal_length = 0.3;         ///< m
  double displacement_factor = 1.0;  ///< d = factor * f * theta
  double beam_sigma = 280e-6;        ///< beam width at the PSD [m]

  void validate() const;
  double displacement(double tilt) const noexcept {
    return displacement_factor * focal_length * tilt;
  }
};

struct SimulationConfig {
  Mode mode = Mode::MultiPass;
  SourceParams source;
  MirrorDrive drive;
  InterferometerParams interferometer;
  DetectorModel detector;
  ConventionalOptics conventional;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig on any out-of-range field or mode/parameter mismatch.
  void validate() const;
  std::int64_t pulse_count() const noexcept;
  double pulse_period_ns() const noexcept { return 1e9 / source.pulse_rate; }
};

/// key=value form of every SimulationConfig field, used as time-tag metadata.
std::map<std::string, std::string> to_metadata(const SimulationConfig& config);
/// Inverse of to_metadata; unknown keys are ignored, missing keys keep defaults.
SimulationConfig from_metadata(const std::map<std::string, std::string>& metadata);

enum class Detector : std::uint8_t { Left, Right };

struct TimeTag {
  static constexpr std::int32_t kUnknownPass = 0;

  std::int64_t timestamp_ns = 0;
  Detector detector = Detector::Left;
  std::int32_t pass_index = kUnknownPass;  ///< 1-based; kUnknownPass for dark counts

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct TimeTagSet {
  std::vector<TimeTag> records;
  std::map<std::string, std::string> metadata;

  /// Throws FormatError (line = record index + 1) on decreasing timestamps or
  /// negative pass indices.
  void validate() const;
  /// acquisition_time from the metadata; throws InvalidConfig if absent.
  double acquisition_time() const;

  friend bool operator==(const TimeTagSet&, const TimeTagSet&) = default;
};

/// Dark-port exits before the detector acts on them: transverse position at
/// the tilt mirror and pass index. Filled in pulse order.
struct SimulationTap {
  std::vector<double> positions;
  std::vector<std::int32_t> passes;
};

/// Propagation time of one loop round trip [ns].
double loop_delay(double loop_length);

/// Runs the photon-level experiment. The output depends only on the config and
/// seed, never on `workers` (0 = hardware concurrency).
TimeTagSet simulate(const SimulationConfig& config, unsigned workers = 0,
                    SimulationTap* tap = nullptr);

TimeTagSet simulate(Mode mode, const SourceParams& source, const MirrorDrive& drive,
                    const InterferometerParams& interferometer, const DetectorModel& detector,
                    std::uint64_t seed, unsigned workers = 0);

}  // namespace wvr
