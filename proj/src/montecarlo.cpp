#include "wvr/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <thread>

#include "text_format.hpp"
#include "wvr/errors.hpp"
#include "wvr/rng.hpp"

namespace wvr {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr std::int64_t kPulsesPerChunk = 4096;
constexpr std::uint64_t kDarkStreamBase = std::uint64_t{1} << 63;

void require(bool ok, const char* what) {
  if (!ok) throw InvalidConfig(what);
}

// Poisson variates by inversion of a precomputed CDF: one uniform per draw.
class PoissonTable {
 public:
  explicit PoissonTable(double mean) {
    double pmf = std::exp(-mean);
    double cdf = pmf;
    cdf_.push_back(cdf);
    for (int n = 1; 1.0 - cdf > 1e-17 && n < 10000; ++n) {
      pmf *= mean / n;
      cdf += pmf;
      cdf_.push_back(cdf);
    }
  }

  int operator()(PhiloxStream& rng) const noexcept {
    const double u = rng.uniform();
    int n = 0;
    const int last = static_cast<int>(cdf_.size()) - 1;
    while (n < last && u >= cdf_[static_cast<std::size_t>(n)]) ++n;
    return n;
  }

 private:
  std::vector<double> cdf_;
};

struct ChunkOutput {
  std::vector<TimeTag> tags;
  SimulationTap tap;
};

class PulseSimulator {
 public:
  PulseSimulator(const SimulationConfig& config, bool record_tap)
      : config_(config),
        key_(mix_seed(config.seed)),
        passes_(config.interferometer.passes(config.mode)),
        transmit_(1.0 - config.interferometer.gamma),
        half_phi_(config.interferometer.phi / 2),
        delay_ns_(loop_delay(config.interferometer.loop_length)),
        to_detector_(config.detector.detector_sigma / config.interferometer.beam_sigma),
        half_dead_(config.detector.dead_zone_width / 2),
        record_tap_(record_tap),
        photons_(config.source.mean_photons_per_pulse) {}

  void run(std::int64_t first, std::int64_t last, ChunkOutput& out) {
    for (std::int64_t pulse = first; pulse < last; ++pulse) {
      const std::size_t begin = out.tags.size();
      simulate_pulse(pulse, out);
      // Photons of one pulse leave on different passes; order them by arrival.
      std::stable_sort(out.tags.begin() + static_cast<std::ptrdiff_t>(begin), out.tags.end(),
                       [](const TimeTag& a, const TimeTag& b) { return a.timestamp_ns < b.timestamp_ns; });
    }
  }

 private:
  void simulate_pulse(std::int64_t pulse, ChunkOutput& out) {
    PhiloxStream rng(key_, static_cast<std::uint64_t>(pulse));
    // normal_distribution caches a variate; a pulse must not see its predecessor's.
    normal_.reset();
    const int n_photons = photons_(rng);
    if (n_photons == 0) return;
    const double t_ns = static_cast<double>(pulse) * config_.pulse_period_ns();
    const double tilt = config_.drive.tilt(t_ns * 1e-9);
    if (config_.mode == Mode::Conventional) {
      const double shift = config_.conventional.displacement(tilt);
      for (int i = 0; i < n_photons; ++i) {
        const double y = shift + config_.conventional.beam_sigma * normal_(rng);
        if (rng.uniform() >= transmit_) continue;
        if (record_tap_) {
          out.tap.positions.push_back(y);
          out.tap.passes.push_back(1);
        }
        detect(y, 1, t_ns, rng, out);
      }
      return;
    }
    const double k = config_.interferometer.kick(tilt, config_.source.wavelength);
    const bool flip = config_.interferometer.parity_flip;
    for (int i = 0; i < n_photons; ++i) {
      // Transverse coordinate at the tilt mirror; the reshaped density is diagonal in x.
      const double x = config_.interferometer.beam_sigma * normal_(rng);
      const double s_minus = sin_sq(half_phi_ - k * x);
      const double s_plus = flip ? sin_sq(half_phi_ + k * x) : s_minus;
      for (int pass = 1; pass <= passes_; ++pass) {
        const bool mirrored = flip && pass % 2 == 0;
        const double exit = transmit_ * (mirrored ? s_plus : s_minus);
        const double u = rng.uniform();
        if (u < exit) {
          const double position = mirrored ? -x : x;
          if (record_tap_) {
            out.tap.positions.push_back(position);
            out.tap.passes.push_back(pass);
          }
          detect(position * to_detector_, pass, t_ns, rng, out);
          break;
        }
        if (u >= transmit_) break;  // lost in the loop
      }
    }
  }

  void detect(double y, int pass, double pulse_ns, PhiloxStream& rng, ChunkOutput& out) {
    const double edge = config_.detector.knife_edge_position;
    if (std::abs(y - edge) < half_dead_) return;
    if (rng.uniform() >= config_.detector.efficiency) return;
    const auto ts = static_cast<std::int64_t>(std::llround(pulse_ns + pass * delay_ns_));
    out.tags.push_back({ts, y < edge ? Detector::Left : Detector::Right, pass});
  }

  static double sin_sq(double a) noexcept {
    const double s = std::sin(a);
    return s * s;
  }

  const SimulationConfig& config_;
  std::uint64_t key_;
  int passes_;
  double transmit_;
  double half_phi_;
  double delay_ns_;
  double to_detector_;
  double half_dead_;
  bool record_tap_;
  PoissonTable photons_;
  std::normal_distribution<double> normal_;
};

std::vector<TimeTag> dark_counts(const SimulationConfig& config) {
  std::vector<TimeTag> out;
  const double rate = config.detector.dark_count_rate;
  if (rate == 0.0) return out;
  const double duration_ns = config.source.acquisition_time * 1e9;
  for (Detector d : {Detector::Left, Detector::Right}) {
    PhiloxStream rng(mix_seed(config.seed), kDarkStreamBase + static_cast<std::uint64_t>(d));
    std::poisson_distribution<long long> count(rate * config.source.acquisition_time);
    const long long n = count(rng);
    for (long long i = 0; i < n; ++i) {
      const auto ts = static_cast<std::int64_t>(std::floor(rng.uniform() * duration_ns));
      out.push_back({ts, d, TimeTag::kUnknownPass});
    }
  }
  std::sort(out.begin(), out.end(), [](const TimeTag& a, const TimeTag& b) {
    if (a.timestamp_ns != b.timestamp_ns) return a.timestamp_ns < b.timestamp_ns;
    return a.detector < b.detector;
  });
  return out;
}

}  // namespace

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::Conventional:
      return "conventional";
    case Mode::SinglePass:
      return "single";
    case Mode::MultiPass:
      return "multi";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  if (name == "conventional") return Mode::Conventional;
  if (name == "single") return Mode::SinglePass;
  if (name == "multi") return Mode::MultiPass;
  throw InvalidConfig("unknown mode '" + std::string(name) + "' (expected conventional, single or multi)");
}

std::string_view kick_model_name(KickModel model) noexcept {
  return model == KickModel::AngularWidth ? "angular-width" : "mirror";
}

KickModel parse_kick_model(std::string_view name) {
  if (name == "angular-width") return KickModel::AngularWidth;
  if (name == "mirror") return KickModel::MirrorReflection;
  throw InvalidConfig("unknown kick model '" + std::string(name) + "' (expected angular-width or mirror)");
}

void SourceParams::validate() const {
  require(pulse_rate > 0.0 && std::isfinite(pulse_rate), "pulse_rate must be positive");
  require(mean_photons_per_pulse > 0.0 && mean_photons_per_pulse <= 500.0,
          "mean_photons_per_pulse must lie in (0, 500]");
  require(acquisition_time > 0.0 && std::isfinite(acquisition_time), "acquisition_time must be positive");
  require(wavelength > 0.0 && std::isfinite(wavelength), "wavelength must be positive");
}

void MirrorDrive::validate() const {
  require(drive_frequency > 0.0 && std::isfinite(drive_frequency), "drive_frequency must be positive");
  require(tilt_amplitude_peak >= 0.0 && std::isfinite(tilt_amplitude_peak),
          "tilt amplitude must be nonnegative");
}

double MirrorDrive::tilt(double t) const noexcept {
  return tilt_amplitude_peak * std::sin(2.0 * std::numbers::pi * drive_frequency * t);
}

void InterferometerParams::validate() const {
  require(std::isfinite(phi), "phi must be finite");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(max_passes >= 1, "max_passes must be at least 1");
  require(beam_sigma > 0.0 && std::isfinite(beam_sigma), "beam_sigma must be positive");
  require(angular_width > 0.0 && std::isfinite(angular_width), "angular_width must be positive");
  require(loop_length > 0.0 && std::isfinite(loop_length), "loop_length must be positive");
}

double InterferometerParams::kick(double tilt, double wavelength) const noexcept {
  if (kick_model == KickModel::MirrorReflection) {
    return 4.0 * std::numbers::pi * tilt / wavelength;
  }
  return tilt / (2.0 * beam_sigma * angular_width);
}

RecyclingParams InterferometerParams::recycling(Mode mode) const {
  return {postselection(), gamma, passes(mode)};
}

ReshapingParams InterferometerParams::reshaping(double tilt, double wavelength) const {
  return {phi, kick(tilt, wavelength), gamma, parity_flip};
}

void DetectorModel::validate() const {
  require(std::isfinite(knife_edge_position), "knife_edge_position must be finite");
  require(dead_zone_width >= 0.0 && std::isfinite(dead_zone_width), "dead_zone_width must be nonnegative");
  require(efficiency >= 0.0 && efficiency <= 1.0, "efficiency must lie in [0, 1]");
  require(dark_count_rate >= 0.0 && std::isfinite(dark_count_rate), "dark_count_rate must be nonnegative");
  require(detector_sigma > 0.0 && std::isfinite(detector_sigma), "detector_sigma must be positive");
}

void ConventionalOptics::validate() const {
  require(focal_length > 0.0 && std::isfinite(focal_length), "focal_length must be positive");
  require(std::isfinite(displacement_factor), "displacement_factor must be finite");
  require(beam_sigma > 0.0 && std::isfinite(beam_sigma), "conventional beam_sigma must be positive");
}

void SimulationConfig::validate() const {
  source.validate();
  drive.validate();
  interferometer.validate();
  detector.validate();
  conventional.validate();
  require(!interferometer.parity_flip || mode == Mode::MultiPass,
          "parity_flip only applies to the multi-pass mode");
  const double trapped_ns = interferometer.passes(mode) * loop_delay(interferometer.loop_length);
  require(trapped_ns < pulse_period_ns(), "recycled passes overlap the next pulse; lower max_passes or loop_length");
  require(pulse_count() >= 1, "acquisition shorter than one pulse period");
}

std::int64_t SimulationConfig::pulse_count() const noexcept {
  return static_cast<std::int64_t>(std::floor(source.acquisition_time * source.pulse_rate + 1e-9));
}

std::map<std::string, std::string> to_metadata(const SimulationConfig& c) {
  using text::format_double;
  return {
      {"mode", std::string(mode_name(c.mode))},
      {"pulse_rate", format_double(c.source.pulse_rate)},
      {"mean_photons_per_pulse", format_double(c.source.mean_photons_per_pulse)},
      {"acquisition_time", format_double(c.source.acquisition_time)},
      {"wavelength", format_double(c.source.wavelength)},
      {"drive_frequency", format_double(c.drive.drive_frequency)},
      {"tilt_amplitude", format_double(c.drive.tilt_amplitude_peak)},
      {"phi", format_double(c.interferometer.phi)},
      {"gamma", format_double(c.interferometer.gamma)},
      {"max_passes", std::to_string(c.interferometer.max_passes)},
      {"parity_flip", c.interferometer.parity_flip ? "true" : "false"},
      {"beam_sigma", format_double(c.interferometer.beam_sigma)},
      {"kick_model", std::string(kick_model_name(c.interferometer.kick_model))},
      {"angular_width", format_double(c.interferometer.angular_width)},
      {"loop_length", format_double(c.interferometer.loop_length)},
      {"knife_edge_position", format_double(c.detector.knife_edge_position)},
      {"dead_zone_width", format_double(c.detector.dead_zone_width)},
      {"efficiency", format_double(c.detector.efficiency)},
      {"dark_count_rate", format_double(c.detector.dark_count_rate)},
      {"detector_sigma", format_double(c.detector.detector_sigma)},
      {"focal_length", format_double(c.conventional.focal_length)},
      {"displacement_factor", format_double(c.conventional.displacement_factor)},
      {"conventional_sigma", format_double(c.conventional.beam_sigma)},
      {"seed", std::to_string(c.seed)},
  };
}

SimulationConfig from_metadata(const std::map<std::string, std::string>& m) {
  SimulationConfig c;
  auto number = [&](const char* key, double& dst) {
    auto it = m.find(key);
    if (it == m.end()) return;
    auto v = text::parse_number<double>(it->second);
    if (!v) throw InvalidConfig(std::string("metadata key '") + key + "' is not a number");
    dst = *v;
  };
  auto integer = [&](const char* key, auto& dst) {
    auto it = m.find(key);
    if (it == m.end()) return;
    auto v = text::parse_number<std::remove_reference_t<decltype(dst)>>(it->second);
    if (!v) throw InvalidConfig(std::string("metadata key '") + key + "' is not an integer");
    dst = *v;
  };
  if (auto it = m.find("mode"); it != m.end()) c.mode = parse_mode(it->second);
  number("pulse_rate", c.source.pulse_rate);
  number("mean_photons_per_pulse", c.source.mean_photons_per_pulse);
  number("acquisition_time", c.source.acquisition_time);
  number("wavelength", c.source.wavelength);
  number("drive_frequency", c.drive.drive_frequency);
  number("tilt_amplitude", c.drive.tilt_amplitude_peak);
  number("phi", c.interferometer.phi);
  number("gamma", c.interferometer.gamma);
  integer("max_passes", c.interferometer.max_passes);
  if (auto it = m.find("parity_flip"); it != m.end()) {
    if (it->second != "true" && it->second != "false") {
      throw InvalidConfig("metadata key 'parity_flip' must be true or false");
    }
    c.interferometer.parity_flip = it->second == "true";
  }
  number("beam_sigma", c.interferometer.beam_sigma);
  if (auto it = m.find("kick_model"); it != m.end()) {
    c.interferometer.kick_model = parse_kick_model(it->second);
  }
  number("angular_width", c.interferometer.angular_width);
  number("loop_length", c.interferometer.loop_length);
  number("knife_edge_position", c.detector.knife_edge_position);
  number("dead_zone_width", c.detector.dead_zone_width);
  number("efficiency", c.detector.efficiency);
  number("dark_count_rate", c.detector.dark_count_rate);
  number("detector_sigma", c.detector.detector_sigma);
  number("focal_length", c.conventional.focal_length);
  number("displacement_factor", c.conventional.displacement_factor);
  number("conventional_sigma", c.conventional.beam_sigma);
  integer("seed", c.seed);
  return c;
}

void TimeTagSet::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].timestamp_ns < records[i - 1].timestamp_ns) {
      throw FormatError(i + 1, "timestamps must be nondecreasing");
    }
    if (records[i].pass_index < 0) throw FormatError(i + 1, "pass index must be positive or unknown");
  }
}

double TimeTagSet::acquisition_time() const {
  auto it = metadata.find("acquisition_time");
  if (it == metadata.end()) throw InvalidConfig("time-tag metadata lacks acquisition_time");
  auto v = text::parse_number<double>(it->second);
  if (!v || !(*v > 0.0)) throw InvalidConfig("time-tag acquisition_time must be a positive number");
  return *v;
}

double loop_delay(double loop_length) {
  if (!(loop_length > 0.0)) throw InvalidArgument("loop length must be positive");
  return loop_length / kSpeedOfLight * 1e9;
}

TimeTagSet simulate(const SimulationConfig& config, unsigned workers, SimulationTap* tap) {
  config.validate();
  const std::int64_t pulses = config.pulse_count();
  const std::int64_t n_chunks = (pulses + kPulsesPerChunk - 1) / kPulsesPerChunk;
  std::vector<ChunkOutput> chunks(static_cast<std::size_t>(n_chunks));

  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    PulseSimulator sim(config, tap != nullptr);
    for (std::int64_t c = next++; c < n_chunks; c = next++) {
      const std::int64_t first = c * kPulsesPerChunk;
      sim.run(first, std::min(pulses, first + kPulsesPerChunk), chunks[static_cast<std::size_t>(c)]);
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, std::max<std::int64_t>(n_chunks, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<TimeTag> photons;
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.tags.size();
  photons.reserve(total);
  for (auto& c : chunks) {
    photons.insert(photons.end(), c.tags.begin(), c.tags.end());
    if (tap != nullptr) {
      tap->positions.insert(tap->positions.end(), c.tap.positions.begin(), c.tap.positions.end());
      tap->passes.insert(tap->passes.end(), c.tap.passes.begin(), c.tap.passes.end());
    }
  }

  const std::vector<TimeTag> dark = dark_counts(config);
  TimeTagSet out;
  out.records.reserve(photons.size() + dark.size());
  // Photons win ties, so the merge order is fixed.
  std::merge(photons.begin(), photons.end(), dark.begin(), dark.end(), std::back_inserter(out.records),
             [](const TimeTag& a, const TimeTag& b) { return a.timestamp_ns < b.timestamp_ns; });
  out.metadata = to_metadata(config);
  return out;
}

TimeTagSet simulate(Mode mode, const SourceParams& source, const MirrorDrive& drive,
                    const InterferometerParams& interferometer, const DetectorModel& detector,
                    std::uint64_t seed, unsigned workers) {
  SimulationConfig config;
  config.mode = mode;
  config.source = source;
  config.drive = drive;
  config.interferometer = interferometer;
  config.detector = detector;
  config.seed = seed;
  return simulate(config, workers);
}

}  // namespace wvr
