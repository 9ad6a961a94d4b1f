#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "wvr/errors.hpp"
#include "wvr/montecarlo.hpp"
#include "wvr/reshaping.hpp"

using namespace wvr;

namespace {

SimulationConfig ideal(Mode mode, double duration) {
  SimulationConfig c;
  c.mode = mode;
  c.source.acquisition_time = duration;
  c.detector.dead_zone_width = 0.0;
  c.detector.efficiency = 1.0;
  c.detector.dark_count_rate = 0.0;
  c.seed = 99;
  return c;
}

// Drive at a quarter of the pulse rate: pulses see tilts 0, +A, 0, -A in turn.
void quarter_rate_drive(SimulationConfig& c, double kick_sigma) {
  c.drive.drive_frequency = c.source.pulse_rate / 4;
  c.drive.tilt_amplitude_peak =
      kick_sigma * 2.0 * c.interferometer.angular_width;
}

// Kolmogorov statistic of `sample` against the CDF of a nonnegative density on a grid.
double ks_statistic(std::vector<double> sample, const BeamProfile& density) {
  std::sort(sample.begin(), sample.end());
  const auto& f = density.density();
  std::vector<double> cdf(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * density.spacing();
  const double total = cdf.back();
  auto eval = [&](double x) {
    if (x <= density.grid_min()) return 0.0;
    if (x >= density.grid_max()) return 1.0;
    const double pos = (x - density.grid_min()) / density.spacing();
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    // linear interpolation of the density inside the cell, integrated
    const double fi = f[i];
    const double fj = f[std::min(i + 1, f.size() - 1)];
    const double dx = t * density.spacing();
    return (cdf[i] + dx * (fi + 0.5 * t * (fj - fi))) / total;
  };
  double d = 0.0;
  const double n = static_cast<double>(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = eval(sample[i]);
    d = std::max({d, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  return d;
}

BeamProfile mixture(const SimulationConfig& c, int pass, bool accumulate_flip = false) {
  const BeamProfile n0 = BeamProfile::gaussian(c.interferometer.beam_sigma, 1.0, 0.0, 8193);
  std::vector<double> sum(n0.size(), 0.0);
  for (double tilt : {0.0, c.drive.tilt_amplitude_peak, 0.0, -c.drive.tilt_amplitude_peak}) {
    const ReshapingParams p = c.interferometer.reshaping(tilt, c.source.wavelength);
    const BeamProfile d = accumulate_flip ? density_accumulated(n0, p, pass) : density_pass(n0, p, pass);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d.density()[i];
  }
  return BeamProfile(n0.grid_min(), n0.grid_max(), sum);
}

}  // namespace

TEST_CASE("mode and kick-model names") {
  for (Mode m : {Mode::Conventional, Mode::SinglePass, Mode::MultiPass}) CHECK(parse_mode(mode_name(m)) == m);
  CHECK_THROWS_AS(parse_mode("double"), InvalidConfig);
  for (KickModel k : {KickModel::AngularWidth, KickModel::MirrorReflection}) {
    CHECK(parse_kick_model(kick_model_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_kick_model("lens"), InvalidConfig);
}

TEST_CASE("loop delay") {
  CHECK(loop_delay(1.2) == doctest::Approx(4.0027691).epsilon(1e-7));
  CHECK(loop_delay(0.3) == doctest::Approx(1.0006923).epsilon(1e-7));
}

TEST_CASE("configuration validation") {
  SimulationConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.pulse_count() == 2'000'000);
  CHECK(c.pulse_period_ns() == doctest::Approx(5000.0));

  auto bad = [](auto mutate) {
    SimulationConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), InvalidConfig);
  };
  bad([](SimulationConfig& x) { x.source.mean_photons_per_pulse = 0.0; });
  bad([](SimulationConfig& x) { x.source.mean_photons_per_pulse = 600.0; });
  bad([](SimulationConfig& x) { x.source.acquisition_time = -1.0; });
  bad([](SimulationConfig& x) { x.drive.drive_frequency = 0.0; });
  bad([](SimulationConfig& x) { x.interferometer.gamma = 1.0; });
  bad([](SimulationConfig& x) { x.interferometer.max_passes = 0; });
  bad([](SimulationConfig& x) { x.detector.efficiency = 1.5; });
  bad([](SimulationConfig& x) { x.detector.dark_count_rate = -1.0; });
  bad([](SimulationConfig& x) { x.source.acquisition_time = 1e-9; });
  bad([](SimulationConfig& x) {
    x.mode = Mode::SinglePass;
    x.interferometer.parity_flip = true;
  });
  bad([](SimulationConfig& x) { x.interferometer.loop_length = 2000.0; });

  CHECK_FALSE(SourceParams{}.multi_photon_regime());
  CHECK(SourceParams{200e3, 20.0, 1.0, 690e-9}.multi_photon_regime());
}

TEST_CASE("metadata round trip") {
  SimulationConfig c;
  c.mode = Mode::Conventional;
  c.seed = 0xFFFFFFFFFFFFFFFFull;
  c.interferometer.phi = 0.1234567890123;
  c.interferometer.kick_model = KickModel::MirrorReflection;
  c.interferometer.parity_flip = true;
  c.detector.dead_zone_width = 1e-7;
  c.conventional.displacement_factor = 2.0;
  const auto meta = to_metadata(c);
  const SimulationConfig back = from_metadata(meta);
  CHECK(to_metadata(back) == meta);
  CHECK(back.seed == c.seed);
  CHECK(back.interferometer.phi == c.interferometer.phi);
  CHECK(back.mode == Mode::Conventional);
  CHECK(back.interferometer.parity_flip);
  auto broken = meta;
  broken["phi"] = "abc";
  CHECK_THROWS_AS(from_metadata(broken), InvalidConfig);
}

TEST_CASE("kick models") {
  InterferometerParams ifm;
  CHECK(ifm.kick(7.5e-6, 690e-9) == doctest::Approx(7.5e-6 / (2 * 86e-6 * 0.94e-3)));
  ifm.kick_model = KickModel::MirrorReflection;
  CHECK(ifm.kick(7.5e-6, 690e-9) == doctest::Approx(4 * std::numbers::pi * 7.5e-6 / 690e-9));
  CHECK(ConventionalOptics{}.displacement(7.5e-6) == doctest::Approx(2.25e-6));
}

TEST_CASE("output is independent of the worker count") {
  SimulationConfig c;
  c.source.acquisition_time = 0.06;
  for (Mode mode : {Mode::Conventional, Mode::SinglePass, Mode::MultiPass}) {
    c.mode = mode;
    const TimeTagSet reference = simulate(c, 1);
    CHECK(reference.records.size() > 100);
    for (unsigned w : {2u, 3u, 8u}) CHECK(simulate(c, w) == reference);
  }
  c.seed = 2;
  CHECK_FALSE(simulate(c, 1) == simulate(SimulationConfig{c.mode, c.source, c.drive, c.interferometer,
                                                          c.detector, c.conventional, 3},
                                         1));
}

TEST_CASE("time tags are ordered and carry pass-resolved timestamps") {
  SimulationConfig c;
  c.source.acquisition_time = 0.05;
  const TimeTagSet tags = simulate(c, 1);
  CHECK_NOTHROW(tags.validate());
  CHECK(tags.acquisition_time() == doctest::Approx(0.05));
  const double period = c.pulse_period_ns();
  const double delay = loop_delay(c.interferometer.loop_length);
  int photons = 0;
  for (const TimeTag& t : tags.records) {
    REQUIRE(t.timestamp_ns >= 0);
    REQUIRE(t.timestamp_ns < static_cast<std::int64_t>(c.source.acquisition_time * 1e9) + 200);
    if (t.pass_index == TimeTag::kUnknownPass) continue;
    ++photons;
    REQUIRE(t.pass_index <= c.interferometer.max_passes);
    const auto pulse = static_cast<std::int64_t>(std::floor(t.timestamp_ns / period));
    REQUIRE(t.timestamp_ns - pulse * static_cast<std::int64_t>(period) ==
            std::llround(t.pass_index * delay));
  }
  CHECK(photons > 0);
}

TEST_CASE("per-pass exit histogram follows the geometric law") {
  SimulationConfig c = ideal(Mode::MultiPass, 1.0);
  c.drive.tilt_amplitude_peak = 0.0;
  SimulationTap tap;
  simulate(c, 0, &tap);
  const auto f = detected_fraction_per_pass(c.interferometer.recycling(Mode::MultiPass));
  double total = 0.0;
  for (double v : f) total += v;
  std::vector<double> hist(f.size(), 0.0);
  for (auto p : tap.passes) hist[static_cast<std::size_t>(p - 1)] += 1.0;
  const double n = static_cast<double>(tap.passes.size());
  double chi2 = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double expected = n * f[j] / total;
    chi2 += (hist[j] - expected) * (hist[j] - expected) / expected;
  }
  // 26 degrees of freedom; 99.9th percentile is 54.05
  CHECK(chi2 < 54.05);

  const double expected_count = c.pulse_count() * c.source.mean_photons_per_pulse * total;
  CHECK(std::abs(n - expected_count) < 5.0 * std::sqrt(expected_count));
}

TEST_CASE("exit positions follow the per-pass reshaped density") {
  for (Mode mode : {Mode::SinglePass, Mode::MultiPass}) {
    SimulationConfig c = ideal(mode, 2.0);
    quarter_rate_drive(c, 0.3);
    SimulationTap tap;
    simulate(c, 0, &tap);
    for (int pass : {1, 3}) {
      if (pass > c.interferometer.passes(mode)) continue;
      std::vector<double> sample;
      for (std::size_t i = 0; i < tap.positions.size(); ++i) {
        if (tap.passes[i] == pass) sample.push_back(tap.positions[i]);
      }
      REQUIRE(sample.size() > 1000);
      const double d = ks_statistic(sample, mixture(c, pass));
      CAPTURE(pass);
      CAPTURE(sample.size());
      // 99.9% critical value
      CHECK(d * std::sqrt(static_cast<double>(sample.size())) < 1.95);
    }
  }
}

TEST_CASE("the tap separates the kicked densities") {
  // Sanity check of the KS harness: the wrong kick sign is rejected.
  SimulationConfig c = ideal(Mode::SinglePass, 2.0);
  quarter_rate_drive(c, 0.3);
  SimulationTap tap;
  simulate(c, 0, &tap);
  SimulationConfig wrong = c;
  wrong.drive.tilt_amplitude_peak *= 3;
  CHECK(ks_statistic(tap.positions, mixture(wrong, 1)) * std::sqrt(static_cast<double>(tap.positions.size())) > 3.0);
}

TEST_CASE("parity flip conserves the accumulated photon count") {
  SimulationConfig c = ideal(Mode::MultiPass, 1.0);
  c.interferometer.gamma = 0.0;
  c.interferometer.parity_flip = true;
  quarter_rate_drive(c, 0.3);
  SimulationTap tap;
  simulate(c, 0, &tap);
  const double expected =
      c.pulse_count() * c.source.mean_photons_per_pulse * mixture(c, c.interferometer.max_passes, true).integral() / 4;
  const double n = static_cast<double>(tap.positions.size());
  CHECK(std::abs(n - expected) < 5.0 * std::sqrt(expected));
  // Even passes are mirrored, so the centroid at even passes has the opposite
  // sign of the centroid on the following odd pass in a constant-tilt world;
  // averaged over +A and -A here, both are near zero.
  double mean = 0.0;
  for (double x : tap.positions) mean += x;
  CHECK(std::abs(mean / n) < 5 * c.interferometer.beam_sigma / std::sqrt(n));
}

TEST_CASE("zero tilt gives a symmetric detector split") {
  for (Mode mode : {Mode::Conventional, Mode::SinglePass, Mode::MultiPass}) {
    SimulationConfig c;
    c.mode = mode;
    c.source.acquisition_time = 0.5;
    c.drive.tilt_amplitude_peak = 0.0;
    const TimeTagSet tags = simulate(c, 0);
    double left = 0.0;
    for (const auto& t : tags.records) left += t.detector == Detector::Left ? 1.0 : 0.0;
    const double n = static_cast<double>(tags.records.size());
    CHECK(std::abs(left - n / 2) < 5.0 * std::sqrt(n) / 2);
  }
}

TEST_CASE("conventional beam statistics") {
  SimulationConfig c = ideal(Mode::Conventional, 0.5);
  c.drive.tilt_amplitude_peak = 0.0;
  SimulationTap tap;
  const TimeTagSet tags = simulate(c, 0, &tap);
  const double n = static_cast<double>(tap.positions.size());
  const double expected = c.pulse_count() * c.source.mean_photons_per_pulse * (1 - c.interferometer.gamma);
  CHECK(std::abs(n - expected) < 5 * std::sqrt(expected));
  double sum2 = 0.0;
  for (double y : tap.positions) sum2 += y * y;
  CHECK(std::sqrt(sum2 / n) == doctest::Approx(c.conventional.beam_sigma).epsilon(0.01));
  CHECK(tags.records.size() == tap.positions.size());
}

TEST_CASE("dead zone and efficiency thin the detected photons") {
  SimulationConfig c = ideal(Mode::Conventional, 0.5);
  c.drive.tilt_amplitude_peak = 0.0;
  c.detector.dead_zone_width = 100e-6;
  c.detector.efficiency = 0.65;
  SimulationTap tap;
  const TimeTagSet tags = simulate(c, 0, &tap);
  const double n = static_cast<double>(tap.positions.size());
  const double live = std::erfc(50e-6 / (c.conventional.beam_sigma * std::sqrt(2.0)));
  const double expected = n * live * 0.65;
  CHECK(std::abs(tags.records.size() - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("dark counts are a uniform Poisson process") {
  SimulationConfig c;
  c.mode = Mode::SinglePass;
  c.source.acquisition_time = 10.0;
  c.source.pulse_rate = 1e3;
  c.source.mean_photons_per_pulse = 1e-12;
  c.detector.dark_count_rate = 1000.0;
  const TimeTagSet tags = simulate(c, 0);
  double per_detector[2] = {0.0, 0.0};
  std::vector<double> bins(100, 0.0);
  for (const auto& t : tags.records) {
    REQUIRE(t.pass_index == TimeTag::kUnknownPass);
    per_detector[static_cast<int>(t.detector)] += 1.0;
    bins[static_cast<std::size_t>(t.timestamp_ns / 100'000'000)] += 1.0;
  }
  const double mean = 1000.0 * 10.0;
  for (double n : per_detector) CHECK(std::abs(n - mean) < 5 * std::sqrt(mean));
  const double per_bin = static_cast<double>(tags.records.size()) / 100.0;
  double chi2 = 0.0;
  for (double b : bins) chi2 += (b - per_bin) * (b - per_bin) / per_bin;
  // 99 degrees of freedom; 99.9th percentile is 148.2
  CHECK(chi2 < 148.2);
}
