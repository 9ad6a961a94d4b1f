#include "wvr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "text_format.hpp"
#include "wvr/errors.hpp"
#include "wvr/reshaping.hpp"
#include "wvr/rng.hpp"

namespace wvr {

namespace {

constexpr std::string_view kCsvHeader =
    "mode,tilt_peak_to_peak_urad,repeat,seed,acquisition_time_s,detected_photons,signal,noise,snr,signal_counts";

struct Task {
  Mode mode;
  std::size_t point;
  double duration;
  double tilt;
  int repeat;
};

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t parent, Mode mode, std::size_t point, int repeat) {
  const std::uint64_t by_mode = derive_seed(parent, static_cast<std::uint64_t>(mode));
  return derive_seed(derive_seed(by_mode, point), static_cast<std::uint64_t>(repeat));
}

double align_duration(double duration, double drive_frequency) {
  if (!(duration > 0.0) || !(drive_frequency > 0.0)) {
    throw InvalidConfig("duration and drive frequency must be positive");
  }
  const double periods = std::max(2.0, std::round(duration * drive_frequency));
  return periods / drive_frequency;
}

std::vector<RunRecord> run_sweep(const SweepPlan& plan) {
  if (plan.modes.empty() || plan.tilts.empty()) throw InvalidConfig("sweep needs at least one mode and one tilt");
  const std::vector<double> durations =
      plan.durations.empty() ? std::vector<double>{plan.base.source.acquisition_time} : plan.durations;
  if (plan.repeats.size() != 1 && plan.repeats.size() != durations.size()) {
    throw InvalidConfig("repeats must have one entry or one per duration");
  }

  std::vector<Task> tasks;
  for (Mode mode : plan.modes) {
    std::size_t point = 0;
    for (std::size_t d = 0; d < durations.size(); ++d) {
      const int reps = plan.repeats.size() == 1 ? plan.repeats[0] : plan.repeats[d];
      if (reps < 1) throw InvalidConfig("repeats must be at least 1");
      for (double tilt : plan.tilts) {
        for (int rep = 0; rep < reps; ++rep) tasks.push_back({mode, point, durations[d], tilt, rep});
        ++point;
      }
    }
  }

  // Validate every configuration up front so no worker throws.
  auto config_for = [&](const Task& t) {
    SimulationConfig c = plan.base;
    c.mode = t.mode;
    c.source.acquisition_time = t.duration;
    c.drive.tilt_amplitude_peak = t.tilt;
    c.seed = run_seed(plan.base.seed, t.mode, t.point, t.repeat);
    if (t.mode != Mode::MultiPass) c.interferometer.parity_flip = false;
    return c;
  };
  for (const Task& t : tasks) config_for(t).validate();

  std::vector<RunRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const SimulationConfig c = config_for(tasks[i]);
        const TimeTagSet tags = simulate(c, 1);
        RunRecord& rec = records[i];
        rec.mode = c.mode;
        rec.tilt_peak = c.drive.tilt_amplitude_peak;
        rec.repeat = tasks[i].repeat;
        rec.seed = c.seed;
        rec.acquisition_time = c.source.acquisition_time;
        rec.result = measure_snr(tags, c.drive.drive_frequency, plan.analysis);
        if (plan.on_run) {
          std::lock_guard lock(sink);
          plan.on_run(rec, tags);
        }
      } catch (...) {
        std::lock_guard lock(sink);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  unsigned workers = plan.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<SweepPoint> aggregate(std::span<const RunRecord> records, Mode mode) {
  std::vector<SweepPoint> points;
  std::vector<std::vector<const RunRecord*>> members;
  for (const auto& r : records) {
    if (r.mode != mode) continue;
    auto it = std::find_if(points.begin(), points.end(), [&](const SweepPoint& p) {
      return p.tilt_peak == r.tilt_peak && p.acquisition_time == r.acquisition_time;
    });
    if (it == points.end()) {
      SweepPoint p;
      p.mode = mode;
      p.tilt_peak = r.tilt_peak;
      p.acquisition_time = r.acquisition_time;
      points.push_back(p);
      members.emplace_back();
      it = points.end() - 1;
    }
    members[static_cast<std::size_t>(it - points.begin())].push_back(&r);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    SweepPoint& p = points[i];
    double s2 = 0.0, n2 = 0.0, c2 = 0.0, nc2 = 0.0, detected = 0.0, raw = 0.0;
    for (const RunRecord* r : members[i]) {
      const auto& res = r->result;
      s2 += res.signal_amplitude * res.signal_amplitude;
      n2 += res.noise_floor * res.noise_floor;
      c2 += res.signal_counts() * res.signal_counts();
      nc2 += res.noise_counts() * res.noise_counts();
      detected += static_cast<double>(res.detected_photons);
      raw += res.snr;
    }
    const double n = static_cast<double>(members[i].size());
    p.repeats = static_cast<int>(members[i].size());
    p.mean_detected = detected / n;
    p.noise = std::sqrt(n2 / n);
    p.signal = std::sqrt(std::max(0.0, (s2 - n2) / n));
    p.signal_counts = std::sqrt(std::max(0.0, (c2 - nc2) / n));
    p.snr = p.noise > 0.0 ? p.signal / p.noise : 0.0;
    p.mean_raw_snr = raw / n;
  }
  return points;
}

LineFit fit_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("fit needs matching, nonempty samples");
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit through origin needs a nonzero abscissa");
  LineFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss_res += (y[i] - f.slope * x[i]) * (y[i] - f.slope * x[i]);
  f.stderr_slope = f.n > 1 ? std::sqrt(ss_res / static_cast<double>(f.n - 1) / sxx) : 0.0;
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("line fit needs at least two matching samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("line fit needs distinct abscissae");
  LineFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    ss_res += e * e;
  }
  f.stderr_slope = f.n > 2 ? std::sqrt(ss_res / static_cast<double>(f.n - 2) / sxx) : 0.0;
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

BoostReport compare(std::span<const RunRecord> a, Mode mode_a, std::span<const RunRecord> b, Mode mode_b) {
  const auto pa = aggregate(a, mode_a);
  const auto pb = aggregate(b, mode_b);
  if (pa.empty() || pa.size() != pb.size()) {
    throw MismatchedSweeps("compared sweeps must cover the same, nonempty set of points");
  }
  std::vector<double> x, y;
  for (const auto& p : pa) {
    auto it = std::find_if(pb.begin(), pb.end(), [&](const SweepPoint& q) {
      return q.tilt_peak == p.tilt_peak && q.acquisition_time == p.acquisition_time;
    });
    if (it == pb.end()) throw MismatchedSweeps("sweep point without a partner in the other result set");
    x.push_back(it->snr);
    y.push_back(p.snr);
  }
  const LineFit f = fit_through_origin(x, y);
  return {f.slope, f.stderr_slope, f.n};
}

void write_results_csv(std::span<const RunRecord> records, std::ostream& out) {
  using text::format_double;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << mode_name(r.mode) << ',' << format_double(2.0 * r.tilt_peak * 1e6) << ',' << r.repeat << ','
        << r.seed << ',' << format_double(r.acquisition_time) << ',' << r.result.detected_photons << ','
        << format_double(r.result.signal_amplitude) << ',' << format_double(r.result.noise_floor) << ','
        << format_double(r.result.snr) << ',' << format_double(r.result.signal_counts()) << '\n';
  }
}

std::vector<RunRecord> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError(1, "empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw FormatError(1, "unexpected results header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw FormatError(line_no, "expected 10 columns");
    RunRecord r;
    try {
      r.mode = parse_mode(f[0]);
    } catch (const InvalidConfig& e) {
      throw FormatError(line_no, e.what());
    }
    auto num = [&](std::string_view s, const char* what) {
      auto v = text::parse_number<double>(s);
      if (!v) throw FormatError(line_no, std::string("bad ") + what);
      return *v;
    };
    r.tilt_peak = num(f[1], "tilt") / 2.0 * 1e-6;
    const auto rep = text::parse_number<int>(f[2]);
    const auto seed = text::parse_number<std::uint64_t>(f[3]);
    const auto detected = text::parse_number<std::int64_t>(f[5]);
    if (!rep || !seed || !detected) throw FormatError(line_no, "bad integer column");
    r.repeat = *rep;
    r.seed = *seed;
    r.acquisition_time = num(f[4], "acquisition time");
    r.result.detected_photons = *detected;
    r.result.signal_amplitude = num(f[6], "signal");
    r.result.noise_floor = num(f[7], "noise");
    r.result.snr = num(f[8], "snr");
    r.result.frequency_resolution = r.acquisition_time > 0.0 ? 1.0 / r.acquisition_time : 0.0;
    out.push_back(r);
  }
  return out;
}

AnalyticPrediction analytic_prediction(const SimulationConfig& config, double tilt_peak) {
  const auto& ifm = config.interferometer;
  const BeamProfile n0 = BeamProfile::gaussian(ifm.beam_sigma, 1.0);
  ReshapingParams params = ifm.reshaping(tilt_peak, config.source.wavelength);
  const int r = ifm.max_passes;
  const BeamProfile single = density_pass(n0, params, 1);
  const BeamProfile many = density_accumulated(n0, params, r);

  AnalyticPrediction a;
  a.postselection = ifm.postselection();
  a.lossless_snr_gain = snr_gain({a.postselection, 0.0, r});
  a.infinite_pass_gain = snr_gain_limit(a.postselection);
  a.single_pass_fraction = single.integral();
  a.multi_pass_fraction = many.integral();
  a.count_ratio = a.multi_pass_fraction / a.single_pass_fraction;
  if (params.k != 0.0) {
    a.shift_ratio = centroid_shift(many) / centroid_shift(single);
    a.signal_boost = reshaped_signal_boost(n0, params, r);
    a.snr_boost = reshaped_snr_boost(n0, params, r, config.detector.detector_sigma);
  }
  return a;
}

}  // namespace wvr
