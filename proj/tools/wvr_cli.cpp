// wvr: run, compare and analyze recycled weak-value experiments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wvr/errors.hpp"
#include "wvr/experiment.hpp"
#include "wvr/model.hpp"
#include "wvr/timetag_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace wvr;

namespace {

constexpr double kMicro = 1e-6;
constexpr double kFullScaleDuration = 300.0;

enum class TagPolicy { All, First, None };

struct RunOptions {
  std::vector<std::string> modes;
  std::vector<double> tilts_urad;
  std::uint64_t seed = 1;
  int repeats = 1;
  double duration = 10.0;
  std::string config_file;
  std::string reproduce;
  bool analytic_only = false;
  bool full_scale = false;
  std::string out = "wvr_out";
  std::string timetags = "first";
  unsigned workers = 0;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// configuration

struct ConfigFile {
  std::map<std::string, std::string> simulation;
  std::optional<std::vector<double>> tilts_urad;
  std::optional<std::vector<std::string>> modes;
  std::optional<int> repeats;
};

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean() || v.is_number()) return v.dump();
  throw InvalidConfig("config key '" + key + "' must be a number, string or boolean");
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("config file '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw InvalidConfig("config file must hold a JSON object");

  const auto known = to_metadata(SimulationConfig{});
  ConfigFile cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "tilt_sweep_urad") {
      cfg.tilts_urad = value.get<std::vector<double>>();
    } else if (key == "modes") {
      cfg.modes = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                    : value.get<std::vector<std::string>>();
    } else if (key == "repeats") {
      cfg.repeats = value.get<int>();
    } else if (known.contains(key)) {
      cfg.simulation[key] = scalar_text(value, key);
    } else {
      throw InvalidConfig("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

std::vector<Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<Mode> out;
  for (const auto& n : names) {
    const Mode m = parse_mode(n);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

TagPolicy parse_policy(const std::string& s) {
  if (s == "all") return TagPolicy::All;
  if (s == "first") return TagPolicy::First;
  return TagPolicy::None;
}

// Durations spanning a factor of 100 in photon number, ending at 2x `duration`.
std::vector<double> duration_ladder(double duration) {
  std::vector<double> out;
  for (int i = 0; i < 5; ++i) out.push_back(2.0 * duration * std::pow(10.0, -2.0 + 0.5 * i));
  return out;
}

// Short runs get more repeats so every rung has a usable debiased estimate.
std::vector<int> ladder_repeats(const std::vector<double>& durations, int repeats) {
  std::vector<int> out;
  for (double d : durations) {
    out.push_back(std::max(2, static_cast<int>(std::ceil(repeats * std::sqrt(durations.front() / d)))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON summaries

json fit_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr_slope", f.stderr_slope},
          {"r_squared", f.r_squared}, {"points", f.n}};
}

json prediction_json(const AnalyticPrediction& a) {
  return {{"postselection", a.postselection},
          {"lossless_snr_gain", a.lossless_snr_gain},
          {"infinite_pass_gain", a.infinite_pass_gain},
          {"count_ratio", a.count_ratio},
          {"shift_ratio", a.shift_ratio},
          {"signal_boost", a.signal_boost},
          {"snr_boost", a.snr_boost},
          {"single_pass_fraction", a.single_pass_fraction},
          {"multi_pass_fraction", a.multi_pass_fraction}};
}

double input_photons(const SimulationConfig& base, double duration) {
  SimulationConfig c = base;
  c.source.acquisition_time = duration;
  return static_cast<double>(c.pulse_count()) * c.source.mean_photons_per_pulse;
}

json summarize(const SweepPlan& plan, const std::vector<RunRecord>& records) {
  json summary;
  auto meta = to_metadata(plan.base);
  meta.erase("mode");
  meta.erase("tilt_amplitude");
  meta.erase("acquisition_time");
  summary["config"] = meta;
  json modes = json::array();
  for (Mode m : plan.modes) modes.push_back(mode_name(m));
  summary["modes"] = modes;
  json tilts = json::array();
  for (double t : plan.tilts) tilts.push_back(2.0 * t / kMicro);
  summary["tilt_peak_to_peak_urad"] = tilts;
  summary["acquisition_time_s"] = plan.durations;
  summary["repeats"] = plan.repeats;

  const bool tilt_sweep = plan.tilts.size() >= 2;
  const bool duration_sweep = plan.durations.size() >= 2;
  std::map<Mode, LineFit> signal_fits;
  json points = json::object();
  json fits = json::object();
  for (Mode m : plan.modes) {
    const auto agg = aggregate(records, m);
    json rows = json::array();
    for (const auto& p : agg) {
      rows.push_back({{"tilt_peak_to_peak_urad", 2.0 * p.tilt_peak / kMicro},
                      {"acquisition_time_s", p.acquisition_time},
                      {"repeats", p.repeats},
                      {"mean_detected", p.mean_detected},
                      {"signal", p.signal},
                      {"noise", p.noise},
                      {"snr", p.snr},
                      {"signal_counts", p.signal_counts},
                      {"mean_raw_snr", p.mean_raw_snr}});
    }
    points[std::string(mode_name(m))] = rows;

    json mode_fits = json::object();
    if (tilt_sweep && !duration_sweep) {
      std::vector<double> x, y;
      for (const auto& p : agg) {
        x.push_back(2.0 * p.tilt_peak / kMicro);
        y.push_back(p.signal_counts);
      }
      signal_fits[m] = fit_line(x, y);
      mode_fits["signal_counts_vs_tilt"] = fit_json(signal_fits[m]);
    }
    if (duration_sweep) {
      // One tilt per duration rung: the largest.
      const double tilt = plan.tilts.back();
      std::vector<double> ln_detected, ln_noise, ln_input, ln_snr;
      for (const auto& p : agg) {
        if (p.tilt_peak != tilt) continue;
        ln_detected.push_back(std::log(p.mean_detected));
        ln_noise.push_back(std::log(p.noise));
        if (p.snr > 0.0) {
          ln_input.push_back(std::log(input_photons(plan.base, p.acquisition_time)));
          ln_snr.push_back(std::log(p.snr));
        }
      }
      mode_fits["log_noise_vs_log_detected"] = fit_json(fit_line(ln_detected, ln_noise));
      if (ln_snr.size() >= 2) mode_fits["log_snr_vs_log_input_photons"] = fit_json(fit_line(ln_input, ln_snr));
    }
    fits[std::string(mode_name(m))] = mode_fits;
  }
  summary["points"] = points;
  summary["fits"] = fits;

  json boosts = json::object();
  auto has = [&](Mode m) { return std::find(plan.modes.begin(), plan.modes.end(), m) != plan.modes.end(); };
  if (signal_fits.contains(Mode::MultiPass) && signal_fits.contains(Mode::SinglePass)) {
    const auto& a = signal_fits[Mode::MultiPass];
    const auto& b = signal_fits[Mode::SinglePass];
    const double ratio = a.slope / b.slope;
    const double err = std::abs(ratio) * std::hypot(a.stderr_slope / a.slope, b.stderr_slope / b.slope);
    boosts["signal_slope_ratio_multi_single"] = {{"ratio", ratio}, {"stderr", err}};
  }
  auto snr_boost = [&](Mode a, Mode b, const char* name) {
    if (!has(a) || !has(b)) return;
    const BoostReport r = compare(records, a, records, b);
    boosts[name] = {{"slope", r.slope}, {"stderr_slope", r.stderr_slope}, {"points", r.points}};
  };
  snr_boost(Mode::MultiPass, Mode::SinglePass, "snr_multi_vs_single");
  snr_boost(Mode::SinglePass, Mode::Conventional, "snr_single_vs_conventional");
  snr_boost(Mode::MultiPass, Mode::Conventional, "snr_multi_vs_conventional");
  summary["boosts"] = boosts;
  summary["analytic"] = prediction_json(analytic_prediction(plan.base, plan.tilts.back()));
  return summary;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// analytic tables

json analytic_tables(const SimulationConfig& base, const std::vector<double>& tilts) {
  const auto& ifm = base.interferometer;
  const double p = ifm.postselection();
  json doc;
  doc["phi"] = ifm.phi;
  doc["postselection"] = p;
  doc["weak_value_imag"] = weak_value(sagnac_initial(ifm.phi), sagnac_dark_port(), PathOperator::which_path()).imag();
  doc["infinite_pass_gain"] = snr_gain_limit(p);

  const RecyclingParams lossy = ifm.recycling(Mode::MultiPass);
  const auto per_pass = detected_fraction_per_pass(lossy);
  json passes = json::array();
  double cumulative = 0.0;
  for (int r = 1; r <= ifm.max_passes; ++r) {
    const RecyclingParams lossless{p, 0.0, r};
    cumulative += per_pass[static_cast<std::size_t>(r - 1)];
    json row = {{"passes", r},
                {"lossless_recycled_fraction", recycled_power_fraction(lossless)},
                {"lossless_snr_gain", snr_gain(lossless)},
                {"detected_fraction_pass", per_pass[static_cast<std::size_t>(r - 1)]},
                {"detected_fraction_cumulative", cumulative}};
    if (p * (r - 1) < 1.0) row["small_p_snr_gain"] = snr_gain_small_p(p, r);
    passes.push_back(row);
  }
  doc["passes"] = passes;

  json by_tilt = json::array();
  for (double t : tilts) {
    json row = prediction_json(analytic_prediction(base, t));
    row["tilt_peak_to_peak_urad"] = 2.0 * t / kMicro;
    row["kick_sigma"] = ifm.kick(t, base.source.wavelength) * ifm.beam_sigma;
    by_tilt.push_back(row);
  }
  doc["tilts"] = by_tilt;
  return doc;
}

void print_analytic(const json& doc) {
  std::printf("post-selection p = %s  (phi = %s rad)\n", num(doc["postselection"]).c_str(),
              num(doc["phi"]).c_str());
  std::printf("weak value A_w = %si\n", num(doc["weak_value_imag"]).c_str());
  std::printf("infinite-pass lossless gain 1/sqrt(p) = %s\n\n", num(doc["infinite_pass_gain"]).c_str());
  std::printf("%6s %14s %14s %14s %14s\n", "passes", "recycled_frac", "snr_gain", "det_frac_pass", "det_frac_cum");
  for (const auto& row : doc["passes"]) {
    std::printf("%6d %14s %14s %14s %14s\n", row["passes"].get<int>(),
                num(row["lossless_recycled_fraction"]).c_str(), num(row["lossless_snr_gain"]).c_str(),
                num(row["detected_fraction_pass"]).c_str(), num(row["detected_fraction_cumulative"]).c_str());
  }
  std::printf("\n%10s %12s %12s %12s %12s\n", "tilt_pp", "count_ratio", "shift_ratio", "signal_boost",
              "snr_boost");
  for (const auto& row : doc["tilts"]) {
    std::printf("%10s %12s %12s %12s %12s\n", num(row["tilt_peak_to_peak_urad"]).c_str(),
                num(row["count_ratio"]).c_str(), num(row["shift_ratio"]).c_str(),
                num(row["signal_boost"]).c_str(), num(row["snr_boost"]).c_str());
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_run(RunOptions opt, const CLI::App& app) {
  SimulationConfig base;
  std::vector<double> tilts_urad{1.5, 3.0, 4.5, 6.0, 7.5};
  std::vector<std::string> mode_names{"multi"};
  int repeats = 1;
  double duration = opt.full_scale ? kFullScaleDuration : opt.duration;

  if (!opt.config_file.empty()) {
    const ConfigFile cfg = load_config(opt.config_file);
    base = from_metadata(cfg.simulation);
    if (cfg.simulation.contains("acquisition_time") && !app.count("--duration")) {
      duration = base.source.acquisition_time;
    }
    if (cfg.tilts_urad) tilts_urad = *cfg.tilts_urad;
    if (cfg.modes) mode_names = *cfg.modes;
    if (cfg.repeats) repeats = *cfg.repeats;
    if (!cfg.simulation.contains("seed")) base.seed = opt.seed;
  } else {
    base.seed = opt.seed;
  }

  std::vector<double> durations{duration};
  std::vector<int> repeat_list;
  if (!opt.reproduce.empty()) {
    repeats = 20;
    if (opt.reproduce == "fig2a" || opt.reproduce == "fig3b") {
      mode_names = {"single", "multi"};
    } else if (opt.reproduce == "fig2b") {
      mode_names = {"single", "multi"};
      durations = duration_ladder(duration);
    } else if (opt.reproduce == "fig3a") {
      mode_names = {"conventional", "single", "multi"};
      durations = duration_ladder(duration);
    }
    if (durations.size() > 1 && !app.count("--tilt-sweep")) tilts_urad = {tilts_urad.back()};
  }
  if (app.count("--mode")) mode_names = opt.modes;
  if (app.count("--tilt-sweep")) tilts_urad = opt.tilts_urad;
  if (app.count("--repeats")) repeats = opt.repeats;
  if (app.count("--seed")) base.seed = opt.seed;
  if (repeats < 1) throw InvalidConfig("--repeats must be at least 1");
  if (tilts_urad.empty()) throw InvalidConfig("tilt sweep is empty");

  for (double& d : durations) d = align_duration(d, base.drive.drive_frequency);
  repeat_list = durations.size() > 1 ? ladder_repeats(durations, repeats) : std::vector<int>{repeats};
  base.source.acquisition_time = durations.front();

  std::vector<double> tilts;
  for (double t : tilts_urad) tilts.push_back(t * kMicro);

  const fs::path out_dir(opt.out);
  fs::create_directories(out_dir);

  if (opt.analytic_only) {
    // analytic tables do not depend on the random seed
    const json doc = analytic_tables(base, tilts);
    print_analytic(doc);
    write_file(out_dir / "analytic.json", doc.dump(2) + "\n");
    return 0;
  }

  SweepPlan plan;
  plan.base = base;
  plan.modes = parse_modes(mode_names);
  plan.tilts = tilts;
  plan.durations = durations;
  plan.repeats = repeat_list;
  plan.workers = opt.workers;
  for (Mode m : plan.modes) {
    SimulationConfig c = base;
    c.mode = m;
    if (m != Mode::MultiPass) c.interferometer.parity_flip = false;
    c.validate();
  }

  const TagPolicy policy = parse_policy(opt.timetags);
  const fs::path tag_dir = out_dir / "timetags";
  if (policy != TagPolicy::None) fs::create_directories(tag_dir);
  std::size_t done = 0;
  std::size_t total = 0;
  for (int r : repeat_list) total += static_cast<std::size_t>(r) * plan.modes.size() * tilts.size();
  const bool progress = isatty(STDERR_FILENO) != 0;
  plan.on_run = [&](const RunRecord& rec, const TimeTagSet& tags) {
    ++done;
    if (progress) std::fprintf(stderr, "\r[%zu/%zu] runs", done, total);
    if (policy == TagPolicy::None || (policy == TagPolicy::First && rec.repeat != 0)) return;
    const std::string name = std::string(mode_name(rec.mode)) + "_tilt" + num(2.0 * rec.tilt_peak / kMicro) +
                             "urad_T" + num(rec.acquisition_time) + "s_r" + std::to_string(rec.repeat) + ".tags";
    write_timetags(tags, tag_dir / name);
  };

  const auto records = run_sweep(plan);
  if (progress) std::fprintf(stderr, "\n");

  std::ostringstream csv;
  write_results_csv(records, csv);
  write_file(out_dir / "results.csv", csv.str());
  json summary = summarize(plan, records);
  if (!opt.reproduce.empty()) summary["reproduce"] = opt.reproduce;
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  const json& boosts = summary["boosts"];
  for (const auto& [mode, f] : summary["fits"].items()) {
    if (f.contains("signal_counts_vs_tilt")) {
      std::printf("%-12s signal slope %s +- %s counts/urad\n", mode.c_str(),
                  num(f["signal_counts_vs_tilt"]["slope"]).c_str(),
                  num(f["signal_counts_vs_tilt"]["stderr_slope"]).c_str());
    }
    if (f.contains("log_noise_vs_log_detected")) {
      std::printf("%-12s noise floor log-log slope %s\n", mode.c_str(),
                  num(f["log_noise_vs_log_detected"]["slope"]).c_str());
    }
    if (f.contains("log_snr_vs_log_input_photons")) {
      std::printf("%-12s SNR log-log slope %s\n", mode.c_str(), num(f["log_snr_vs_log_input_photons"]["slope"]).c_str());
    }
  }
  for (const auto& [name, b] : boosts.items()) {
    if (b.contains("ratio")) {
      std::printf("%s = %s +- %s\n", name.c_str(), num(b["ratio"]).c_str(), num(b["stderr"]).c_str());
    } else {
      std::printf("%s = %s +- %s\n", name.c_str(), num(b["slope"]).c_str(), num(b["stderr_slope"]).c_str());
    }
  }
  std::printf("analytic: signal boost %s, SNR boost %s\n", num(summary["analytic"]["signal_boost"]).c_str(),
              num(summary["analytic"]["snr_boost"]).c_str());
  std::printf("wrote %s\n", out_dir.string().c_str());
  return 0;
}

std::vector<RunRecord> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results file '" + path + "'");
  return read_results_csv(in);
}

Mode pick_mode(const std::vector<RunRecord>& recs, const std::string& requested, const std::string& path) {
  if (!requested.empty()) return parse_mode(requested);
  std::set<Mode> seen;
  for (const auto& r : recs) seen.insert(r.mode);
  if (seen.size() != 1) throw InvalidArgument("'" + path + "' holds several modes; pick one with --mode-a/--mode-b");
  return *seen.begin();
}

int cmd_compare(const std::string& file_a, const std::string& file_b, const std::string& mode_a,
                const std::string& mode_b) {
  const auto a = load_results(file_a);
  const auto b = load_results(file_b);
  const Mode ma = pick_mode(a, mode_a, file_a);
  const Mode mb = pick_mode(b, mode_b, file_b);
  const BoostReport r = compare(a, ma, b, mb);
  json doc = {{"mode_a", mode_name(ma)}, {"mode_b", mode_name(mb)}, {"slope", r.slope},
              {"stderr_slope", r.stderr_slope}, {"points", r.points}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_analyze(const std::string& file, double drive_frequency, double bin_width) {
  const TimeTagSet tags = read_timetags(fs::path(file));
  if (drive_frequency <= 0.0) drive_frequency = from_metadata(tags.metadata).drive.drive_frequency;
  AnalysisOptions options;
  options.bin_width = bin_width;
  const SpectrumResult r = measure_snr(tags, drive_frequency, options);
  json doc = {{"file", file},
              {"records", tags.records.size()},
              {"drive_frequency", r.drive_frequency},
              {"frequency_resolution", r.frequency_resolution},
              {"detected_photons", r.detected_photons},
              {"signal", r.signal_amplitude},
              {"noise", r.noise_floor},
              {"snr", r.snr},
              {"signal_counts", r.signal_counts()}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-recycled weak-value amplification: simulation and analysis"};
  app.require_subcommand(1);

  RunOptions opt;
  auto* run = app.add_subcommand("run", "simulate a sweep and write CSV, JSON summary and time tags");
  run->add_option("--mode", opt.modes, "conventional, single, multi (comma-separated)")->delimiter(',');
  run->add_option("--tilt-sweep", opt.tilts_urad, "peak tilt amplitudes [urad], comma-separated")->delimiter(',');
  run->add_option("--seed", opt.seed, "master seed");
  run->add_option("--repeats", opt.repeats, "repeats per sweep point");
  run->add_option("--duration", opt.duration, "acquisition time per run [s]");
  run->add_option("--config", opt.config_file, "JSON file with flat config keys")->check(CLI::ExistingFile);
  run->add_option("--reproduce", opt.reproduce, "figure preset")
      ->check(CLI::IsMember({"fig2a", "fig2b", "fig3a", "fig3b"}));
  run->add_flag("--analytic-only", opt.analytic_only, "closed-form tables only, no Monte Carlo");
  run->add_flag("--full-scale", opt.full_scale, "300 s acquisitions as in the experiment");
  run->add_option("--out", opt.out, "output directory");
  run->add_option("--timetags", opt.timetags, "time-tag files to keep")
      ->check(CLI::IsMember({"all", "first", "none"}));
  run->add_option("--workers", opt.workers, "worker threads (0 = all cores)");

  std::string file_a, file_b, mode_a, mode_b;
  auto* cmp = app.add_subcommand("compare", "fit SNR of results A against results B through the origin");
  cmp->add_option("results_a", file_a)->required()->check(CLI::ExistingFile);
  cmp->add_option("results_b", file_b)->required()->check(CLI::ExistingFile);
  cmp->add_option("--mode-a", mode_a, "mode to take from results A");
  cmp->add_option("--mode-b", mode_b, "mode to take from results B");

  std::string tag_file;
  double drive_frequency = 0.0;
  double bin_width = 100e-6;
  auto* ana = app.add_subcommand("analyze", "extract signal, noise floor and SNR from a time-tag file");
  ana->add_option("timetag_file", tag_file)->required()->check(CLI::ExistingFile);
  ana->add_option("--drive-frequency", drive_frequency, "Hz; default from the file metadata");
  ana->add_option("--bin-width", bin_width, "s");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(opt, *run);
    if (*cmp) return cmd_compare(file_a, file_b, mode_a, mode_b);
    if (*ana) return cmd_analyze(tag_file, drive_frequency, bin_width);
  } catch (const FormatError& e) {
    std::cerr << "wvr: format error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "wvr: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
