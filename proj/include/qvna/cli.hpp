// Copyright 2026 The qvna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Batch commands behind the qvna tool. Each one reads a RunConfig, runs the
// experiment and writes CSV/JSON files plus a manifest into the output
// directory. Files are written by one thread after all points complete.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qvna/config.hpp"
#include "qvna/pipeline.hpp"
#include "qvna/text.hpp"

namespace qvna {

#ifndef QVNA_VERSION
#define QVNA_VERSION "0.0.0"
#endif

inline constexpr int kExitOk = 0;
inline constexpr int kExitPointFailures = 1;
inline constexpr int kExitInvalid = 2;

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> shots;
};

inline void apply(RunConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.workers) {
    if (*o.workers < 1) throw ValidationError("--workers: must be >= 1");
    c.experiment.workers = *o.workers;
  }
  if (o.shots) c.experiment.shots = *o.shots;
}

/// Rounds every number to the 9 significant digits used in CSV output.
inline json rounded(json j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    return std::isfinite(v) ? json(parse_number(format_number(v))) : json(nullptr);
  }
  if (j.is_array() || j.is_object())
    for (auto& v : j) v = rounded(v);
  return j;
}

inline void check_band(const RunConfig& c) {
  try {
    validate_frequencies(c.experiment.frequencies_mhz, c.min_freq_mhz, c.max_freq_mhz);
  } catch (const SweepError& e) {
    throw ValidationError(std::string("experiment.frequencies_mhz: ") + e.what() +
                          " (set experiment.min_freq_mhz / max_freq_mhz to override)");
  }
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects output files and the manifest of one run.
class RunWriter {
 public:
  RunWriter(const RunConfig& c, std::string command) : dir_(c.output_dir) {
    std::filesystem::create_directories(dir_);
    manifest_["tool"] = "qvna";
    manifest_["version"] = QVNA_VERSION;
    manifest_["command"] = std::move(command);
    manifest_["config"] = echo(c);
    manifest_["config_hash"] = "fnv1a64:" + config_hash(c);
    manifest_["seed"] = c.seed;
    manifest_["floating_point"] =
        "IEEE-754 binary64, round to nearest; per-point RNG streams make outputs independent "
        "of the worker count";
    manifest_["started_utc"] = utc_now();
    manifest_["files"] = json::array();
  }

  void file(const std::string& name, const std::string& content) {
    write_text_file((dir_ / name).string(), content);
    manifest_["files"].push_back(
        {{"name", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
  }
  void json_file(const std::string& name, const json& j) { file(name, rounded(j).dump(2) + "\n"); }

  json& manifest() { return manifest_; }

  int finish(int code) {
    manifest_["exit_code"] = code;
    manifest_["finished_utc"] = utc_now();
    write_text_file((dir_ / "manifest.json").string(), rounded(manifest_).dump(2) + "\n");
    return code;
  }

 private:
  std::filesystem::path dir_;
  json manifest_;
};

inline json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline json fit_json(const RotationFit& f) {
  const Eigen::Matrix3d c = f.theta_covariance_mhz();
  return {{"theta_mhz", vec_json(f.theta_mhz())},
          {"theta_sigma_mhz",
           {std::sqrt(std::max(c(0, 0), 0.0)), std::sqrt(std::max(c(1, 1), 0.0)),
            std::sqrt(std::max(c(2, 2), 0.0))}},
          {"rate_mhz", f.rabi_mhz()},
          {"residual_rms", f.residual_rms},
          {"converged", f.converged},
          {"iterations", f.iterations}};
}

inline json failure_json(const PointFailure& f) {
  return {{"freq_mhz", f.freq_mhz}, {"stage", f.stage}, {"message", f.message}};
}

/// Rabi scan, dressed scan and second-frame data at one frequency, with the
/// fits behind them.
inline int cmd_trace(const RunConfig& c) {
  RunWriter out(c, "trace");
  const SweepSetup setup = c.setup();
  const double f = c.experiment.trace_freq_mhz;
  const Strategy s = resolve_strategy(c.strategy, c.drive, f);
  PointRecords rec;
  std::optional<TransferPoint> pt;
  std::optional<PointFailure> failure;
  try {
    pt = measure_point(setup, f, s, c.experiment.shots, point_seed(c.seed, f, s, c.drive.detuning_sign), &rec);
  } catch (const StageError& e) {
    failure = PointFailure{f, e.stage(), e.what()};
  }
  auto emit = [&](const std::string& stem, const TomographyRecord& r) {
    if (r.size() == 0) return;
    out.file(stem + ".csv", to_csv(r));
    out.json_file(stem + ".meta.json", sidecar(r));
  };
  emit("rabi_scan", rec.rabi);
  emit("dressed_scan", rec.dressed);
  emit("second_frame", rec.second);
  json summary = {{"freq_mhz", f}, {"strategy", strategy_name(s)}};
  if (rec.rabi.size() > 0 && rec.rabi_fit.converged) summary["rabi_fit"] = fit_json(rec.rabi_fit);
  if (rec.dressed_fit) summary["dressed_fit"] = fit_json(*rec.dressed_fit);
  if (pt) summary["point"] = to_json(*pt);
  if (failure) summary["failure"] = failure_json(*failure);
  out.json_file("fit_summary.json", summary);
  if (failure) {
    out.manifest()["failures"] = json::array({failure_json(*failure)});
    return out.finish(kExitPointFailures);
  }
  out.manifest()["diagnostics"] = json::array({to_json(*pt)});
  return out.finish(kExitOk);
}

/// A single transfer-function point.
inline int cmd_point(const RunConfig& c) {
  RunWriter out(c, "point");
  const double f = c.experiment.trace_freq_mhz;
  const Strategy s = resolve_strategy(c.strategy, c.drive, f);
  try {
    const auto pt = measure_point(c.setup(), f, s, c.experiment.shots,
                                  point_seed(c.seed, f, s, c.drive.detuning_sign));
    out.json_file("point.json", to_json(pt));
    out.manifest()["diagnostics"] = json::array({to_json(pt)});
    return out.finish(kExitOk);
  } catch (const StageError& e) {
    out.manifest()["failures"] = json::array({failure_json({f, e.stage(), e.what()})});
    return out.finish(kExitPointFailures);
  }
}

/// Ground truth sampled on the grid of `est`.
inline TransferFunction truth_on(const TransferFunction& line, const std::vector<double>& freqs) {
  std::vector<SamplePoint> pts;
  for (double f : freqs) {
    const Response r = line.at(f);
    pts.push_back({f, r.amp, r.phase_defined ? r.phase : 0.0, 0.0, 0.0});
  }
  return TransferFunction::sampled(std::move(pts));
}

/// Max/mean amplitude and phase error of a sweep against the truth, overall
/// and per strategy. Points below the noise floor are counted, not scored.
inline json error_summary(const SweepResult& r, const TransferFunction& line) {
  struct Acc {
    double max_amp = 0, sum_amp = 0, max_phase = 0, sum_phase = 0;
    int n = 0, floor = 0;
    json to() const {
      json j = {{"points", n}, {"below_noise_floor", floor}};
      if (n > 0)
        j.update({{"max_amp_error", max_amp},
                  {"mean_amp_error", sum_amp / n},
                  {"max_phase_error_rad", max_phase},
                  {"mean_phase_error_rad", sum_phase / n}});
      return j;
    }
  };
  std::map<std::string, Acc> by;
  const auto& samples = r.estimate.samples().points;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    for (const std::string& key : {std::string("all"), std::string(strategy_name(p.strategy))}) {
      Acc& a = by[key];
      if (p.below_noise_floor) {
        ++a.floor;
        continue;
      }
      const Response t = line.at(p.freq_mhz);
      const double ea = std::abs(samples[i].amp / t.amp - 1.0);
      const double ep = std::abs(wrap_phase(samples[i].phase - (t.phase_defined ? t.phase : 0.0)));
      a.max_amp = std::max(a.max_amp, ea);
      a.sum_amp += ea;
      a.max_phase = std::max(a.max_phase, ep);
      a.sum_phase += ep;
      ++a.n;
    }
  }
  json j = json::object();
  for (const auto& [k, a] : by) j[k] = a.to();
  j["failed_points"] = r.failures.size();
  return j;
}

/// Estimated transfer function over the configured frequency list.
inline int cmd_sweep(const RunConfig& c) {
  const SweepSetup setup = c.setup();
  check_band(c);
  RunWriter out(c, "sweep");
  const SweepResult r = sweep(setup, c.experiment.frequencies_mhz, c.strategy, c.experiment.shots,
                              c.seed, c.experiment.workers);
  out.file("estimate.csv", to_csv(r.estimate));
  out.file("truth.csv", to_csv(truth_on(c.line.line, r.estimate.frequencies())));
  json summary = error_summary(r, c.line.line);
  std::size_t usable = 0;
  for (const auto& p : r.estimate.samples().points)
    if (p.phase_sigma < kDelayFitMaxPhaseSigma) ++usable;
  if (usable >= 3) {
    const DelayFit d = fit_and_subtract_delay(r.estimate);
    out.file("estimate_delay_subtracted.csv", to_csv(d.residual));
    const json dj = {{"tau_ns", d.tau_ns},
                     {"tau_sigma_ns", d.tau_sigma_ns},
                     {"intercept_rad", d.intercept},
                     {"unwrap_warning", d.unwrap_warning}};
    summary["delay_fit"] = dj;
    out.manifest()["delay_fit"] = dj;
  }
  out.json_file("error_summary.json", summary);
  json diag = json::array();
  for (const auto& p : r.points) diag.push_back(to_json(p));
  out.manifest()["diagnostics"] = diag;
  json fails = json::array();
  for (const auto& f : r.failures) fails.push_back(failure_json(f));
  out.manifest()["failures"] = fails;
  return out.finish(r.failures.empty() ? kExitOk : kExitPointFailures);
}

/// De-embedded element against its model: z scores per point and the counts
/// within 2 sigma. Points whose phase sits below the noise floor score their
/// amplitude only.
struct ElementComparison {
  int points = 0, amp_within = 0, phase_within = 0, joint_within = 0;
  int deep = 0, deep_amp_within = 0, deep_phase_within = 0;
  std::string csv;

  double fraction(int n) const { return points ? static_cast<double>(n) / points : 0.0; }
  json to_json() const {
    return {{"within_2sigma_amp", amp_within},
            {"within_2sigma_phase", phase_within},
            {"within_2sigma_both", joint_within},
            {"within_2sigma_amp_fraction", fraction(amp_within)},
            {"within_2sigma_phase_fraction", fraction(phase_within)},
            {"within_2sigma_both_fraction", fraction(joint_within)},
            {"points_25db_below_passband", deep},
            {"points_25db_below_passband_amp_within_2sigma", deep_amp_within},
            {"points_25db_below_passband_phase_within_2sigma", deep_phase_within}};
  }
};

inline ElementComparison compare_element(const TransferFunction& element, const TransferFunction& with,
                                         const TransferFunction& model) {
  ElementComparison c;
  c.csv = "freq_mhz,amp,phase_rad,model_amp,model_phase_rad,z_amp,z_phase,below_floor\n";
  const auto& pts = element.samples().points;
  const auto& wpts = with.samples().points;
  double peak = 0.0;
  for (const auto& p : pts) peak = std::max(peak, model.at(p.freq_mhz).amp);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const Response m = model.at(p.freq_mhz);
    const bool floor = wpts[i].phase_sigma >= kPi;
    const double za = p.amp_sigma > 0 ? (p.amp - m.amp) / p.amp_sigma : 0.0;
    const double zp = floor || p.phase_sigma <= 0 ? 0.0 : wrap_phase(p.phase - m.phase) / p.phase_sigma;
    const bool amp_ok = std::abs(za) <= 2.0, phase_ok = std::abs(zp) <= 2.0;
    ++c.points;
    c.amp_within += amp_ok;
    c.phase_within += phase_ok;
    c.joint_within += amp_ok && phase_ok;
    if (20.0 * std::log10(m.amp / peak) <= -25.0) {
      ++c.deep;
      c.deep_amp_within += amp_ok;
      c.deep_phase_within += phase_ok;
    }
    c.csv += format_number(p.freq_mhz) + "," + format_number(p.amp) + "," + format_number(p.phase) + "," +
             format_number(m.amp) + "," + format_number(m.phase) + "," + format_number(za) + "," +
             format_number(zp) + "," + (floor ? "1" : "0") + "\n";
  }
  return c;
}

/// Baseline sweep and sweep with the element in place, on independent seeds.
/// A point lost in either run drops out of both.
struct DeembedRuns {
  TransferFunction baseline = TransferFunction::sampled({});
  TransferFunction with = TransferFunction::sampled({});
  std::vector<PointFailure> failures;
};

inline DeembedRuns run_deembed_sweeps(const RunConfig& c) {
  if (!c.deembed.element) throw ValidationError("deembed: needs deembed.element");
  SweepSetup setup = c.setup();
  const auto& freqs = c.experiment.frequencies_mhz;
  const auto b = sweep(setup, freqs, c.strategy, c.experiment.shots, derive_seed(c.seed, 1), c.experiment.workers);
  setup.line = cascade(c.line.line, c.deembed.element->line);
  const auto w = sweep(setup, freqs, c.strategy, c.experiment.shots, derive_seed(c.seed, 2), c.experiment.workers);
  DeembedRuns r;
  r.failures = b.failures;
  r.failures.insert(r.failures.end(), w.failures.begin(), w.failures.end());
  std::vector<SamplePoint> bp, wp;
  for (const auto& p : b.estimate.samples().points)
    for (const auto& q : w.estimate.samples().points)
      if (detail::same_frequency(p.freq_mhz, q.freq_mhz)) {
        bp.push_back(p);
        wp.push_back(q);
      }
  r.baseline = TransferFunction::sampled(bp);
  r.with = TransferFunction::sampled(wp);
  return r;
}

/// Element response from a baseline sweep and a sweep with the element in
/// place, compared with the element model when it has one.
inline int cmd_deembed(const RunConfig& c) {
  const auto& de = c.deembed;
  TransferFunction baseline = TransferFunction::sampled({});
  TransferFunction with = TransferFunction::sampled({});
  std::vector<PointFailure> failures;
  const bool from_files = !de.baseline_csv.empty();
  if (!from_files && !de.element)
    throw ValidationError("deembed: needs deembed.element or baseline_csv/element_csv");
  if (from_files) {
    baseline = transfer_from_csv(read_text_file((c.base_dir / de.baseline_csv).string()));
    with = transfer_from_csv(read_text_file((c.base_dir / de.element_csv).string()));
  } else {
    check_band(c);
  }
  try {
    if (from_files) detail::require_common_grid(baseline.samples().points, with.samples().points);
  } catch (const GridError& e) {
    throw ValidationError(std::string("deembed: ") + e.what());
  }

  RunWriter out(c, "deembed");
  if (!from_files) {
    DeembedRuns runs = run_deembed_sweeps(c);
    failures = std::move(runs.failures);
    baseline = runs.baseline;
    with = runs.with;
    out.file("baseline.csv", to_csv(baseline));
    out.file("with_element.csv", to_csv(with));
  }
  const TransferFunction element = de_embed(with, baseline);
  out.file("deembedded.csv", to_csv(element));

  json summary = {{"points", element.samples().points.size()}};
  if (de.element) {
    const ElementComparison cmp = compare_element(element, with, de.element->line);
    out.file("comparison.csv", cmp.csv);
    summary.update(cmp.to_json());
  }
  out.json_file("deembed_summary.json", summary);
  json fails = json::array();
  for (const auto& f : failures) fails.push_back(failure_json(f));
  out.manifest()["failures"] = fails;
  return out.finish(failures.empty() ? kExitOk : kExitPointFailures);
}

/// Extracted against programmed phase at one frequency.
inline int cmd_phase_scan(const RunConfig& c) {
  RunWriter out(c, "phase_scan");
  const auto& e = c.experiment;
  PhaseScan scan;
  try {
    scan = phase_linearity_scan(c.setup(), e.scan_freq_mhz, e.phases_rad, e.shots, c.seed, e.workers);
  } catch (const StageError& err) {
    out.manifest()["failures"] = json::array({failure_json({e.scan_freq_mhz, err.stage(), err.what()})});
    return out.finish(kExitPointFailures);
  }
  std::string csv = "phi_programmed,theta_y_mhz,theta_z_mhz,phiz_est,phase_sigma,residual\n";
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const auto& r = scan.rows[i];
    csv += format_number(r.phi_programmed) + "," + format_number(r.theta_y_mhz) + "," +
           format_number(r.theta_z_mhz) + "," + format_number(r.phiz_est) + "," +
           format_number(r.phase_sigma) + "," + format_number(scan.residuals[i]) + "\n";
  }
  out.file("phase_scan.csv", csv);
  const Response line = c.line.line.at(e.scan_freq_mhz);
  out.json_file("phase_fit.json", {{"freq_mhz", e.scan_freq_mhz},
                                   {"slope", scan.slope},
                                   {"slope_sigma", scan.slope_sigma},
                                   {"intercept_rad", scan.intercept},
                                   {"max_residual_rad", scan.max_residual},
                                   {"line_phase_rad", line.phase_defined ? line.phase : 0.0}});
  return out.finish(kExitOk);
}

}  // namespace qvna
