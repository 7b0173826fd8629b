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

// Run configuration: one JSON document (comments allowed), validated field
// by field. Unknown keys are rejected with their path. The effective
// configuration, defaults included, is echoed back as JSON.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qvna/error.hpp"
#include "qvna/line_models.hpp"
#include "qvna/pipeline.hpp"
#include "qvna/text.hpp"

namespace qvna {

using nlohmann::json;

namespace detail {

/// Reads the members of one JSON object and remembers which were used.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + ": expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k, double def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_number()) throw ValidationError(key(k) + ": expected a number");
    return v.get<double>();
  }
  // null means "not set" (infinite time constant).
  double time_or_infinite(const std::string& k) {
    if (!has(k) || raw(k).is_null()) return std::numeric_limits<double>::infinity();
    return number(k, 0.0);
  }
  std::uint64_t count(const std::string& k, std::uint64_t def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_number_unsigned()) throw ValidationError(key(k) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  int integer(const std::string& k, int def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_number_integer()) throw ValidationError(key(k) + ": expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_boolean()) throw ValidationError(key(k) + ": expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& k, const std::string& def) {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_string()) throw ValidationError(key(k) + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_array()) throw ValidationError(key(k) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ValidationError(key(k) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ValidationError(key(it.key()) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Wraps a module precondition failure with the config path it came from.
template <class F>
auto checked(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace detail

/// A line model built from its config node, with the node as echoed.
struct LineSpec {
  TransferFunction line = unity_line();
  json echo = {{"model", "unity"}};
};

/// Builds a line from {"model": ..., parameters}. Paths of sampled lines are
/// relative to `base_dir`.
inline LineSpec parse_line(const json& j, const std::string& path,
                           const std::filesystem::path& base_dir) {
  detail::Fields f(j, path);
  LineSpec out;
  const std::string model = f.text("model", "unity");
  if (model == "unity") {
    out = {unity_line(), {{"model", "unity"}}};
  } else if (model == "delay") {
    const double tau = f.number("tau_ns", 0.0);
    out = {detail::checked(path, [&] { return delay_line(tau); }), {{"model", "delay"}, {"tau_ns", tau}}};
  } else if (model == "gain") {
    const double amp = f.number("amp", 1.0), ph = f.number("phase_rad", 0.0);
    if (!(amp >= 0.0) || !std::isfinite(amp) || !std::isfinite(ph))
      throw ValidationError(path + ": gain needs finite amp >= 0 and phase_rad");
    out = {TransferFunction::parametric("gain", {{"amp", amp}, {"phase_rad", ph}},
                                        [amp, ph](double) { return Response{amp, ph, amp > 0.0}; }),
           {{"model", "gain"}, {"amp", amp}, {"phase_rad", ph}}};
  } else if (model == "lowpass") {
    const double fc = f.number("fc_mhz", 100.0);
    out = {detail::checked(path, [&] { return first_order_lowpass(fc); }),
           {{"model", "lowpass"}, {"fc_mhz", fc}}};
  } else if (model == "stub") {
    StubParams p;
    p.electrical_delay_ns = f.number("electrical_delay_ns", p.electrical_delay_ns);
    p.impedance_ratio = f.number("impedance_ratio", p.impedance_ratio);
    if (f.has("notch_depth_db")) {
      if (f.has("loss_db_per_ns"))
        throw ValidationError(path + ": give either loss_db_per_ns or notch_depth_db");
      const double depth = f.number("notch_depth_db", 0.0);
      if (!(depth > 0.0)) throw ValidationError(f.key("notch_depth_db") + ": must be > 0");
      p.loss_db_per_ns = detail::checked(path, [&] {
        return stub_loss_for_notch_depth(depth, p.impedance_ratio, p.electrical_delay_ns);
      });
    } else {
      p.loss_db_per_ns = f.number("loss_db_per_ns", p.loss_db_per_ns);
    }
    out = {detail::checked(path, [&] { return shorted_stub(p); }),
           {{"model", "stub"},
            {"electrical_delay_ns", p.electrical_delay_ns},
            {"impedance_ratio", p.impedance_ratio},
            {"loss_db_per_ns", p.loss_db_per_ns}}};
  } else if (model == "cascade") {
    if (!f.has("stages") || !f.raw("stages").is_array() || f.raw("stages").empty())
      throw ValidationError(f.key("stages") + ": expected a non-empty array of lines");
    const json& st = f.raw("stages");
    json echo_stages = json::array();
    std::optional<TransferFunction> acc;
    for (std::size_t i = 0; i < st.size(); ++i) {
      LineSpec s = parse_line(st[i], f.key("stages") + "[" + std::to_string(i) + "]", base_dir);
      acc = acc ? detail::checked(path, [&] { return cascade(*acc, s.line); }) : s.line;
      echo_stages.push_back(s.echo);
    }
    out = {*acc, {{"model", "cascade"}, {"stages", echo_stages}}};
  } else if (model == "sampled") {
    const std::string file = f.text("path", "");
    if (file.empty()) throw ValidationError(f.key("path") + ": required for a sampled line");
    const auto full = base_dir / file;
    out = {detail::checked(path, [&] { return transfer_from_csv(read_text_file(full.string())); }),
           {{"model", "sampled"}, {"path", file}}};
  } else {
    throw ValidationError(f.key("model") + ": unknown line model '" + model +
                          "' (unity, gain, delay, lowpass, stub, cascade, sampled)");
  }
  f.finish();
  return out;
}

struct ExperimentConfig {
  std::vector<double> frequencies_mhz;
  std::vector<double> phases_rad;
  std::uint64_t shots = 4096;
  double trace_freq_mhz = 19.8;
  double scan_freq_mhz = 30.0;
  unsigned workers = 1;
};

struct DeembedConfig {
  std::optional<LineSpec> element;
  std::string baseline_csv;
  std::string element_csv;
};

struct RunConfig {
  DecoherenceParams decoherence;
  LineSpec line;
  DriveTemplate drive;
  StrategySchedule strategy = StrategySchedule::Auto;
  ImperfectionConfig imperfections;
  ExperimentConfig experiment;
  DeembedConfig deembed;
  double min_freq_mhz = 8.0;
  double max_freq_mhz = 400.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::filesystem::path base_dir = ".";

  SweepSetup setup() const {
    SweepSetup s;
    s.line = line.line;
    s.drive = drive;
    s.imperfections = imperfections;
    s.decoherence = decoherence;
    s.min_freq_mhz = min_freq_mhz;
    s.max_freq_mhz = max_freq_mhz;
    return s;
  }
};

/// Log-spaced grid, endpoints included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw ValidationError("log_grid: need n >= 2 and 0 < lo < hi");
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  f.front() = lo;
  f.back() = hi;
  return f;
}

/// Phases placed symmetrically on (-pi, pi), away from 0 and pi.
inline std::vector<double> default_phases(std::size_t n = 8) {
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k)
    p[k] = -kPi + (static_cast<double>(k) + 0.5) * kTwoPi / static_cast<double>(n);
  return p;
}

inline const char* schedule_name(StrategySchedule s) {
  switch (s) {
    case StrategySchedule::Resonant: return "resonant";
    case StrategySchedule::OffResonant: return "off_resonant";
    default: return "auto";
  }
}

inline json time_json(double t) { return std::isfinite(t) ? json(t) : json(nullptr); }

/// Effective configuration with every default expanded.
inline json echo(const RunConfig& c) {
  const auto& d = c.drive;
  const auto& e = c.experiment;
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["qubit"] = {{"omega0_mhz", d.omega0_mhz},
                {"t1_us", time_json(c.decoherence.t1_us)},
                {"t2_us", time_json(c.decoherence.t2_us)}};
  j["line"] = c.line.echo;
  j["drive"] = {{"a_prog_mhz", d.a_prog_mhz},
                {"phi_prog_rad", d.phi_prog},
                {"strategy", schedule_name(c.strategy)},
                {"resonant_ax_cap_mhz", d.resonant_ax_cap_mhz},
                {"off_resonant_ax_mhz", d.off_resonant_ax_mhz},
                {"off_resonant_ax_fraction", d.off_resonant_ax_fraction},
                {"detuning_sign", d.detuning_sign},
                {"dressed_rate_mhz", d.dressed_rate_mhz},
                {"x_ramp_us", d.x_ramp_us},
                {"fit_v0", d.fit_v0},
                {"correct_longitudinal_phase", d.correct_longitudinal_phase},
                {"model_relaxation", d.model_relaxation},
                {"amplitude_norm", d.amplitude_norm == AmplitudeNorm::Full ? "full" : "transverse"}};
  j["experiment"] = {{"frequencies_mhz", e.frequencies_mhz},
                     {"phases_rad", e.phases_rad},
                     {"shots", e.shots},
                     {"rabi_budget", d.rabi_budget},
                     {"dressed_budget", d.dressed_budget},
                     {"dressed_periods", d.dressed_periods},
                     {"trace_freq_mhz", e.trace_freq_mhz},
                     {"scan_freq_mhz", e.scan_freq_mhz},
                     {"min_freq_mhz", c.min_freq_mhz},
                     {"max_freq_mhz", c.max_freq_mhz},
                     {"workers", e.workers}};
  const auto& im = c.imperfections;
  j["imperfections"] = {{"spontaneous_detuning_mhz", im.spontaneous_detuning_mhz},
                        {"detuning_threshold_mhz", im.detuning_threshold_mhz},
                        {"tomography_phase_error_rad", im.tomography_phase_error},
                        {"readout_fidelity", im.readout_fidelity}};
  json de = json::object();
  if (c.deembed.element) de["element"] = c.deembed.element->echo;
  if (!c.deembed.baseline_csv.empty()) de["baseline_csv"] = c.deembed.baseline_csv;
  if (!c.deembed.element_csv.empty()) de["element_csv"] = c.deembed.element_csv;
  j["deembed"] = de;
  return j;
}

/// Parses and validates a configuration document.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  RunConfig c;
  c.base_dir = base_dir;
  detail::Fields top(root, "");
  c.seed = top.count("seed", c.seed);
  c.output_dir = top.text("output_dir", c.output_dir);

  if (top.has("qubit")) {
    detail::Fields q(top.raw("qubit"), "qubit");
    c.drive.omega0_mhz = q.number("omega0_mhz", c.drive.omega0_mhz);
    c.decoherence.t1_us = q.time_or_infinite("t1_us");
    c.decoherence.t2_us = q.time_or_infinite("t2_us");
    q.finish();
    detail::checked("qubit", [&] { c.decoherence.validate(); return 0; });
  }
  if (top.has("line")) c.line = parse_line(top.raw("line"), "line", base_dir);

  auto& d = c.drive;
  if (top.has("drive")) {
    detail::Fields f(top.raw("drive"), "drive");
    d.a_prog_mhz = f.number("a_prog_mhz", d.a_prog_mhz);
    d.phi_prog = f.number("phi_prog_rad", d.phi_prog);
    const std::string s = f.text("strategy", "auto");
    if (s == "auto") c.strategy = StrategySchedule::Auto;
    else if (s == "resonant") c.strategy = StrategySchedule::Resonant;
    else if (s == "off_resonant") c.strategy = StrategySchedule::OffResonant;
    else throw ValidationError("drive.strategy: expected auto, resonant or off_resonant");
    d.resonant_ax_cap_mhz = f.number("resonant_ax_cap_mhz", d.resonant_ax_cap_mhz);
    d.off_resonant_ax_mhz = f.number("off_resonant_ax_mhz", d.off_resonant_ax_mhz);
    d.off_resonant_ax_fraction = f.number("off_resonant_ax_fraction", d.off_resonant_ax_fraction);
    d.detuning_sign = f.integer("detuning_sign", d.detuning_sign);
    d.dressed_rate_mhz = f.number("dressed_rate_mhz", d.dressed_rate_mhz);
    d.x_ramp_us = f.number("x_ramp_us", d.x_ramp_us);
    d.fit_v0 = f.boolean("fit_v0", d.fit_v0);
    d.correct_longitudinal_phase = f.boolean("correct_longitudinal_phase", d.correct_longitudinal_phase);
    d.model_relaxation = f.boolean("model_relaxation", d.model_relaxation);
    const std::string n = f.text("amplitude_norm", "transverse");
    if (n == "transverse") d.amplitude_norm = AmplitudeNorm::Transverse;
    else if (n == "full") d.amplitude_norm = AmplitudeNorm::Full;
    else throw ValidationError("drive.amplitude_norm: expected transverse or full");
    f.finish();
  }

  auto& e = c.experiment;
  e.frequencies_mhz = log_grid(8.0, 400.0, 12);
  e.phases_rad = default_phases();
  if (top.has("experiment")) {
    detail::Fields f(top.raw("experiment"), "experiment");
    if (f.has("frequencies_mhz")) {
      const json& fr = f.raw("frequencies_mhz");
      if (fr.is_object()) {
        detail::Fields g(fr, "experiment.frequencies_mhz");
        const double lo = g.number("start", 8.0), hi = g.number("stop", 400.0);
        const std::uint64_t n = g.count("count", 12);
        const std::string spacing = g.text("spacing", "log");
        g.finish();
        if (n < 2 || !(lo > 0.0) || !(hi > lo))
          throw ValidationError("experiment.frequencies_mhz: need count >= 2 and 0 < start < stop");
        if (spacing == "log") {
          e.frequencies_mhz = log_grid(lo, hi, n);
        } else if (spacing == "linear") {
          e.frequencies_mhz.resize(n);
          for (std::uint64_t i = 0; i < n; ++i)
            e.frequencies_mhz[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        } else {
          throw ValidationError("experiment.frequencies_mhz.spacing: expected log or linear");
        }
      } else {
        e.frequencies_mhz = f.numbers("frequencies_mhz");
      }
    }
    if (f.has("phases_rad")) e.phases_rad = f.numbers("phases_rad");
    e.shots = f.count("shots", e.shots);
    d.rabi_budget = f.count("rabi_budget", d.rabi_budget);
    d.dressed_budget = f.count("dressed_budget", d.dressed_budget);
    d.dressed_periods = f.number("dressed_periods", d.dressed_periods);
    e.trace_freq_mhz = f.number("trace_freq_mhz", e.trace_freq_mhz);
    e.scan_freq_mhz = f.number("scan_freq_mhz", e.scan_freq_mhz);
    c.min_freq_mhz = f.number("min_freq_mhz", c.min_freq_mhz);
    c.max_freq_mhz = f.number("max_freq_mhz", c.max_freq_mhz);
    const std::uint64_t w = f.count("workers", e.workers);
    if (w < 1 || w > 1024) throw ValidationError("experiment.workers: must lie in [1, 1024]");
    e.workers = static_cast<unsigned>(w);
    f.finish();
  }

  if (top.has("imperfections")) {
    detail::Fields f(top.raw("imperfections"), "imperfections");
    auto& im = c.imperfections;
    im.spontaneous_detuning_mhz = f.number("spontaneous_detuning_mhz", im.spontaneous_detuning_mhz);
    im.detuning_threshold_mhz = f.number("detuning_threshold_mhz", im.detuning_threshold_mhz);
    im.tomography_phase_error = f.number("tomography_phase_error_rad", im.tomography_phase_error);
    im.readout_fidelity = f.number("readout_fidelity", im.readout_fidelity);
    f.finish();
    detail::checked("imperfections", [&] { im.validate(); return 0; });
  }

  if (top.has("deembed")) {
    detail::Fields f(top.raw("deembed"), "deembed");
    if (f.has("element")) c.deembed.element = parse_line(f.raw("element"), "deembed.element", base_dir);
    c.deembed.baseline_csv = f.text("baseline_csv", "");
    c.deembed.element_csv = f.text("element_csv", "");
    if (c.deembed.baseline_csv.empty() != c.deembed.element_csv.empty())
      throw ValidationError("deembed: baseline_csv and element_csv go together");
    f.finish();
  }
  top.finish();

  detail::checked("drive", [&] { d.validate(); return 0; });
  if (!(c.min_freq_mhz > 0.0) || !(c.max_freq_mhz > c.min_freq_mhz))
    throw ValidationError("experiment: need 0 < min_freq_mhz < max_freq_mhz");
  if (!(e.trace_freq_mhz > 0.0)) throw ValidationError("experiment.trace_freq_mhz: must be > 0");
  if (!(e.scan_freq_mhz > 0.0)) throw ValidationError("experiment.scan_freq_mhz: must be > 0");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_config(read_text_file(path), p.has_parent_path() ? p.parent_path() : ".");
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(echo(c).dump())); }

}  // namespace qvna
