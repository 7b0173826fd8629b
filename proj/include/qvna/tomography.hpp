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

// Virtual tomography experiment: propagates the driven qubit over a grid of
// pulse durations and records shot-averaged Pauli estimates in the first
// rotating frame.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qvna/dynamics.hpp"
#include "qvna/error.hpp"
#include "qvna/so3.hpp"
#include "qvna/text.hpp"

namespace qvna {

/// shots == kExactShots means noise-free expectation values.
inline constexpr std::uint64_t kExactShots = 0;
inline constexpr double kRepetitionRateKhz = 40.0;

struct ImperfectionConfig {
  // Added to the detuning when ax exceeds detuning_threshold_mhz.
  double spontaneous_detuning_mhz = 0.0;
  double detuning_threshold_mhz = 0.0;
  // Tomography frame leads the drive frame by this angle about z.
  double tomography_phase_error = 0.0;
  double readout_fidelity = 1.0;

  void validate() const {
    if (!(readout_fidelity > 0.5 && readout_fidelity <= 1.0))
      throw DomainError("imperfections: readout_fidelity must lie in (0.5, 1]");
    if (!std::isfinite(spontaneous_detuning_mhz) || !std::isfinite(tomography_phase_error) ||
        !std::isfinite(detuning_threshold_mhz))
      throw DomainError("imperfections: values must be finite");
  }
};

struct TomographyRecord {
  std::vector<double> durations;
  std::vector<BlochVector> estimates;
  std::uint64_t shots = kExactShots;
  Frame frame = Frame::First;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return durations.size(); }
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (metadata.contains("warnings"))
      for (const auto& s : metadata["warnings"]) w.push_back(s.get<std::string>());
    return w;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Stream key for one (duration index, axis) cell; independent of the order
/// in which cells are generated.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, int axis) {
  return detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ index) +
                            static_cast<std::uint64_t>(axis));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
  return detail::splitmix64(seed ^ detail::splitmix64(label + 0x51ed27a3ULL));
}

/// One projective-readout average: k ~ Binomial(shots, (1 + f<s>)/2) with
/// f = 2 fidelity - 1, returned as 2k/shots - 1.
inline double sample_expectation(const BlochVector& v, Axis axis, std::uint64_t shots,
                                 std::uint64_t rng_seed, double readout_fidelity = 1.0) {
  if (v.norm() > 1.0 + kNormSlack)
    throw DomainError("sample_expectation: unphysical Bloch vector, |v| = " +
                      format_number(v.norm()));
  const double mean = std::clamp(v.component(axis) * (2.0 * readout_fidelity - 1.0), -1.0, 1.0);
  if (shots == kExactShots) return mean;
  const double p = 0.5 * (1.0 + mean);
  std::mt19937_64 rng(rng_seed);
  std::binomial_distribution<std::uint64_t> dist(shots, p);
  return 2.0 * static_cast<double>(dist(rng)) / static_cast<double>(shots) - 1.0;
}

struct SamplingGrid {
  std::vector<double> durations;
  bool omega_rabi_aliased = false;
};

inline constexpr std::size_t kMinGridBudget = 16;
inline constexpr double kPointsPerSlowPeriod = 8.0;
inline constexpr double kMinSlowPeriods = 2.0;

/// Uniform grid from t = 0 at 8 points per slow (omega_R) period; the budget
/// sets the span. With `periods` > 0 the span is fixed to that many slow
/// periods instead and the budget only sets the density. Sub-Nyquist sampling
/// of the fast Rabi rotation is allowed and flagged.
inline SamplingGrid choose_sampling_grid(double omega_rabi_expected,
                                         double omega_dressed_expected, std::size_t budget,
                                         double periods = 0.0) {
  if (budget < kMinGridBudget)
    throw SizingError("sampling grid budget must be >= " + std::to_string(kMinGridBudget));
  if (!(omega_dressed_expected > 0.0))
    throw SizingError("sampling grid needs a positive expected dressed rate");
  const double n = static_cast<double>(budget - 1);
  const double step = periods > 0.0 ? periods / (omega_dressed_expected * n)
                                    : 1.0 / (kPointsPerSlowPeriod * omega_dressed_expected);
  const double span = step * n;
  if (span * omega_dressed_expected < kMinSlowPeriods * (1.0 - 1e-12))
    throw SizingError("sampling grid of " + std::to_string(budget) +
                      " points cannot cover two slow periods at 8 points per period");
  if (step * omega_dressed_expected > (1.0 + 1e-12) / kPointsPerSlowPeriod)
    throw SizingError("sampling grid of " + std::to_string(budget) + " points over " +
                      format_number(periods) + " slow periods is coarser than 8 points per period");
  SamplingGrid g;
  g.durations.resize(budget);
  for (std::size_t i = 0; i < budget; ++i) g.durations[i] = step * static_cast<double>(i);
  g.omega_rabi_aliased = omega_rabi_expected > 0.0 && step > 0.5 / omega_rabi_expected;
  return g;
}

/// Grid resolving the fast Rabi rotation itself, for the drive-only scan.
inline std::vector<double> choose_rabi_grid(double omega_rabi_expected, std::size_t budget,
                                            double points_per_period = 6.0) {
  if (budget < kMinGridBudget)
    throw SizingError("Rabi grid budget must be >= " + std::to_string(kMinGridBudget));
  if (!(omega_rabi_expected > 0.0) || !(points_per_period > 2.0))
    throw SizingError("Rabi grid needs a positive rate and > 2 points per period");
  const double step = 1.0 / (points_per_period * omega_rabi_expected);
  std::vector<double> d(budget);
  for (std::size_t i = 0; i < budget; ++i) d[i] = step * static_cast<double>(i);
  return d;
}

inline nlohmann::json drive_to_json(const DriveConfig& d) {
  return {{"omega0_mhz", d.omega0}, {"ax_mhz", d.ax},          {"phix_rad", d.phix},
          {"omegax_mhz", d.omegax}, {"az_mhz", d.az},          {"phiz_rad", d.phiz},
          {"omegaz_mhz", d.omegaz}, {"z_enabled", d.z_enabled}, {"x_ramp_us", d.x_ramp_us}};
}

inline nlohmann::json imperfections_to_json(const ImperfectionConfig& c) {
  return {{"spontaneous_detuning_mhz", c.spontaneous_detuning_mhz},
          {"detuning_threshold_mhz", c.detuning_threshold_mhz},
          {"tomography_phase_error_rad", c.tomography_phase_error},
          {"readout_fidelity", c.readout_fidelity}};
}

namespace detail {

inline DriveConfig with_imperfections(DriveConfig d, const ImperfectionConfig& imp) {
  // A spontaneous shift of the qubit frequency shows up as extra detuning.
  if (d.ax > imp.detuning_threshold_mhz) d.omega0 += imp.spontaneous_detuning_mhz;
  return d;
}

inline std::vector<BlochVector> propagate_durations(const DriveConfig& drive,
                                                    const DecoherenceParams& dec,
                                                    const std::vector<double>& durations) {
  if (drive.x_ramp_us <= 0.0) return evolve_first_frame(drive, kGroundState, durations, dec).states;
  // Ramped pulses: every duration is its own pulse of length 2 ramp + plateau.
  std::vector<BlochVector> out;
  out.reserve(durations.size());
  for (double d : durations) {
    const double total = 2.0 * drive.x_ramp_us + d;
    out.push_back(evolve_first_frame(drive, kGroundState, {total}, dec, d).states.back());
  }
  return out;
}

inline TomographyRecord measure(const DriveConfig& true_drive, const DecoherenceParams& dec,
                                const std::vector<double>& durations, std::uint64_t shots,
                                const ImperfectionConfig& imp, std::uint64_t seed) {
  imp.validate();
  check_grid(durations);
  if (!durations.empty() && durations.front() < 0.0)
    throw UsageError("durations must be >= 0");
  std::vector<BlochVector> states;
  try {
    states = propagate_durations(true_drive, dec, durations);
  } catch (const Error& e) {
    throw StageError("propagation", e.what());
  }
  TomographyRecord rec;
  rec.durations = durations;
  rec.shots = shots;
  rec.frame = Frame::First;
  rec.estimates.reserve(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const BlochVector seen = rotate_about_axis(Axis::Z, -imp.tomography_phase_error, states[i]);
    BlochVector est;
    est.x = sample_expectation(seen, Axis::X, shots, stream_seed(seed, i, 0), imp.readout_fidelity);
    est.y = sample_expectation(seen, Axis::Y, shots, stream_seed(seed, i, 1), imp.readout_fidelity);
    est.z = sample_expectation(seen, Axis::Z, shots, stream_seed(seed, i, 2), imp.readout_fidelity);
    rec.estimates.push_back(est);
  }
  rec.metadata["frame"] = frame_name(rec.frame);
  rec.metadata["seed"] = seed;
  rec.metadata["shots"] = shots;
  rec.metadata["repetition_rate_khz"] = kRepetitionRateKhz;
  rec.metadata["imperfections"] = imperfections_to_json(imp);
  rec.metadata["decoherence"] = {{"t1_us", std::isfinite(dec.t1_us) ? nlohmann::json(dec.t1_us) : nlohmann::json(nullptr)},
                                 {"t2_us", std::isfinite(dec.t2_us) ? nlohmann::json(dec.t2_us) : nlohmann::json(nullptr)}};
  rec.metadata["warnings"] = nlohmann::json::array();
  return rec;
}

}  // namespace detail

/// Drive-only Rabi scan (z drive off).
inline TomographyRecord run_rabi_scan(const DriveConfig& drive, const DecoherenceParams& dec,
                                      const std::vector<double>& durations, std::uint64_t shots,
                                      const ImperfectionConfig& imp, std::uint64_t seed) {
  if (drive.z_enabled) throw UsageError("run_rabi_scan requires the z drive to be off");
  auto rec = detail::measure(detail::with_imperfections(drive, imp), dec, durations, shots, imp, seed);
  rec.metadata["scan"] = "rabi";
  rec.metadata["drive"] = drive_to_json(drive);
  return rec;
}

/// Scan with the z drive on at drive.omegaz. Warns when the span covers less
/// than 1.5 periods of the expected dressed rotation.
inline TomographyRecord run_dressed_scan(const DriveConfig& drive, const DecoherenceParams& dec,
                                         const std::vector<double>& durations,
                                         std::uint64_t shots, const ImperfectionConfig& imp,
                                         std::uint64_t seed) {
  if (!drive.z_enabled) throw UsageError("run_dressed_scan requires the z drive to be on");
  if (!(drive.omegaz > 0.0)) throw DomainError("run_dressed_scan: omegaz must be > 0");
  const DriveConfig actual = detail::with_imperfections(drive, imp);
  auto rec = detail::measure(actual, dec, durations, shots, imp, seed);
  rec.metadata["scan"] = "dressed";
  rec.metadata["drive"] = drive_to_json(drive);
  const double rabi = rabi_frequency(actual.ax, actual.detuning());
  if (drive.az > 0.0 && rabi > 0.0 && !durations.empty()) {
    const double dressed = dressed_drive_rate(drive.az, actual.ax, rabi);
    const double span = durations.back() - durations.front();
    if (span * dressed < 1.5)
      rec.metadata["warnings"].push_back(
          "coverage: duration span covers " + format_number(span * dressed) +
          " slow periods (< 1.5); the rotation fit will be ill-conditioned");
  }
  return rec;
}

// Record CSV: duration_us,axis,estimate,shots (three rows per duration).

inline constexpr const char* kRecordCsvHeader = "duration_us,axis,estimate,shots";

inline std::string to_csv(const TomographyRecord& rec) {
  std::string s = std::string(kRecordCsvHeader) + "\n";
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double v[3] = {rec.estimates[i].x, rec.estimates[i].y, rec.estimates[i].z};
    for (int a = 0; a < 3; ++a)
      s += format_number(rec.durations[i]) + "," + kAxes[a] + "," + format_number(v[a]) + "," +
           std::to_string(rec.shots) + "\n";
  }
  return s;
}

inline nlohmann::json sidecar(const TomographyRecord& rec) {
  nlohmann::json j = rec.metadata;
  j["frame"] = frame_name(rec.frame);
  j["shots"] = rec.shots;
  return j;
}

inline TomographyRecord record_from_csv(const std::string& csv, const nlohmann::json& meta) {
  TomographyRecord rec;
  rec.metadata = meta;
  const std::string frame = meta.value("frame", "first");
  rec.frame = frame == "second" ? Frame::Second
              : frame == "lab"  ? Frame::Lab
              : frame == "first_diagonalized" ? Frame::FirstDiagonalized
                                              : Frame::First;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordCsvHeader) throw ValidationError("record CSV: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4 || f[1].size() != 1) throw ValidationError("record CSV: malformed line '" + line + "'");
    const double t = parse_number(f[0]);
    const int axis = f[1][0] - 'x';
    if (axis < 0 || axis > 2) throw ValidationError("record CSV: bad axis '" + std::string(f[1]) + "'");
    if (axis == 0) {
      rec.durations.push_back(t);
      rec.estimates.push_back({});
    } else if (rec.durations.empty() || rec.durations.back() != t) {
      throw ValidationError("record CSV: axes of one duration must be consecutive");
    }
    double& slot = axis == 0 ? rec.estimates.back().x
                   : axis == 1 ? rec.estimates.back().y
                               : rec.estimates.back().z;
    slot = parse_number(f[2]);
    rec.shots = parse_count(f[3]);
  }
  return rec;
}

}  // namespace qvna
