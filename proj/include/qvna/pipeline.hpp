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

// Frequency-point measurement and sweep orchestration: the virtual
// experiment driven end to end from a ground-truth line to an estimated
// transfer function.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qvna/dynamics.hpp"
#include "qvna/error.hpp"
#include "qvna/estimator.hpp"
#include "qvna/line_models.hpp"
#include "qvna/tomography.hpp"

namespace qvna {

/// How each point of a programmed z drive is probed.
struct DriveTemplate {
  double omega0_mhz = kDefaultQubitFrequencyMhz;
  double a_prog_mhz = 0.25;
  // When > 0, each point programs the amplitude that gives this slow rate
  // omega_R (A = rate * Omega_R / A_x) instead of a_prog_mhz.
  double dressed_rate_mhz = 0.0;
  double phi_prog = kPi / 2;
  // Frequencies up to this Rabi rate are probed resonantly.
  double resonant_ax_cap_mhz = 50.0;
  // Off-resonant points use ax = min(off_resonant_ax_mhz, fraction * f).
  double off_resonant_ax_mhz = 50.0;
  double off_resonant_ax_fraction = 0.6;
  int detuning_sign = +1;
  double x_ramp_us = 0.0;
  std::size_t rabi_budget = 1024;
  std::size_t dressed_budget = 64;
  // Fixed dressed-scan span in slow periods; 0 lets the budget set it.
  double dressed_periods = 0.0;
  bool fit_v0 = false;
  bool correct_longitudinal_phase = true;
  // Include the (independently calibrated) T1/T2 relaxation in both fits.
  bool model_relaxation = true;
  AmplitudeNorm amplitude_norm = AmplitudeNorm::Transverse;

  void validate() const {
    if (!(omega0_mhz > 0.0)) throw ValidationError("drive.omega0_mhz must be > 0");
    if (!(a_prog_mhz > 0.0)) throw ValidationError("drive.a_prog_mhz must be > 0");
    if (!(dressed_rate_mhz >= 0.0)) throw ValidationError("drive.dressed_rate_mhz must be >= 0");
    if (!std::isfinite(phi_prog)) throw ValidationError("drive.phi_prog must be finite");
    if (!(resonant_ax_cap_mhz > 0.0)) throw ValidationError("drive.resonant_ax_cap_mhz must be > 0");
    if (!(off_resonant_ax_mhz > 0.0)) throw ValidationError("drive.off_resonant_ax_mhz must be > 0");
    if (!(off_resonant_ax_fraction > 0.0 && off_resonant_ax_fraction < 1.0))
      throw ValidationError("drive.off_resonant_ax_fraction must lie in (0, 1)");
    if (detuning_sign != 1 && detuning_sign != -1)
      throw ValidationError("drive.detuning_sign must be +1 or -1");
    if (!(x_ramp_us >= 0.0)) throw ValidationError("drive.x_ramp_us must be >= 0");
    if (rabi_budget < kMinGridBudget || dressed_budget < kMinGridBudget)
      throw ValidationError("grid budgets must be >= " + std::to_string(kMinGridBudget));
    if (!(dressed_periods == 0.0 || dressed_periods >= kMinSlowPeriods))
      throw ValidationError("drive.dressed_periods must be 0 or >= 2");
  }
};

/// Ground truth and experimental conditions shared by every point.
struct SweepSetup {
  TransferFunction line = unity_line();
  DriveTemplate drive;
  ImperfectionConfig imperfections;
  DecoherenceParams decoherence;
  double min_freq_mhz = 8.0;
  double max_freq_mhz = 400.0;
};

enum class StrategySchedule { Auto, Resonant, OffResonant };

inline Strategy resolve_strategy(StrategySchedule s, const DriveTemplate& t, double f) {
  switch (s) {
    case StrategySchedule::Resonant: return Strategy::Resonant;
    case StrategySchedule::OffResonant: return Strategy::OffResonant;
    case StrategySchedule::Auto: break;
  }
  return f <= t.resonant_ax_cap_mhz ? Strategy::Resonant : Strategy::OffResonant;
}

/// Programmed z amplitude for a point driven by `xd`.
inline double programmed_amplitude(const DriveTemplate& t, const DriveConfig& xd) {
  if (t.dressed_rate_mhz <= 0.0) return t.a_prog_mhz;
  return t.dressed_rate_mhz * rabi_frequency(xd.ax, xd.detuning()) / xd.ax;
}

/// The x drive (z off) that puts the dressed splitting at `target`.
inline DriveConfig x_drive_for(const DriveTemplate& t, double target, Strategy s) {
  if (!(target > 0.0)) throw DomainError("target Rabi frequency must be > 0");
  DriveConfig d;
  d.omega0 = t.omega0_mhz;
  d.omegax = t.omega0_mhz;
  d.x_ramp_us = t.x_ramp_us;
  if (s == Strategy::Resonant) {
    d.ax = target;
  } else {
    d.ax = std::min(t.off_resonant_ax_mhz, t.off_resonant_ax_fraction * target);
    d.omegax = t.omega0_mhz - t.detuning_sign * std::sqrt(target * target - d.ax * d.ax);
  }
  return d;
}

namespace detail {

inline std::uint64_t frequency_label(double f, Strategy s, int detuning_sign) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  return splitmix64(bits ^ (s == Strategy::Resonant ? 0x52ULL : 0x4fULL) ^
                    (detuning_sign > 0 ? 0 : 0x100ULL));
}

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

/// Records of one point, kept for reporting.
struct PointRecords {
  TomographyRecord rabi;
  TomographyRecord dressed;
  TomographyRecord second;
  RotationFit rabi_fit;
  std::optional<RotationFit> dressed_fit;
};

/// Runs the full protocol at one frequency: Rabi scan and fit, dressed scan
/// at omega_z = |Theta|, second-frame post-processing, fit and extraction.
/// The z drive reaching the qubit is the programmed one filtered by the line.
inline TransferPoint measure_point(const SweepSetup& setup, double target, Strategy strategy,
                                   std::uint64_t shots, std::uint64_t seed,
                                   PointRecords* keep = nullptr) {
  const DriveTemplate& t = setup.drive;
  const DriveConfig xd = detail::in_stage("plan", [&] { return x_drive_for(t, target, strategy); });
  const double rabi_plan = rabi_frequency(xd.ax, xd.detuning());
  const double a_prog = programmed_amplitude(t, xd);
  const double dressed_plan = dressed_drive_rate(a_prog, xd.ax, rabi_plan);

  DriveConfig planned = xd;
  planned.z_enabled = true;
  planned.az = a_prog;
  planned.omegaz = rabi_plan;
  const RwaReport rwa = rwa_validity(planned);
  if (rwa.level == RwaLevel::Fail) {
    std::string msg = "refused: rotating-wave approximation fails";
    for (const auto& n : rwa.notes) msg += "; " + n;
    throw StageError("rwa", msg);
  }

  // Records land in `keep` as they are made, so a failing stage leaves the
  // earlier ones behind.
  PointRecords local;
  PointRecords& rec = keep ? *keep : local;
  rec = PointRecords{};
  rec.rabi = detail::in_stage("rabi_scan", [&] {
    return run_rabi_scan(xd, setup.decoherence, choose_rabi_grid(rabi_plan, t.rabi_budget), shots,
                         setup.imperfections, derive_seed(seed, 1));
  });
  const Vec3 hint(xd.ax, 0.0, xd.detuning());
  const RelaxationModel relax = t.model_relaxation && setup.decoherence.enabled()
                                    ? RelaxationModel::first_frame(setup.decoherence)
                                    : RelaxationModel{};
  rec.rabi_fit = detail::in_stage(
      "rabi_fit", [&] { return fit_rotation(rec.rabi, t.fit_v0, hint, kGroundState, relax); });
  const double omegaz = rec.rabi_fit.rabi_mhz();

  const LineDrive at_qubit =
      detail::in_stage("line", [&] { return apply_line(setup.line, omegaz, a_prog, t.phi_prog); });
  DriveConfig zd = xd;
  zd.z_enabled = true;
  zd.omegaz = omegaz;
  zd.az = at_qubit.az_eff;
  zd.phiz = at_qubit.phiz_eff;
  const SamplingGrid grid = detail::in_stage("grid", [&] {
    return choose_sampling_grid(omegaz, dressed_plan, t.dressed_budget, t.dressed_periods);
  });
  rec.dressed = detail::in_stage("dressed_scan", [&] {
    return run_dressed_scan(zd, setup.decoherence, grid.durations, shots, setup.imperfections,
                            derive_seed(seed, 2));
  });

  const Vec3 big = rec.rabi_fit.theta_mhz();
  const double g = big.norm() / std::hypot(big.x(), big.y());
  TransferPoint pt;
  try {
    const Vec3 seed_axis(0.0, -std::sin(t.phi_prog), std::cos(t.phi_prog));
    // Second-frame fit and extraction as a function of the Rabi vector. Its
    // direction sets the frame axes; the frame turns at the known omega_z.
    // Point estimate from a second-frame fit, after the constant longitudinal
    // phase shift is removed.
    auto finish = [&](const RotationFit& rabi_fit, const RotationFit& fit) {
      TransferPoint p = extract_point(rabi_fit, fit, t.amplitude_norm);
      if (t.correct_longitudinal_phase && !p.below_noise_floor)
        p.phiz_est = remove_longitudinal_phase_shift(p.phiz_est, p.az_est, rabi_fit.theta_mhz(), omegaz);
      return p;
    };
    auto analyse = [&](const RotationFit& rabi_fit, std::optional<Vec3> hint) {
      // The second-frame state starts where the diagonalizing rotation puts
      // the ground state.
      const Vec3 big_k = rabi_fit.theta_mhz();
      const BlochVector v0 = DiagonalizingRotation::from(big_k).apply(kGroundState);
      const RelaxationModel relax2 =
          relax.active() ? relax.second_frame(big_k) : RelaxationModel{};
      auto once = [&](const FrameModulation& mod, std::optional<Vec3> h) {
        const TomographyRecord second = postprocess_to_second_frame(rec.dressed, rabi_fit, omegaz, mod);
        RotationFit fit = fit_rotation(second, t.fit_v0, h, t.fit_v0 ? kGroundState : v0, relax2);
        return std::pair{extract_point(rabi_fit, fit, t.amplitude_norm), fit};
      };
      auto result = once({}, hint);
      if (t.correct_longitudinal_phase && !result.first.below_noise_floor) {
        // Refine in the frame that follows the longitudinal modulation, using
        // the first-pass estimates, then remove its constant phase shift.
        for (int pass = 0; pass < 2; ++pass) {
          const double phi = remove_longitudinal_phase_shift(result.first.phiz_est, result.first.az_est, big_k, omegaz);
          const FrameModulation mod = longitudinal_modulation(result.first.az_est, big_k, omegaz, phi);
          if (std::abs(mod.depth_rad) < 1e-12) break;
          result = once(mod, result.second.theta_mhz());
        }
        result.first = finish(rabi_fit, result.second);
      }
      return result;
    };
    auto [p0, fit0] = analyse(rec.rabi_fit, seed_axis * dressed_plan);
    rec.dressed_fit = fit0;
    pt = p0;
    if (!pt.below_noise_floor) {
      // Both fits' covariances go through the analysis by central
      // differences, one standard deviation each way along their principal
      // axes. The dressed part skips the refit, the Rabi part redoes it.
      Eigen::Matrix2d prop = Eigen::Matrix2d::Zero();
      auto along_axes = [&](const Eigen::Matrix3d& cov, const Vec3& centre, auto&& eval) {
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        for (int k = 0; k < 3; ++k) {
          const double sd = std::sqrt(std::max(eig.eigenvalues()(k), 0.0));
          if (!(sd > 1e-9 * centre.norm())) continue;
          const Vec3 step = sd * Vec3(eig.eigenvectors().col(k));
          const TransferPoint hi = eval(Vec3(centre + step)), lo = eval(Vec3(centre - step));
          const Eigen::Vector2d d(0.5 * (hi.az_est - lo.az_est), 0.5 * wrap_phase(hi.phiz_est - lo.phiz_est));
          prop += d * d.transpose();
        }
      };
      along_axes(fit0.theta_covariance_mhz(), fit0.theta_mhz(), [&](const Vec3& th) {
        RotationFit moved = fit0;
        moved.theta = RotationRate::from(th * kTwoPi);
        return finish(rec.rabi_fit, moved);
      });
      along_axes(rec.rabi_fit.theta_covariance_mhz(), big, [&](const Vec3& th) {
        RotationFit moved = rec.rabi_fit;
        moved.theta = RotationRate::from(th * kTwoPi);
        return analyse(moved, fit0.theta_mhz()).first;
      });
      pt.amp_sigma = std::sqrt(std::max(prop(0, 0), 0.0));
      pt.phase_sigma = std::sqrt(std::max(prop(1, 1), 0.0));
    }
  } catch (const RankError&) {
    // Nothing moved above the shot noise: report a bound, not an error.
    const double span = grid.durations.back() - grid.durations.front();
    const double resolvable = 2.0 * std::sqrt(rank_threshold(shots) + 1e-12) / (kTwoPi * span);
    pt = TransferPoint{};
    pt.amp_sigma = resolvable * g;
    pt.phase_sigma = kPi;
    pt.below_noise_floor = true;
    pt.az_upper_bound = resolvable * g;
    pt.diagnostics.theta_rabi_mhz = big;
    pt.diagnostics.rabi_residual_rms = rec.rabi_fit.residual_rms;
    pt.diagnostics.warnings.push_back("dressed record shows no rotation above the noise level");
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("dressed_fit", e.what());
  }
  rec.second = postprocess_to_second_frame(rec.dressed, rec.rabi_fit);

  pt.freq_mhz = target;
  pt.a_prog_mhz = a_prog;
  pt.strategy = strategy;
  pt.diagnostics.probe_freq_mhz = omegaz;
  pt.diagnostics.transversal_ratio = rwa.transversal_ratio;
  pt.diagnostics.dressed_ratio = rec.dressed_fit ? rec.dressed_fit->rabi_mhz() / omegaz : rwa.dressed_ratio;
  for (const auto& n : rwa.notes) pt.diagnostics.warnings.push_back("rwa: " + n);
  if (pt.diagnostics.dressed_ratio >= kRwaDressedPass)
    pt.diagnostics.warnings.push_back("rwa: measured omega_R/Omega_R = " +
                                      format_number(pt.diagnostics.dressed_ratio));
  if (rec.dressed_fit &&
      rec.dressed_fit->residual_rms > std::max(3.0 * detail::noise_rms(rec.dressed), kMisfitFloor))
    pt.diagnostics.warnings.push_back("dressed fit residual " + format_number(rec.dressed_fit->residual_rms) +
                                      " exceeds the shot noise");
  if (grid.omega_rabi_aliased)
    pt.diagnostics.warnings.push_back("dressed grid samples the fast rotation below Nyquist");
  for (const auto& w : rec.dressed.metadata["warnings"]) pt.diagnostics.warnings.push_back(w.get<std::string>());
  return pt;
}

/// Seed of one point, independent of the other points in the list.
inline std::uint64_t point_seed(std::uint64_t seed, double f, Strategy s, int detuning_sign = 1) {
  return derive_seed(seed, detail::frequency_label(f, s, detuning_sign));
}

struct PointFailure {
  double freq_mhz = 0.0;
  std::string stage;
  std::string message;
};

struct SweepResult {
  TransferFunction estimate = TransferFunction::sampled({});
  std::vector<TransferPoint> points;
  std::vector<PointFailure> failures;
};

/// Sample of the estimated transfer function from a point: amplitude and
/// phase relative to the programmed drive.
inline SamplePoint to_sample(const TransferPoint& p, const DriveTemplate& t) {
  return {p.freq_mhz, p.az_est / p.a_prog_mhz,
          p.below_noise_floor ? 0.0 : wrap_phase(p.phiz_est - t.phi_prog), p.amp_sigma / p.a_prog_mhz,
          p.phase_sigma};
}

inline void validate_frequencies(const std::vector<double>& freqs, double lo, double hi) {
  if (freqs.empty()) throw SweepError("sweep: empty frequency list");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i] >= lo && freqs[i] <= hi))
      throw SweepError("sweep: frequency " + format_number(freqs[i]) + " MHz outside [" +
                       format_number(lo) + ", " + format_number(hi) + "]");
    if (i > 0 && !(freqs[i] > freqs[i - 1]))
      throw SweepError("sweep: frequencies must be strictly ascending");
  }
}

/// Measures every frequency on up to `workers` threads. Failed points are
/// recorded and skipped; the result is identical for any worker count.
inline SweepResult sweep(const SweepSetup& setup, const std::vector<double>& freqs,
                         StrategySchedule schedule, std::uint64_t shots, std::uint64_t seed,
                         unsigned workers = 1) {
  setup.drive.validate();
  setup.imperfections.validate();
  setup.decoherence.validate();
  validate_frequencies(freqs, setup.min_freq_mhz, setup.max_freq_mhz);

  struct Slot {
    std::optional<TransferPoint> point;
    PointFailure failure;
  };
  std::vector<Slot> slots(freqs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < freqs.size(); i = next++) {
      const double f = freqs[i];
      const Strategy s = resolve_strategy(schedule, setup.drive, f);
      try {
        slots[i].point = measure_point(setup, f, s, shots, point_seed(seed, f, s, setup.drive.detuning_sign));
      } catch (const StageError& e) {
        slots[i].failure = {f, e.stage(), e.what()};
      } catch (const std::exception& e) {
        slots[i].failure = {f, "unknown", e.what()};
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(freqs.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  SweepResult out;
  std::vector<SamplePoint> samples;
  for (auto& s : slots) {
    if (s.point) {
      samples.push_back(to_sample(*s.point, setup.drive));
      out.points.push_back(std::move(*s.point));
    } else {
      out.failures.push_back(std::move(s.failure));
    }
  }
  if (out.points.empty()) {
    std::string msg = "sweep: every point failed";
    for (const auto& f : out.failures)
      msg += "; " + format_number(f.freq_mhz) + " MHz [" + f.stage + "] " + f.message;
    throw SweepError(msg);
  }
  out.estimate = TransferFunction::sampled(std::move(samples));
  return out;
}

struct PhaseScanRow {
  double phi_programmed = 0.0;
  double theta_y_mhz = 0.0;
  double theta_z_mhz = 0.0;
  double phiz_est = 0.0;
  double phase_sigma = 0.0;
};

struct PhaseScan {
  std::vector<PhaseScanRow> rows;
  double slope = 0.0;
  double slope_sigma = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  std::vector<double> residuals;
};

/// Linear fit of estimated against programmed phase. Estimates are unwrapped
/// onto the branch nearest to programmed + circular-mean offset.
inline void fit_phase_line(PhaseScan& scan) {
  double c = 0.0, s = 0.0;
  for (const auto& r : scan.rows) {
    const double d = wrap_phase(r.phiz_est - r.phi_programmed);
    c += std::cos(d);
    s += std::sin(d);
  }
  const double offset = std::atan2(s, c);
  const std::size_t n = scan.rows.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = scan.rows[i].phi_programmed;
    y[i] = x[i] + offset + wrap_phase(scan.rows[i].phiz_est - x[i] - offset);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double dn = static_cast<double>(n);
  const double det = dn * sxx - sx * sx;
  scan.slope = (dn * sxy - sx * sy) / det;
  scan.intercept = wrap_phase((sy - scan.slope * sx) / dn);
  const double icpt = (sy - scan.slope * sx) / dn;
  scan.residuals.resize(n);
  double ss = 0.0;
  scan.max_residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scan.residuals[i] = y[i] - (scan.slope * x[i] + icpt);
    ss += scan.residuals[i] * scan.residuals[i];
    scan.max_residual = std::max(scan.max_residual, std::abs(scan.residuals[i]));
  }
  scan.slope_sigma = n > 2 ? std::sqrt(ss / (dn - 2.0) * dn / det) : 0.0;
}

/// Extracts the phase at one frequency for each programmed phase.
inline PhaseScan phase_linearity_scan(const SweepSetup& setup, double freq,
                                      const std::vector<double>& phases, std::uint64_t shots,
                                      std::uint64_t seed, unsigned workers = 1) {
  if (phases.size() < 5) throw ValidationError("phase scan needs at least 5 phases");
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  if (*hi - *lo < kPi * (1.0 - 1e-12)) throw ValidationError("phase scan must span at least pi");
  setup.drive.validate();
  const Strategy s = resolve_strategy(StrategySchedule::Auto, setup.drive, freq);
  PhaseScan scan;
  scan.rows.resize(phases.size());
  std::vector<std::string> errors(phases.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < phases.size(); i = next++) {
      SweepSetup local = setup;
      local.drive.phi_prog = phases[i];
      try {
        const auto pt = measure_point(local, freq, s, shots, derive_seed(seed, 1000 + i));
        scan.rows[i] = {phases[i], pt.diagnostics.theta_dressed_mhz.y(),
                        pt.diagnostics.theta_dressed_mhz.z(), pt.phiz_est, pt.phase_sigma};
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(phases.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < phases.size(); ++i)
    if (!errors[i].empty())
      throw StageError("phase_scan", "phase " + format_number(phases[i]) + ": " + errors[i]);
  fit_phase_line(scan);
  return scan;
}

/// Returns the sign s for which atan2(s theta_y, theta_z) reproduces a known
/// programmed phase in a noise-free simulation.
inline double calibrate_phase_sign(double freq = 19.8, double phase = 1.0) {
  SweepSetup setup;
  setup.drive.phi_prog = phase;
  const auto pt = measure_point(setup, freq, Strategy::Resonant, kExactShots, 0);
  const Vec3 th = pt.diagnostics.theta_dressed_mhz;
  const double plus = std::abs(wrap_phase(std::atan2(th.y(), th.z()) - phase));
  const double minus = std::abs(wrap_phase(std::atan2(-th.y(), th.z()) - phase));
  return plus < minus ? 1.0 : -1.0;
}

inline nlohmann::json to_json(const TransferPoint& p) {
  const auto& d = p.diagnostics;
  return {{"freq_mhz", p.freq_mhz},
          {"a_prog_mhz", p.a_prog_mhz},
          {"az_est_mhz", p.az_est},
          {"phiz_est_rad", p.phiz_est},
          {"amp_sigma_mhz", p.amp_sigma},
          {"phase_sigma_rad", p.phase_sigma},
          {"strategy", strategy_name(p.strategy)},
          {"below_noise_floor", p.below_noise_floor},
          {"az_upper_bound_mhz", p.az_upper_bound},
          {"probe_freq_mhz", d.probe_freq_mhz},
          {"theta_rabi_mhz", {d.theta_rabi_mhz.x(), d.theta_rabi_mhz.y(), d.theta_rabi_mhz.z()}},
          {"theta_dressed_mhz",
           {d.theta_dressed_mhz.x(), d.theta_dressed_mhz.y(), d.theta_dressed_mhz.z()}},
          {"rabi_residual_rms", d.rabi_residual_rms},
          {"dressed_residual_rms", d.dressed_residual_rms},
          {"transversal_ratio", d.transversal_ratio},
          {"dressed_ratio", d.dressed_ratio},
          {"warnings", d.warnings}};
}

}  // namespace qvna
