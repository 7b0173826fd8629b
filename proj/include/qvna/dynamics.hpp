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

// Driven two-level dynamics in Bloch-vector form, dv/dt = h(t) x v plus
// Bloch-equation relaxation. All public frequencies are cyclic MHz, times us.

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qvna/error.hpp"
#include "qvna/so3.hpp"
#include "qvna/units.hpp"

namespace qvna {

inline constexpr double kDefaultQubitFrequencyMhz = 6000.0;
inline constexpr double kTwoLevelLimitMhz = 300.0;

struct DriveConfig {
  double omega0 = kDefaultQubitFrequencyMhz;
  double ax = 0.0;
  double phix = 0.0;
  double omegax = kDefaultQubitFrequencyMhz;
  double az = 0.0;
  double phiz = 0.0;
  double omegaz = 0.0;
  bool z_enabled = false;
  // Cosine ramp on each side of the constant x-drive section.
  double x_ramp_us = 0.0;

  double detuning() const { return omega0 - omegax; }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(omega0 > 0.0) || !finite(omega0))
      throw DomainError("drive: omega0 must be positive and finite");
    if (!(ax >= 0.0) || !finite(ax)) throw DomainError("drive: ax must be >= 0");
    if (!(az >= 0.0) || !finite(az)) throw DomainError("drive: az must be >= 0");
    if (!finite(omegax) || !finite(omegaz))
      throw DomainError("drive: frequencies must be finite");
    for (double p : {phix, phiz}) {
      if (!(p > -kPi - 1e-12 && p <= kPi + 1e-12))
        throw DomainError("drive: phases must lie in (-pi, pi]");
    }
    if (!(x_ramp_us >= 0.0) || !finite(x_ramp_us))
      throw DomainError("drive: x_ramp_us must be >= 0");
  }
};

struct DecoherenceParams {
  double t1_us = std::numeric_limits<double>::infinity();
  double t2_us = std::numeric_limits<double>::infinity();

  bool enabled() const { return std::isfinite(t1_us) || std::isfinite(t2_us); }
  double gamma1() const { return std::isfinite(t1_us) ? 1.0 / t1_us : 0.0; }
  double gamma2() const { return std::isfinite(t2_us) ? 1.0 / t2_us : 0.0; }

  void validate() const {
    if (!(t1_us > 0.0) || !(t2_us > 0.0))
      throw DomainError("decoherence: T1 and T2 must be positive");
    if (std::isfinite(t1_us) && std::isfinite(t2_us) &&
        t2_us > 2.0 * t1_us * (1.0 + 1e-12))
      throw DomainError("decoherence: T2 must not exceed 2*T1");
  }
};

enum class Frame { Lab, First, FirstDiagonalized, Second };

inline const char* frame_name(Frame f) {
  switch (f) {
    case Frame::Lab: return "lab";
    case Frame::First: return "first";
    case Frame::FirstDiagonalized: return "first_diagonalized";
    case Frame::Second: return "second";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<BlochVector> states;
  Frame frame = Frame::Lab;
};

// Closed-form frequency relations.

inline double rabi_frequency(double ax, double delta_omega) {
  if (!(ax >= 0.0)) throw DomainError("rabi_frequency: ax must be >= 0");
  return std::hypot(ax, delta_omega);
}

inline double dressed_drive_rate(double az, double ax, double omega_r) {
  if (!(omega_r > 0.0))
    throw DomainError("dressed_drive_rate: Rabi frequency must be > 0");
  return az * ax / omega_r;
}

inline double mixing_angle(double ax, double delta_omega) {
  if (ax == 0.0 && delta_omega == 0.0)
    throw DomainError("mixing_angle: undefined for ax = 0 and zero detuning");
  return -std::atan2(delta_omega, ax);
}

namespace detail {

using State = std::array<double, 3>;

inline void check_grid(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]))
      throw UsageError("time grid contains a non-finite value");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw UsageError("time grid must be strictly increasing");
  }
}

// Integrates dv/dt = field(t) x v - relaxation from t = 0 (or the first grid
// time) and records the state at every grid time.
template <typename Field>
Trajectory integrate(Field&& field, const DecoherenceParams& dec,
                     const BlochVector& v0, const std::vector<double>& times,
                     double t_start, double max_dt, Frame frame) {
  namespace ode = boost::numeric::odeint;
  check_grid(times);
  if (!times.empty() && times.front() < t_start)
    throw UsageError("time grid starts before the initial state");
  if (std::isfinite(dec.t2_us) && !times.empty() &&
      times.back() > 50.0 * dec.t2_us)
    throw UsageError("time grid extends beyond 50*T2");

  const double g1 = dec.gamma1();
  const double g2 = dec.gamma2();
  auto rhs = [&](const State& v, State& dv, double t) {
    const Vec3 h = field(t);
    dv[0] = h[1] * v[2] - h[2] * v[1] - g2 * v[0];
    dv[1] = h[2] * v[0] - h[0] * v[2] - g2 * v[1];
    dv[2] = h[0] * v[1] - h[1] * v[0] - g1 * (v[2] + 1.0);
  };

  Trajectory out;
  out.frame = frame;
  out.times = times;
  out.states.reserve(times.size());
  if (times.empty()) return out;

  State x{v0.x, v0.y, v0.z};
  auto stepper = ode::make_controlled(1e-12, 1e-10, max_dt,
                                      ode::runge_kutta_fehlberg78<State>());
  double t = t_start;
  double dt = max_dt;
  for (double target : times) {
    while (t < target) {
      const double remaining = target - t;
      const bool last = dt >= remaining;
      double h = last ? remaining : dt;
      ode::controlled_step_result res;
      try {
        res = stepper.try_step(rhs, x, t, h);
      } catch (const std::exception& e) {
        throw IntegrationError("integration failed near t = " + std::to_string(t) +
                               " us: " + e.what());
      }
      if (res == ode::success) {
        if (last) t = target;
        if (!last || h > dt) dt = h;
      } else {
        dt = h;
        if (dt < 1e-14 * (1.0 + std::abs(t)))
          throw IntegrationError("step size underflow at t = " + std::to_string(t) + " us");
      }
    }
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2]))
      throw IntegrationError("non-finite state at t = " + std::to_string(t) + " us");
    out.states.push_back({x[0], x[1], x[2]});
  }
  return out;
}

inline double envelope(double t, double ramp, double plateau) {
  if (ramp <= 0.0) return 1.0;
  if (t < ramp) return 0.5 * (1.0 - std::cos(kPi * t / ramp));
  if (t <= ramp + plateau) return 1.0;
  const double td = t - ramp - plateau;
  if (td >= ramp) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * td / ramp));
}

}  // namespace detail

/// Integrates the lab-frame Hamiltonian without any rotating-wave
/// approximation. The step is capped at 1/(20 omega0) to resolve the carrier.
inline Trajectory evolve_lab(const DriveConfig& drive,
                             const DecoherenceParams& dec, const BlochVector& v0,
                             const std::vector<double>& times) {
  drive.validate();
  dec.validate();
  const double w0 = to_angular(drive.omega0);
  const double ax2 = 2.0 * to_angular(drive.ax);
  const double az2 = drive.z_enabled ? 2.0 * to_angular(drive.az) : 0.0;
  const double wx = to_angular(drive.omegax);
  const double wz = to_angular(drive.omegaz);
  auto field = [=](double t) -> Vec3 {
    return {ax2 * std::cos(wx * t + drive.phix), 0.0,
            w0 + az2 * std::cos(wz * t + drive.phiz)};
  };
  return detail::integrate(field, dec, v0, times, 0.0, 1.0 / (20.0 * drive.omega0),
                           Frame::Lab);
}

/// Pointwise exp(-(omegax t + phix) L_z): lab frame to the frame rotating with
/// the transversal drive.
inline Trajectory to_first_frame(const Trajectory& lab, double omegax, double phix) {
  if (lab.frame != Frame::Lab)
    throw UsageError("to_first_frame expects a lab-frame trajectory");
  Trajectory out{lab.times, {}, Frame::First};
  out.states.reserve(lab.states.size());
  for (std::size_t i = 0; i < lab.times.size(); ++i) {
    const double angle = -(to_angular(omegax) * lab.times[i] + phix);
    out.states.push_back(rotate_about_axis(Axis::Z, angle, lab.states[i]));
  }
  return out;
}

/// Inverse of to_first_frame.
inline Trajectory to_lab_frame(const Trajectory& first, double omegax, double phix) {
  if (first.frame != Frame::First)
    throw UsageError("to_lab_frame expects a first-frame trajectory");
  Trajectory out{first.times, {}, Frame::Lab};
  out.states.reserve(first.states.size());
  for (std::size_t i = 0; i < first.times.size(); ++i) {
    const double angle = to_angular(omegax) * first.times[i] + phix;
    out.states.push_back(rotate_about_axis(Axis::Z, angle, first.states[i]));
  }
  return out;
}

/// First rotating frame, transversal RWA applied:
///   h = 2 pi (ax, 0, delta + 2 az cos(2 pi omegaz t + phiz)).
/// Without a z drive, ramps or relaxation the closed-form rotation is used.
/// `plateau_us` is the length of the constant section when ramps are on.
inline Trajectory evolve_first_frame(const DriveConfig& drive, const BlochVector& v0,
                                     const std::vector<double>& times,
                                     const DecoherenceParams& dec = {},
                                     double plateau_us =
                                         std::numeric_limits<double>::infinity()) {
  drive.validate();
  dec.validate();
  const double ax = to_angular(drive.ax);
  const double delta = to_angular(drive.detuning());
  const bool z_on = drive.z_enabled && drive.az > 0.0;
  const bool ramped = drive.x_ramp_us > 0.0;

  if (!z_on && !ramped && !dec.enabled()) {
    detail::check_grid(times);
    const RotationRate rate{ax, 0.0, delta};
    Trajectory out{times, {}, Frame::First};
    out.states.reserve(times.size());
    for (double t : times) out.states.push_back(rotate(rate, t, v0));
    return out;
  }

  const double az2 = z_on ? 2.0 * to_angular(drive.az) : 0.0;
  const double wz = to_angular(drive.omegaz);
  const double ramp = drive.x_ramp_us;
  auto field = [=](double t) -> Vec3 {
    const double env = detail::envelope(t, ramp, plateau_us);
    return {ax * env, 0.0, delta + az2 * std::cos(wz * t + drive.phiz)};
  };
  const double fastest = std::hypot(drive.ax, drive.detuning()) +
                         (z_on ? drive.omegaz + 2.0 * drive.az : 0.0) + 1e-3;
  double max_dt = 0.1 / fastest;
  if (ramped) max_dt = std::min(max_dt, ramp / 20.0);
  return detail::integrate(field, dec, v0, times, 0.0, max_dt, Frame::First);
}

/// Closed-form dressed-qubit rotation in the second rotating frame: uniform
/// rotation about (0, -sin phiz, cos phiz) at 2 pi omega_r_dressed.
inline Trajectory evolve_second_frame(double omega_r_rabi, double omega_r_dressed,
                                      double phiz, const BlochVector& v0,
                                      const std::vector<double>& times) {
  (void)omega_r_rabi;
  if (!(omega_r_dressed >= 0.0))
    throw DomainError("evolve_second_frame: dressed rate must be >= 0");
  detail::check_grid(times);
  const double w = to_angular(omega_r_dressed);
  const RotationRate rate{0.0, -w * std::sin(phiz), w * std::cos(phiz)};
  Trajectory out{times, {}, Frame::Second};
  out.states.reserve(times.size());
  for (double t : times) out.states.push_back(rotate(rate, t, v0));
  return out;
}

/// Rotation applied to first-frame data so that a Rabi vector `theta_mhz`
/// becomes (|theta|, 0, 0): undo the azimuth about z, then the tilt about y.
struct DiagonalizingRotation {
  double azimuth = 0.0;  // atan2(theta_y, theta_x)
  double tilt = 0.0;     // -atan(theta_z / sqrt(theta_x^2 + theta_y^2))

  static DiagonalizingRotation from(const Vec3& theta) {
    const double rho = std::hypot(theta.x(), theta.y());
    if (!(theta.norm() > 0.0))
      throw DomainError("diagonalizing rotation undefined for a zero Rabi vector");
    return {std::atan2(theta.y(), theta.x()), -std::atan2(theta.z(), rho)};
  }

  BlochVector apply(const BlochVector& v) const {
    return rotate_about_axis(Axis::Y, -tilt, rotate_about_axis(Axis::Z, -azimuth, v));
  }
};

/// Moves a first-frame trajectory into the second rotating frame defined by a
/// Rabi vector (cyclic MHz) and the frame rate omega_frame (cyclic MHz).
inline Trajectory to_second_frame(const Trajectory& first, const Vec3& theta_mhz,
                                  double omega_frame) {
  if (first.frame != Frame::First)
    throw UsageError("to_second_frame expects a first-frame trajectory");
  const auto diag = DiagonalizingRotation::from(theta_mhz);
  Trajectory out{first.times, {}, Frame::Second};
  out.states.reserve(first.states.size());
  for (std::size_t i = 0; i < first.times.size(); ++i) {
    const double angle = -to_angular(omega_frame) * first.times[i];
    out.states.push_back(rotate_about_axis(Axis::X, angle, diag.apply(first.states[i])));
  }
  return out;
}

enum class RwaLevel { Pass, Warn, Fail };

inline const char* rwa_level_name(RwaLevel l) {
  switch (l) {
    case RwaLevel::Pass: return "pass";
    case RwaLevel::Warn: return "warn";
    case RwaLevel::Fail: return "fail";
  }
  return "?";
}

struct RwaReport {
  double transversal_ratio = 0.0;  // ax / omega0
  double dressed_ratio = 0.0;      // omega_R / Omega_R
  double rabi_mhz = 0.0;
  RwaLevel level = RwaLevel::Pass;
  std::vector<std::string> notes;
};

inline constexpr double kRwaTransversalPass = 0.01;
inline constexpr double kRwaTransversalWarn = 0.05;
inline constexpr double kRwaDressedPass = 0.1;
inline constexpr double kRwaDressedWarn = 0.25;
// Fraction of the two-level limit above which a warning is attached.
inline constexpr double kTwoLevelWarnFraction = 0.8;

inline RwaReport rwa_validity(const DriveConfig& drive) {
  RwaReport r;
  r.transversal_ratio = drive.ax / drive.omega0;
  r.rabi_mhz = std::hypot(drive.ax, drive.detuning());
  if (drive.z_enabled && r.rabi_mhz > 0.0) {
    r.dressed_ratio = dressed_drive_rate(drive.az, drive.ax, r.rabi_mhz) / r.rabi_mhz;
  }
  auto grade = [](double v, double pass, double warn) {
    return v < pass ? RwaLevel::Pass : (v < warn ? RwaLevel::Warn : RwaLevel::Fail);
  };
  const RwaLevel lt = grade(r.transversal_ratio, kRwaTransversalPass, kRwaTransversalWarn);
  const RwaLevel ld = grade(r.dressed_ratio, kRwaDressedPass, kRwaDressedWarn);
  r.level = std::max(lt, ld);
  if (lt != RwaLevel::Pass)
    r.notes.push_back("ax/omega0 = " + std::to_string(r.transversal_ratio) +
                      " (transversal rotating-wave approximation)");
  if (ld != RwaLevel::Pass)
    r.notes.push_back("omega_R/Omega_R = " + std::to_string(r.dressed_ratio) +
                      " (dressed-frame rotating-wave approximation)");
  if (r.rabi_mhz >= kTwoLevelWarnFraction * kTwoLevelLimitMhz) {
    r.level = std::max(r.level, RwaLevel::Warn);
    r.notes.push_back("Rabi frequency " + std::to_string(r.rabi_mhz) +
                      " MHz approaches the ~300 MHz two-level-model limit of a transmon");
  }
  return r;
}

}  // namespace qvna
