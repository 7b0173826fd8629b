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

// Rotation-vector fits of tomography records, the second-frame
// post-processing, and extraction of the z-drive amplitude and phase.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qvna/dynamics.hpp"
#include "qvna/error.hpp"
#include "qvna/least_squares.hpp"
#include "qvna/so3.hpp"
#include "qvna/tomography.hpp"
#include "qvna/units.hpp"

namespace qvna {

/// Result of fitting exp(t theta . L) v0 to a record. The covariance is in
/// the fit parameterization: theta in cyclic MHz first, then v0 if fitted.
struct RotationFit {
  RotationRate theta;  // rad/us
  BlochVector v0 = kGroundState;
  bool v0_fitted = false;
  double residual_rms = 0.0;
  Eigen::MatrixXd covariance;
  bool converged = false;
  int iterations = 0;

  Vec3 theta_mhz() const { return theta.vec() / kTwoPi; }
  Eigen::Matrix3d theta_covariance_mhz() const { return covariance.topLeftCorner(3, 3); }
  double rabi_mhz() const { return theta_mhz().norm(); }
};

class FitNonConvergence : public FitError {
 public:
  FitNonConvergence(const std::string& what, RotationFit best)
      : FitError(what), best_(std::move(best)) {}
  const RotationFit& best() const { return best_; }

 private:
  RotationFit best_;
};

/// Known relaxation in the frame of a record, dv/dt = theta x v - D v + c
/// (rates in 1/us). Inactive by default, which leaves a pure rotation.
struct RelaxationModel {
  Eigen::Matrix3d damping = Eigen::Matrix3d::Zero();
  Vec3 pump = Vec3::Zero();

  bool active() const { return damping.norm() > 0.0 || pump.norm() > 0.0; }

  /// Bloch relaxation of the first rotating frame: T2 on x and y, T1 on z
  /// toward the ground state.
  static RelaxationModel first_frame(const DecoherenceParams& dec) {
    RelaxationModel m;
    m.damping.diagonal() << dec.gamma2(), dec.gamma2(), dec.gamma1();
    m.pump = Vec3(0.0, 0.0, -dec.gamma1());
    return m;
  }

  /// The same relaxation seen in the second frame of `theta_rabi_mhz`,
  /// averaged over the fast rotation about the new x axis.
  RelaxationModel second_frame(const Vec3& theta_rabi_mhz) const {
    const auto diag = DiagonalizingRotation::from(theta_rabi_mhz);
    Eigen::Matrix3d r;
    for (int k = 0; k < 3; ++k) r.col(k) = diag.apply(BlochVector::from(Vec3::Unit(k))).vec();
    const Eigen::Matrix3d d = r * damping * r.transpose();
    const Vec3 c = r * pump;
    RelaxationModel out;
    const double transverse = 0.5 * (d(1, 1) + d(2, 2));
    out.damping.diagonal() << d(0, 0), transverse, transverse;
    out.pump = Vec3(c.x(), 0.0, 0.0);
    return out;
  }
};

namespace detail {

inline Vec3 model_point(const Vec3& theta_mhz, const Vec3& v0, double t) {
  return rotation_matrix(RotationRate::from(theta_mhz * kTwoPi), t) * v0;
}

// Affine solution v(t) = exp(M t)(v0 - v_ss) + v_ss with M = [theta]x - D.
struct RelaxedPropagator {
  Eigen::Matrix3d m;
  Vec3 steady;

  RelaxedPropagator(const Vec3& theta_mhz, const RelaxationModel& relax) {
    m = hat(theta_mhz * kTwoPi) - relax.damping;
    steady = relax.pump.norm() > 0.0 ? Vec3(-m.fullPivLu().solve(relax.pump)) : Vec3::Zero();
  }
  Vec3 operator()(const Vec3& v0, double t) const {
    const Eigen::Matrix3d e = (m * t).exp();
    return e * (v0 - steady) + steady;
  }
};

// Frequency of the strongest component summed over the three axes.
inline double periodogram_peak_mhz(const TomographyRecord& rec) {
  const std::size_t n = rec.size();
  const double span = rec.durations.back() - rec.durations.front();
  double min_step = span;
  for (std::size_t i = 1; i < n; ++i)
    min_step = std::min(min_step, rec.durations[i] - rec.durations[i - 1]);
  const double f_max = 0.5 / min_step;
  const double df = 1.0 / (8.0 * span);
  Vec3 mean = Vec3::Zero();
  for (const auto& e : rec.estimates) mean += e.vec();
  mean /= static_cast<double>(n);
  const std::size_t nf = static_cast<std::size_t>(f_max / df);
  std::vector<std::complex<double>> acc(3 * nf, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Phasor recurrence over the frequency bins k * df, k = 1..nf.
    const std::complex<double> w = std::polar(1.0, -kTwoPi * df * rec.durations[i]);
    const Vec3 x = rec.estimates[i].vec() - mean;
    std::complex<double> cur = w;
    for (std::size_t k = 0; k < nf; ++k, cur *= w)
      for (int a = 0; a < 3; ++a) acc[3 * k + a] += x(a) * cur;
  }
  double best_f = 0.0, best_p = -1.0;
  for (std::size_t k = 0; k < nf; ++k) {
    const double power = std::norm(acc[3 * k]) + std::norm(acc[3 * k + 1]) + std::norm(acc[3 * k + 2]);
    if (power > best_p) {
      best_p = power;
      best_f = df * static_cast<double>(k + 1);
    }
  }
  return best_f;
}

struct GeometricSeed {
  Vec3 axis = Vec3::UnitX();
  double rate_mhz = 0.0;
};

// Rotation axis from the summed cross products of successive samples and
// rate from the slope of the unwrapped in-plane angle.
inline std::optional<GeometricSeed> geometric_seed(const TomographyRecord& rec) {
  const std::size_t n = rec.size();
  Vec3 c = Vec3::Zero();
  for (std::size_t i = 0; i + 1 < n; ++i)
    c += rec.estimates[i].vec().cross(rec.estimates[i + 1].vec());
  if (!(c.norm() > 0.0)) return std::nullopt;
  GeometricSeed s;
  s.axis = c.normalized();
  const Vec3 ref_raw = rec.estimates[0].vec() - rec.estimates[0].vec().dot(s.axis) * s.axis;
  Vec3 ref = ref_raw.norm() > 1e-9 ? ref_raw.normalized() : s.axis.unitOrthogonal();
  const Vec3 ref2 = s.axis.cross(ref);
  std::vector<double> ang(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = rec.estimates[i].vec();
    const double a = std::atan2(v.dot(ref2), v.dot(ref));
    ang[i] = i == 0 ? a : prev + wrap_phase(a - prev);
    prev = ang[i];
  }
  double st = 0, sa = 0, stt = 0, sta = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rec.durations[i];
    st += t;
    sa += ang[i];
    stt += t * t;
    sta += t * ang[i];
  }
  const double det = static_cast<double>(n) * stt - st * st;
  if (!(det > 0.0)) return std::nullopt;
  const double slope = (static_cast<double>(n) * sta - st * sa) / det;
  s.rate_mhz = slope / kTwoPi;
  if (s.rate_mhz < 0.0) {
    s.rate_mhz = -s.rate_mhz;
    s.axis = -s.axis;
  }
  return s;
}

inline double total_variance(const TomographyRecord& rec) {
  Vec3 mean = Vec3::Zero();
  for (const auto& e : rec.estimates) mean += e.vec();
  mean /= static_cast<double>(rec.size());
  double v = 0.0;
  for (const auto& e : rec.estimates) v += (e.vec() - mean).squaredNorm();
  return v / static_cast<double>(rec.size());
}

}  // namespace detail

/// Variance (summed over axes) below which a record is treated as carrying
/// no rotation: a multiple of the worst-case shot-noise variance 3/shots.
inline double rank_threshold(std::uint64_t shots) {
  return shots == kExactShots ? 1e-18 : 4.0 * 3.0 / static_cast<double>(shots);
}

/// Fits exp(t theta . L) v0 to a record. v0 is held at `fixed_v0` unless
/// `fit_v0`; an active `relax` adds known relaxation to the model. Seeds come from the periodogram peak, the geometry of the
/// orbit and the optional hint (cyclic MHz); the best converged fit wins.
// Residual rms below which a noise-free fit is not retried.
inline constexpr double kMisfitFloor = 1e-2;

namespace detail {

/// Expected rms of the shot noise per component, from the estimates
/// themselves; zero for exact records.
inline double noise_rms(const TomographyRecord& rec) {
  if (rec.shots == kExactShots || rec.size() == 0) return 0.0;
  double v = 0.0;
  for (const auto& e : rec.estimates)
    for (double c : {e.x, e.y, e.z}) v += std::max(1.0 - c * c, 0.0);
  return std::sqrt(v / (3.0 * static_cast<double>(rec.size()) * static_cast<double>(rec.shots)));
}

}  // namespace detail

inline RotationFit fit_rotation(const TomographyRecord& rec, bool fit_v0,
                                std::optional<Vec3> seed_hint_mhz = std::nullopt,
                                const BlochVector& fixed_v0 = kGroundState,
                                const RelaxationModel& relax = {}) {
  const std::size_t need = fit_v0 ? 9 : 6;
  if (rec.size() < need)
    throw DomainError("fit_rotation: needs at least " + std::to_string(need) + " durations");
  // Raw records live in the [-1, 1] cube; rotated (second-frame) records in
  // the ball that circumscribes it.
  const bool raw = rec.frame != Frame::Second;
  for (const auto& e : rec.estimates) {
    const bool ok = raw ? std::max({std::abs(e.x), std::abs(e.y), std::abs(e.z)}) <= 1.0 + 1e-12
                        : e.vec().norm() <= std::sqrt(3.0) + 1e-12;
    if (!ok) throw DomainError("fit_rotation: estimates must lie in [-1, 1]");
  }
  if (detail::total_variance(rec) < rank_threshold(rec.shots))
    throw RankError("fit_rotation: record shows no rotation above the noise level");

  const Eigen::Index m = static_cast<Eigen::Index>(3 * rec.size());
  const Eigen::Index np = fit_v0 ? 6 : 3;
  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const Vec3 th = p.head<3>();
    const Vec3 v0 = fit_v0 ? Vec3(p.segment<3>(3)) : fixed_v0.vec();
    if (relax.active()) {
      const detail::RelaxedPropagator prop(th, relax);
      for (std::size_t i = 0; i < rec.size(); ++i)
        r.segment<3>(static_cast<Eigen::Index>(3 * i)) = prop(v0, rec.durations[i]) - rec.estimates[i].vec();
      return;
    }
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const Vec3 model = detail::model_point(th, v0, rec.durations[i]);
      r.segment<3>(static_cast<Eigen::Index>(3 * i)) = model - rec.estimates[i].vec();
    }
  };

  std::vector<Vec3> seeds;
  const auto geo = detail::geometric_seed(rec);
  const double peak = detail::periodogram_peak_mhz(rec);
  if (geo) {
    seeds.push_back(geo->axis * geo->rate_mhz);
    if (peak > 0.0) seeds.push_back(geo->axis * peak);
  } else if (peak > 0.0) {
    seeds.push_back(Vec3::UnitX() * peak);
  }
  if (seed_hint_mhz) seeds.push_back(*seed_hint_mhz);
  if (seeds.empty()) throw RankError("fit_rotation: no usable seed");

  const double typical = std::max({peak, geo ? geo->rate_mhz : 0.0,
                                   seed_hint_mhz ? seed_hint_mhz->norm() : 0.0, 1e-3});
  Eigen::VectorXd scale(np);
  scale.head<3>().setConstant(typical);
  if (fit_v0) scale.tail<3>().setConstant(1.0);

  // v0 seed: the first sample rotated back to t = 0 under the seed rate.
  std::optional<LeastSquaresResult> best;
  auto run = [&](const Vec3& s) {
    Eigen::VectorXd p0(np);
    p0.head<3>() = s;
    if (fit_v0) {
      const Matrix3 back = rotation_matrix(RotationRate::from(s * kTwoPi), -rec.durations.front());
      p0.tail<3>() = back * rec.estimates.front().vec();
    }
    auto res = levenberg_marquardt(residual, p0, m, scale);
    if (!best || (res.converged && !best->converged) ||
        (res.converged == best->converged && res.cost < best->cost))
      best = std::move(res);
  };
  for (const Vec3& s : seeds) run(s);
  // A residual far above the shot noise means a local minimum: retry along
  // each axis at the periodogram rate.
  if (peak > 0.0 && std::sqrt(2.0 * best->cost / static_cast<double>(m)) >
                        std::max(3.0 * detail::noise_rms(rec), kMisfitFloor)) {
    for (int k = 0; k < 3; ++k)
      for (double sgn : {1.0, -1.0}) run(Vec3::Unit(k) * (sgn * peak));
  }

  RotationFit fit;
  fit.theta = RotationRate::from(Vec3(best->params.head<3>()) * kTwoPi);
  fit.v0_fitted = fit_v0;
  fit.v0 = fit_v0 ? BlochVector::from(best->params.tail<3>()) : fixed_v0;
  fit.residual_rms = std::sqrt(2.0 * best->cost / static_cast<double>(m));
  // Shot noise is independent between durations but, after frame rotations,
  // correlated between the three components of one estimate.
  fit.covariance = best->robust_covariance(3);
  fit.converged = best->converged;
  fit.iterations = best->iterations;
  if (!fit.converged)
    throw FitNonConvergence("fit_rotation did not converge (" + best->status + ", " +
                                std::to_string(best->iterations) + " iterations, rms " +
                                format_number(fit.residual_rms) + ")",
                            fit);
  return fit;
}

/// Azimuth of the fitted Rabi vector; the tomography-to-drive phase offset.
inline double drive_phase_offset(const RotationFit& fit) {
  return std::atan2(fit.theta.wy, fit.theta.wx);
}

/// Phase modulation of the frame angle, depth (sin(2 pi f t + phase) - sin(phase)).
struct FrameModulation {
  double depth_rad = 0.0;
  double freq_mhz = 0.0;
  double phase = 0.0;

  double at(double t) const {
    return depth_rad == 0.0 ? 0.0
                            : depth_rad * (std::sin(kTwoPi * freq_mhz * t + phase) - std::sin(phase));
  }
};

/// Off resonance, the part a_par = A_z Theta_z / |Theta| of the z drive that
/// lies along the dressed axis modulates the fast rotation angle. This is that
/// modulation for a drive of amplitude `az` and phase `phiz` at `omegaz`.
inline FrameModulation longitudinal_modulation(double az, const Vec3& theta_rabi_mhz, double omegaz,
                                               double phiz) {
  const double mag = theta_rabi_mhz.norm();
  if (!(mag > 0.0) || !(omegaz > 0.0)) return {};
  return {2.0 * az * theta_rabi_mhz.z() / (mag * omegaz), omegaz, phiz};
}

/// Moves a first-frame record into the second rotating frame: undo the
/// azimuth of Theta about z, undo its tilt about y, then remove the Rabi
/// rotation about x at `frame_rate_mhz` (default |Theta|, the z-drive
/// frequency the protocol sets) plus an optional known modulation.
inline TomographyRecord postprocess_to_second_frame(const TomographyRecord& rec,
                                                    const RotationFit& fit,
                                                    std::optional<double> frame_rate_mhz = std::nullopt,
                                                    const FrameModulation& modulation = {}) {
  if (rec.frame != Frame::First)
    throw UsageError("postprocess_to_second_frame expects a first-frame record");
  if (!fit.converged) throw UsageError("postprocess_to_second_frame needs a converged fit");
  const Vec3 theta = fit.theta_mhz();
  if (!(theta.norm() > 0.0)) throw DomainError("degenerate frame: |Theta| = 0");
  const auto diag = DiagonalizingRotation::from(theta);
  const double rate = to_angular(frame_rate_mhz.value_or(theta.norm()));
  if (!std::isfinite(rate)) throw DomainError("postprocess_to_second_frame: frame rate must be finite");
  TomographyRecord out = rec;
  out.frame = Frame::Second;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double t = rec.durations[i];
    out.estimates[i] = rotate_about_axis(Axis::X, -(rate * t + modulation.at(t)), diag.apply(rec.estimates[i]));
  }
  out.metadata["frame"] = frame_name(Frame::Second);
  out.metadata["frame_theta_mhz"] = {theta.x(), theta.y(), theta.z()};
  out.metadata["frame_rate_mhz"] = to_cyclic(rate);
  if (modulation.depth_rad != 0.0)
    out.metadata["frame_modulation"] = {{"depth_rad", modulation.depth_rad},
                                        {"freq_mhz", modulation.freq_mhz},
                                        {"phase_rad", modulation.phase}};
  return out;
}

/// Sign s in phiz = atan2(s theta_y, theta_z). Fixed once against a
/// noise-free simulation with known phase (see the calibration test); with
/// right-handed generators the dressed axis is (0, -sin phiz, cos phiz).
inline constexpr double kPhaseSign = -1.0;

enum class AmplitudeNorm {
  // |theta|, including the dressed-frame detuning component theta_x.
  Full,
  // |(theta_y, theta_z)|; insensitive to a mismatch between omega_z and the
  // true Rabi frequency.
  Transverse,
};

enum class Strategy { Resonant, OffResonant };

inline const char* strategy_name(Strategy s) {
  return s == Strategy::Resonant ? "resonant" : "off_resonant";
}

struct PointDiagnostics {
  Vec3 theta_rabi_mhz = Vec3::Zero();
  Vec3 theta_dressed_mhz = Vec3::Zero();
  double rabi_residual_rms = 0.0;
  double dressed_residual_rms = 0.0;
  double transversal_ratio = 0.0;
  double dressed_ratio = 0.0;
  double probe_freq_mhz = 0.0;
  std::vector<std::string> warnings;
};

struct TransferPoint {
  double freq_mhz = 0.0;
  // Programmed z amplitude the estimate is relative to.
  double a_prog_mhz = 0.0;
  double az_est = 0.0;
  double phiz_est = 0.0;
  double amp_sigma = 0.0;
  double phase_sigma = 0.0;
  Strategy strategy = Strategy::Resonant;
  bool below_noise_floor = false;
  // For below-floor points: az_est + 2 sigma.
  double az_upper_bound = 0.0;
  PointDiagnostics diagnostics;
};

/// A_z = |theta| |Theta| / sqrt(Theta_x^2 + Theta_y^2) and
/// phiz = atan2(s theta_y, theta_z), with 1-sigma uncertainties propagated
/// from both fit covariances.
inline TransferPoint extract_point(const RotationFit& rabi, const RotationFit& dressed,
                                   AmplitudeNorm norm = AmplitudeNorm::Transverse,
                                   double phase_sign = kPhaseSign) {
  if (!rabi.converged || !dressed.converged)
    throw UsageError("extract_point needs converged fits");
  const Vec3 big = rabi.theta_mhz();
  const Vec3 th = dressed.theta_mhz();
  const double mag = big.norm();
  const double rho = std::hypot(big.x(), big.y());
  if (!(mag > 0.0) || !(rho > 0.0))
    throw DomainError("extract_point: Rabi vector has no transverse component");

  const Eigen::Matrix3d cbig = rabi.theta_covariance_mhz();
  const Eigen::Matrix3d cth = dressed.theta_covariance_mhz();
  const double g = mag / rho;
  const Vec3 dg(-big.x() * big.z() * big.z() / (mag * rho * rho * rho),
                -big.y() * big.z() * big.z() / (mag * rho * rho * rho), big.z() / (mag * rho));

  const double n_perp = std::hypot(th.y(), th.z());
  const double n = norm == AmplitudeNorm::Full ? th.norm() : n_perp;
  Vec3 dn = Vec3::Zero();
  if (n > 0.0) dn = norm == AmplitudeNorm::Full ? Vec3(th / n) : Vec3(0, th.y() / n, th.z() / n);

  TransferPoint pt;
  pt.az_est = n * g;
  const double var_n = n > 0.0 ? double(dn.transpose() * cth * dn)
                               : 0.5 * (cth(1, 1) + cth(2, 2));
  pt.amp_sigma = std::sqrt(std::max(0.0, var_n * g * g + n * n * double(dg.transpose() * cbig * dg)));
  pt.phiz_est = wrap_phase(std::atan2(phase_sign * th.y(), th.z()));
  if (n_perp > 0.0) {
    const Vec3 dphi(0, phase_sign * th.z() / (n_perp * n_perp), -phase_sign * th.y() / (n_perp * n_perp));
    pt.phase_sigma = std::sqrt(std::max(0.0, double(dphi.transpose() * cth * dphi)));
  } else {
    pt.phase_sigma = kPi;
  }
  const double sigma_iso = std::sqrt(std::max(0.0, 0.5 * (cth(1, 1) + cth(2, 2))));
  pt.below_noise_floor = n_perp < 2.0 * sigma_iso;
  if (pt.below_noise_floor) {
    pt.az_upper_bound = (n_perp + 2.0 * sigma_iso) * g;
    pt.phase_sigma = std::max(pt.phase_sigma, kPi);
  }
  pt.diagnostics.theta_rabi_mhz = big;
  pt.diagnostics.theta_dressed_mhz = th;
  pt.diagnostics.rabi_residual_rms = rabi.residual_rms;
  pt.diagnostics.dressed_residual_rms = dressed.residual_rms;
  return pt;
}

/// In the frame that follows the longitudinal modulation exactly, the
/// constant part of that modulation shifts the extracted phase by
/// k sin(phiz), k = 2 a_par / omega_z. Returns the phase with the shift
/// removed (fixed-point solve).
inline double remove_longitudinal_phase_shift(double phiz_est, double az, const Vec3& theta_rabi_mhz,
                                              double omegaz) {
  const double mag = theta_rabi_mhz.norm();
  if (!(mag > 0.0) || !(omegaz > 0.0)) return phiz_est;
  const double k = 2.0 * az * theta_rabi_mhz.z() / (mag * omegaz);
  double phi = phiz_est;
  for (int i = 0; i < 6; ++i) phi = phiz_est - k * std::sin(phi);
  return wrap_phase(phi);
}

}  // namespace qvna
