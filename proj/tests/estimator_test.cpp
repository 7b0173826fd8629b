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

#include "qvna/estimator.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qvna;

namespace {

DriveConfig rabi_drive(double ax, double detuning = 0.0) {
  DriveConfig d;
  d.ax = ax;
  d.omegax = d.omega0 - detuning;
  return d;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

RotationFit exact_fit(const Vec3& theta_mhz) {
  RotationFit f;
  f.theta = RotationRate::from(theta_mhz * kTwoPi);
  f.covariance = Eigen::MatrixXd::Identity(3, 3) * 1e-6;
  f.converged = true;
  return f;
}

}  // namespace

TEST(FitRotation, NoiselessResonantRecord) {
  const auto rec = run_rabi_scan(rabi_drive(19.8), {}, linspace(0, 0.2, 40), kExactShots, {}, 1);
  const auto fit = fit_rotation(rec, false);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.theta_mhz().x(), 19.8, 1e-6);
  EXPECT_NEAR(fit.theta_mhz().y(), 0.0, 1e-6);
  EXPECT_NEAR(fit.theta_mhz().z(), 0.0, 1e-6);
  EXPECT_LT(fit.residual_rms, 1e-9);
}

TEST(FitRotation, NoiselessDetunedRecordWithFreeInitialState) {
  const auto rec = run_rabi_scan(rabi_drive(15.0, 6.0), {}, linspace(0.01, 0.25, 40),
                                 kExactShots, {}, 1);
  const auto fit = fit_rotation(rec, true);
  EXPECT_NEAR(fit.theta_mhz().x(), 15.0, 1e-6);
  EXPECT_NEAR(fit.theta_mhz().z(), 6.0, 1e-6);
  EXPECT_NEAR(fit.v0.z, -1.0, 1e-6);
  EXPECT_EQ(fit.covariance.rows(), 6);
}

TEST(FitRotation, SubNyquistGridStillFindsRate) {
  // 30 MHz sampled every 25 ns: the seed search must not lock onto the alias.
  const auto rec = run_rabi_scan(rabi_drive(30.0), {}, linspace(0, 1.0, 41), kExactShots, {}, 1);
  const auto fit = fit_rotation(rec, false, Vec3(30.5, 0, 0));
  EXPECT_NEAR(fit.rabi_mhz(), 30.0, 1e-6);
}

TEST(FitRotation, PhaseErrorShowsAsAzimuth) {
  ImperfectionConfig imp;
  imp.tomography_phase_error = 0.1;
  const auto rec = run_rabi_scan(rabi_drive(19.8), {}, linspace(0, 0.3, 48), 4096, imp, 4);
  const auto fit = fit_rotation(rec, false);
  const Eigen::Matrix3d c = fit.theta_covariance_mhz();
  const Vec3 th = fit.theta_mhz();
  const double sigma = std::sqrt(c(1, 1)) / th.x();
  EXPECT_NEAR(drive_phase_offset(fit), -0.1, 3 * sigma + 1e-3);
}

// Property over injected errors: theta_y / theta_x = -tan(eps), detuned or not.
TEST(FitRotation, PhaseErrorTiltRatio) {
  for (double eps : {-0.3, -0.05, 0.2, 0.3}) {
    for (double det : {0.0, 1.5}) {
      ImperfectionConfig imp;
      imp.tomography_phase_error = eps;
      const auto rec =
          run_rabi_scan(rabi_drive(12.0, det), {}, linspace(0, 0.4, 64), kExactShots, imp, 1);
      const Vec3 th = fit_rotation(rec, false).theta_mhz();
      EXPECT_NEAR(th.y() / th.x(), -std::tan(eps), 1e-6) << eps << " " << det;
      EXPECT_NEAR(th.z(), det, 1e-6);
    }
  }
}

TEST(FitRotation, UndrivenRecordIsRankDeficient) {
  const auto rec = run_rabi_scan(rabi_drive(0.0), {}, linspace(0, 0.3, 30), 4096, {}, 4);
  EXPECT_THROW(fit_rotation(rec, false), RankError);
  const auto exact = run_rabi_scan(rabi_drive(0.0), {}, linspace(0, 0.3, 30), kExactShots, {}, 4);
  EXPECT_THROW(fit_rotation(exact, false), RankError);
}

TEST(FitRotation, TooFewPoints) {
  const auto rec = run_rabi_scan(rabi_drive(10.0), {}, linspace(0, 0.3, 8), kExactShots, {}, 4);
  EXPECT_NO_THROW(fit_rotation(rec, false));
  EXPECT_THROW(fit_rotation(rec, true), DomainError);
}

TEST(FitRotation, CovarianceIsSymmetricPsd) {
  const auto rec = run_rabi_scan(rabi_drive(12.0, 3.0), {}, linspace(0, 0.4, 40), 1024, {}, 8);
  const auto fit = fit_rotation(rec, true);
  EXPECT_LT((fit.covariance - fit.covariance.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-15);
}

TEST(PostProcess, ResonantCaseIsPureXRotation) {
  const auto rec = run_rabi_scan(rabi_drive(19.8), {}, linspace(0, 0.2, 20), kExactShots, {}, 1);
  const auto fit = exact_fit({19.8, 0, 0});
  const auto out = postprocess_to_second_frame(rec, fit);
  EXPECT_EQ(out.frame, Frame::Second);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto expect = rotate_about_axis(Axis::X, -kTwoPi * 19.8 * rec.durations[i], rec.estimates[i]);
    EXPECT_NEAR(out.estimates[i].y, expect.y, 1e-12);
    EXPECT_NEAR(out.estimates[i].z, expect.z, 1e-12);
  }
}

TEST(PostProcess, RabiRecordBecomesStatic) {
  ImperfectionConfig imp;
  imp.tomography_phase_error = 0.2;
  const auto rec = run_rabi_scan(rabi_drive(14.0, 5.0), {}, linspace(0, 0.4, 50), kExactShots, imp, 1);
  const auto fit = fit_rotation(rec, false);
  const auto out = postprocess_to_second_frame(rec, fit);
  for (const auto& e : out.estimates) {
    EXPECT_NEAR(e.x, out.estimates[0].x, 1e-8);
    EXPECT_NEAR(e.y, out.estimates[0].y, 1e-8);
    EXPECT_NEAR(e.z, out.estimates[0].z, 1e-8);
  }
}

TEST(PostProcess, DressedRecordRotatesSlowly) {
  auto d = rabi_drive(19.8);
  d.z_enabled = true;
  d.omegaz = 19.8;
  d.az = 0.5;
  d.phiz = 0.7;
  const auto grid = linspace(0, 4.0, 200);
  const auto rec = run_dressed_scan(d, {}, grid, kExactShots, {}, 1);
  const auto out = postprocess_to_second_frame(rec, exact_fit({19.8, 0, 0}));
  const auto ref = evolve_second_frame(19.8, 0.5, 0.7, kGroundState, grid);
  double worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, (out.estimates[i].vec() - ref.states[i].vec()).norm());
  EXPECT_LT(worst, 0.05);
}

TEST(PostProcess, RejectsWrongFrameAndZeroRate) {
  auto rec = run_rabi_scan(rabi_drive(10.0), {}, linspace(0, 0.2, 20), kExactShots, {}, 1);
  EXPECT_THROW(postprocess_to_second_frame(rec, exact_fit({0, 0, 0})), DomainError);
  rec.frame = Frame::Second;
  EXPECT_THROW(postprocess_to_second_frame(rec, exact_fit({10, 0, 0})), UsageError);
}

TEST(ExtractPoint, TypicalDataSetNumbers) {
  const auto pt = extract_point(exact_fit({19.7, -1.9, 0.8}), exact_fit({0.2, -3.5, 0.1}),
                                AmplitudeNorm::Full);
  const double full = std::sqrt(0.04 + 12.25 + 0.01);
  EXPECT_NEAR(pt.az_est, full * std::sqrt(19.7 * 19.7 + 1.9 * 1.9 + 0.64) /
                             std::hypot(19.7, 1.9), 1e-12);
  EXPECT_NEAR(pt.az_est, 3.5, 0.02);
  EXPECT_NEAR(std::abs(pt.phiz_est), 1.54, 0.005);
  EXPECT_GT(pt.phiz_est, 0.0);
}

TEST(ExtractPoint, OnResonanceAmplitudeIsRate) {
  const Vec3 th(0.0, 1.2, -2.1);
  const auto pt = extract_point(exact_fit({25, 0, 0}), exact_fit(th), AmplitudeNorm::Full);
  EXPECT_NEAR(pt.az_est, th.norm(), 1e-12);
  const auto pt2 = extract_point(exact_fit({25, 0, 0}), exact_fit(th * 3.0));
  EXPECT_NEAR(pt2.phiz_est, pt.phiz_est, 1e-12);
}

TEST(ExtractPoint, PureZAxisHasZeroPhase) {
  const auto pt = extract_point(exact_fit({25, 0, 0}), exact_fit({0, 0, 2.0}));
  EXPECT_EQ(pt.phiz_est, 0.0);
}

TEST(ExtractPoint, TransverseNormIgnoresDressedDetuning) {
  const auto a = extract_point(exact_fit({25, 0, 0}), exact_fit({0.0, 1.0, 1.0}));
  const auto b = extract_point(exact_fit({25, 0, 0}), exact_fit({0.4, 1.0, 1.0}));
  EXPECT_NEAR(a.az_est, b.az_est, 1e-12);
  EXPECT_NEAR(a.phiz_est, b.phiz_est, 1e-12);
}

TEST(ExtractPoint, SmallRateFlagsNoiseFloor) {
  auto dressed = exact_fit({0.0, 0.01, 0.01});
  dressed.covariance = Eigen::MatrixXd::Identity(3, 3) * 0.01;
  const auto pt = extract_point(exact_fit({25, 0, 0}), dressed);
  EXPECT_TRUE(pt.below_noise_floor);
  EXPECT_NEAR(pt.az_upper_bound, std::hypot(0.01, 0.01) + 0.2, 1e-12);
  EXPECT_GE(pt.phase_sigma, kPi);
}

TEST(ExtractPoint, UncertaintyMatchesFiniteDifferences) {
  const Vec3 big(18.0, -2.0, 5.0), small(0.3, -1.1, 2.0);
  Eigen::MatrixXd cb(3, 3), cs(3, 3);
  cb << 0.02, 0.004, -0.001, 0.004, 0.03, 0.002, -0.001, 0.002, 0.025;
  cs << 0.01, 0.001, 0.0, 0.001, 0.015, -0.002, 0.0, -0.002, 0.012;
  auto rabi = exact_fit(big), dressed = exact_fit(small);
  rabi.covariance = cb;
  dressed.covariance = cs;
  const auto pt = extract_point(rabi, dressed);
  // Independent linearization by central differences on the raw formula.
  auto amp = [](const Vec3& b, const Vec3& s) {
    return std::hypot(s.y(), s.z()) * b.norm() / std::hypot(b.x(), b.y());
  };
  auto phase = [](const Vec3& s) { return std::atan2(-s.y(), s.z()); };
  Eigen::Matrix<double, 1, 6> ja, jp;
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e(k) = h;
    ja(k) = (amp(big + e, small) - amp(big - e, small)) / (2 * h);
    ja(3 + k) = (amp(big, small + e) - amp(big, small - e)) / (2 * h);
    jp(k) = 0.0;
    jp(3 + k) = (phase(small + e) - phase(small - e)) / (2 * h);
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
  c.topLeftCorner(3, 3) = cb;
  c.bottomRightCorner(3, 3) = cs;
  EXPECT_NEAR(pt.amp_sigma, std::sqrt(double(ja * c * ja.transpose())), 1e-8);
  EXPECT_NEAR(pt.phase_sigma, std::sqrt(double(jp * c * jp.transpose())), 1e-8);
}

TEST(ExtractPoint, CalibratedSignRecoversProgrammedPhase) {
  // Noise-free simulation with a known phase fixes the branch of the
  // arctangent: the opposite sign would return -phiz.
  for (double phiz : {-2.5, -1.0, 0.6, 1.54, 2.9}) {
    auto d = rabi_drive(19.8);
    d.z_enabled = true;
    d.omegaz = 19.8;
    d.az = 0.8;
    d.phiz = phiz;
    const auto rabi = fit_rotation(
        run_rabi_scan(rabi_drive(19.8), {}, linspace(0, 0.2, 40), kExactShots, {}, 1), false);
    const auto grid = choose_sampling_grid(19.8, 0.8, 64).durations;
    const auto second = postprocess_to_second_frame(run_dressed_scan(d, {}, grid, kExactShots, {}, 1), rabi);
    const auto dressed = fit_rotation(second, false);
    const auto pt = extract_point(rabi, dressed);
    EXPECT_NEAR(pt.phiz_est, phiz, 0.01) << phiz;
    EXPECT_NEAR(pt.az_est, 0.8, 0.01) << phiz;
  }
}
