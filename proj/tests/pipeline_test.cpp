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

#include "qvna/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

using namespace qvna;

namespace {

TransferFunction constant_line(double gain, double phase) {
  return TransferFunction::parametric("constant", {{"gain", gain}, {"phase", phase}},
                                      [=](double) { return Response{gain, phase, true}; });
}

double amp_error(const TransferPoint& p, double gain = 1.0) {
  return p.az_est / (gain * p.a_prog_mhz) - 1.0;
}

double phase_error(const TransferPoint& p, const DriveTemplate& t, double line_phase = 0.0) {
  return wrap_phase(p.phiz_est - t.phi_prog - line_phase);
}

}  // namespace

TEST(Pipeline, CalibratedSignMatchesConstant) {
  EXPECT_EQ(calibrate_phase_sign(), kPhaseSign);
  EXPECT_EQ(calibrate_phase_sign(150.0, -2.0), kPhaseSign);
}

TEST(Pipeline, StrategyPlanning) {
  DriveTemplate t;
  EXPECT_EQ(resolve_strategy(StrategySchedule::Auto, t, 30.0), Strategy::Resonant);
  EXPECT_EQ(resolve_strategy(StrategySchedule::Auto, t, 150.0), Strategy::OffResonant);
  EXPECT_EQ(resolve_strategy(StrategySchedule::OffResonant, t, 30.0), Strategy::OffResonant);

  const DriveConfig r = x_drive_for(t, 30.0, Strategy::Resonant);
  EXPECT_DOUBLE_EQ(r.ax, 30.0);
  EXPECT_DOUBLE_EQ(r.detuning(), 0.0);

  const DriveConfig o = x_drive_for(t, 150.0, Strategy::OffResonant);
  EXPECT_DOUBLE_EQ(o.ax, 50.0);
  EXPECT_NEAR(rabi_frequency(o.ax, o.detuning()), 150.0, 1e-9);
  EXPECT_GT(o.detuning(), 0.0);

  t.detuning_sign = -1;
  const DriveConfig n = x_drive_for(t, 40.0, Strategy::OffResonant);
  EXPECT_NEAR(n.ax, 24.0, 1e-12);
  EXPECT_NEAR(n.detuning(), -32.0, 1e-9);
}

TEST(Pipeline, NoiseFreeUnityResonant) {
  SweepSetup s;
  const auto p = measure_point(s, 30.0, Strategy::Resonant, kExactShots, 1);
  EXPECT_FALSE(p.below_noise_floor);
  EXPECT_LT(std::abs(amp_error(p)), 1e-3);
  EXPECT_LT(std::abs(phase_error(p, s.drive)), 1e-3);
  EXPECT_NEAR(p.diagnostics.probe_freq_mhz, 30.0, 1e-6);
  EXPECT_EQ(p.freq_mhz, 30.0);
}

TEST(Pipeline, NoiseFreeUnityOffResonant) {
  SweepSetup s;
  s.drive.phi_prog = 2.2;
  const auto p = measure_point(s, 150.0, Strategy::OffResonant, kExactShots, 1);
  EXPECT_LT(std::abs(amp_error(p)), 1e-3);
  EXPECT_LT(std::abs(phase_error(p, s.drive)), 1e-3);
  EXPECT_EQ(p.strategy, Strategy::OffResonant);
}

// Property: any constant complex gain in the usable range is recovered.
TEST(Pipeline, ConstantGainRoundTrip) {
  for (double gain : {0.3, 0.7, 1.8}) {
    for (double ph : {-2.5, 0.4}) {
      SweepSetup s;
      s.line = constant_line(gain, ph);
      const auto p = measure_point(s, 60.0, Strategy::OffResonant, kExactShots, 3);
      EXPECT_LT(std::abs(amp_error(p, gain)), 1e-3) << gain << " " << ph;
      EXPECT_LT(std::abs(phase_error(p, s.drive, ph)), 1e-3) << gain << " " << ph;
    }
  }
}

TEST(Pipeline, DeepNotchIsBelowFloor) {
  SweepSetup s;
  s.line = constant_line(1e-4, 0.0);
  const auto p = measure_point(s, 30.0, Strategy::Resonant, 4096, 5);
  EXPECT_TRUE(p.below_noise_floor);
  EXPECT_GE(p.az_upper_bound, 1e-4 * s.drive.a_prog_mhz);
  EXPECT_GE(p.phase_sigma, kPi);
  EXPECT_EQ(to_sample(p, s.drive).phase, 0.0);
}

// Independent noise on both sides: a 3 sigma bound keeps the check stable
// over seeds while still catching a bias.
TEST(Pipeline, StrategiesAgreeWithinUncertainty) {
  SweepSetup s;
  s.line = delay_line(8.25);
  for (double f : {20.0, 35.0, 50.0}) {
    const auto r = measure_point(s, f, Strategy::Resonant, 4096, point_seed(7, f, Strategy::Resonant));
    const auto o =
        measure_point(s, f, Strategy::OffResonant, 4096, point_seed(7, f, Strategy::OffResonant));
    const double da = r.az_est - o.az_est;
    const double dp = wrap_phase(r.phiz_est - o.phiz_est);
    EXPECT_LT(std::abs(da), 3.0 * std::hypot(r.amp_sigma, o.amp_sigma)) << f;
    EXPECT_LT(std::abs(dp), 3.0 * std::hypot(r.phase_sigma, o.phase_sigma)) << f;
  }
}

TEST(Pipeline, RefusesWhenRotatingWaveFails) {
  SweepSetup s;
  s.drive.omega0_mhz = 100.0;
  try {
    measure_point(s, 60.0, Strategy::Resonant, kExactShots, 1);
    FAIL() << "expected refusal";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "rwa");
  }
}

// The reported 1-sigma values describe the scatter over repetitions.
TEST(Pipeline, ReportedUncertaintyMatchesScatter) {
  for (auto [f, strat] : {std::pair{30.0, Strategy::Resonant}, std::pair{150.0, Strategy::OffResonant}}) {
    SweepSetup s;
    const int reps = 30;
    double sa = 0, sa2 = 0, sp = 0, sp2 = 0, ra = 0, rp = 0;
    for (int i = 0; i < reps; ++i) {
      const auto p = measure_point(s, f, strat, 4096, derive_seed(11, i));
      const double a = p.az_est, ph = phase_error(p, s.drive);
      sa += a;
      sa2 += a * a;
      sp += ph;
      sp2 += ph * ph;
      ra += p.amp_sigma / reps;
      rp += p.phase_sigma / reps;
    }
    const double ea = std::sqrt((sa2 - sa * sa / reps) / (reps - 1));
    const double ep = std::sqrt((sp2 - sp * sp / reps) / (reps - 1));
    EXPECT_GT(ra / ea, 0.6) << f;
    EXPECT_LT(ra / ea, 1.6) << f;
    EXPECT_GT(rp / ep, 0.6) << f;
    EXPECT_LT(rp / ep, 1.6) << f;
  }
}

TEST(Pipeline, SpuriousAxisTiltIsRemoved) {
  // Shift caused by the artifact alone, against the 4096-shot uncertainty.
  SweepSetup clean;
  const auto ref = measure_point(clean, 19.8, Strategy::Resonant, kExactShots, 1);
  const auto noisy = measure_point(clean, 19.8, Strategy::Resonant, 4096, 1);
  for (double eps : {-0.3, 0.1, 0.3}) {
    SweepSetup s;
    s.imperfections.tomography_phase_error = eps;
    const auto p = measure_point(s, 19.8, Strategy::Resonant, kExactShots, 1);
    EXPECT_LT(std::abs(p.az_est - ref.az_est), noisy.amp_sigma) << eps;
    EXPECT_LT(std::abs(wrap_phase(p.phiz_est - ref.phiz_est)), noisy.phase_sigma) << eps;
  }
  for (double frac : {-0.1, 0.04, 0.1}) {
    SweepSetup s;
    s.imperfections.spontaneous_detuning_mhz = frac * 19.8;
    const auto p = measure_point(s, 19.8, Strategy::Resonant, kExactShots, 1);
    EXPECT_LT(std::abs(p.az_est - ref.az_est), noisy.amp_sigma) << frac;
    EXPECT_LT(std::abs(wrap_phase(p.phiz_est - ref.phiz_est)), noisy.phase_sigma) << frac;
  }
}

TEST(Pipeline, TiltedRabiVectorLikeTypicalDataSet) {
  SweepSetup s;
  s.imperfections.tomography_phase_error = 0.1;
  s.imperfections.spontaneous_detuning_mhz = 0.8;
  const auto p = measure_point(s, 19.8, Strategy::Resonant, 4096, 2);
  const Vec3 th = p.diagnostics.theta_rabi_mhz;
  EXPECT_NEAR(th.x(), 19.7, 0.1);
  EXPECT_NEAR(th.y(), -1.9, 0.15);
  EXPECT_NEAR(th.z(), 0.8, 0.15);
  EXPECT_NEAR(std::atan2(th.y(), th.x()), -0.1, 0.01);
}

TEST(Sweep, RejectsBadFrequencyLists) {
  SweepSetup s;
  EXPECT_THROW(sweep(s, {}, StrategySchedule::Auto, 64, 1), SweepError);
  EXPECT_THROW(sweep(s, {5.0, 20.0}, StrategySchedule::Auto, 64, 1), SweepError);
  EXPECT_THROW(sweep(s, {20.0, 500.0}, StrategySchedule::Auto, 64, 1), SweepError);
  EXPECT_THROW(sweep(s, {30.0, 20.0}, StrategySchedule::Auto, 64, 1), SweepError);
  s.max_freq_mhz = 600.0;
  EXPECT_NO_THROW(validate_frequencies({20.0, 500.0}, s.min_freq_mhz, s.max_freq_mhz));
}

TEST(Sweep, UnityLineIsFlat) {
  SweepSetup s;
  const auto r = sweep(s, {10.0, 45.0, 120.0, 300.0}, StrategySchedule::Auto, kExactShots, 4);
  ASSERT_TRUE(r.failures.empty());
  ASSERT_EQ(r.estimate.samples().points.size(), 4u);
  for (const auto& sp : r.estimate.samples().points) {
    EXPECT_NEAR(sp.amp, 1.0, 1e-3) << sp.freq_mhz;
    EXPECT_NEAR(sp.phase, 0.0, 1e-3) << sp.freq_mhz;
  }
}

TEST(Sweep, IndependentOfWorkerCount) {
  SweepSetup s;
  s.line = delay_line(3.0);
  const std::vector<double> f{12.0, 40.0, 90.0};
  const auto a = sweep(s, f, StrategySchedule::Auto, 1024, 9, 1);
  const auto b = sweep(s, f, StrategySchedule::Auto, 1024, 9, 3);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].az_est, b.points[i].az_est);
    EXPECT_EQ(a.points[i].phiz_est, b.points[i].phiz_est);
    EXPECT_EQ(a.points[i].phase_sigma, b.points[i].phase_sigma);
  }
}

TEST(Sweep, RecordsPointFailuresAndContinues) {
  SweepSetup s;
  s.line = TransferFunction::sampled({{8.0, 1.0, 0.0}, {100.0, 1.0, 0.0}});
  const auto r = sweep(s, {30.0, 200.0}, StrategySchedule::Auto, kExactShots, 1);
  ASSERT_EQ(r.points.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].freq_mhz, 200.0);
  EXPECT_EQ(r.failures[0].stage, "line");
  EXPECT_THROW(sweep(s, {150.0, 200.0}, StrategySchedule::Auto, kExactShots, 1), SweepError);
}

TEST(Sweep, RecoversDelay) {
  SweepSetup s;
  s.line = delay_line(8.25);
  const auto r = sweep(s, {8.0, 20.0, 35.0, 50.0, 70.0}, StrategySchedule::Auto, kExactShots, 1);
  const DelayFit d = fit_and_subtract_delay(r.estimate);
  EXPECT_NEAR(d.tau_ns, 8.25, 1e-3);
}

TEST(PhaseScan, ValidatesPhaseList) {
  SweepSetup s;
  EXPECT_THROW(phase_linearity_scan(s, 30.0, {0.5, 1.5}, 64, 1), ValidationError);
  EXPECT_THROW(phase_linearity_scan(s, 30.0, {0.1, 0.5, 1.0, 1.5, 2.0}, 64, 1), ValidationError);
}

TEST(PhaseScan, AxisTurnsFromZTowardMinusY) {
  SweepSetup s;
  s.drive.phi_prog = 0.2;
  const Vec3 a = measure_point(s, 30.0, Strategy::Resonant, kExactShots, 1).diagnostics.theta_dressed_mhz;
  s.drive.phi_prog = kPi / 2;
  const Vec3 b = measure_point(s, 30.0, Strategy::Resonant, kExactShots, 1).diagnostics.theta_dressed_mhz;
  EXPECT_GT(a.z(), 0.0);
  EXPECT_LT(a.y(), 0.0);
  EXPECT_GT(a.z(), 4.0 * std::abs(a.y()));
  EXPECT_LT(b.y(), 0.0);
  EXPECT_LT(std::abs(b.z()), 1e-3 * std::abs(b.y()));
}

TEST(PhaseScan, InterceptIsLinePhase) {
  SweepSetup s;
  s.line = delay_line(8.25);
  std::vector<double> phases;
  for (int k = 0; k < 6; ++k) phases.push_back(-kPi + (k + 0.5) * kTwoPi / 6);
  const auto scan = phase_linearity_scan(s, 25.0, phases, kExactShots, 1);
  EXPECT_NEAR(scan.slope, 1.0, 1e-3);
  EXPECT_LT(scan.max_residual, 1e-3);
  const double line_phase = s.line.at(25.0).phase;
  EXPECT_NEAR(wrap_phase(scan.intercept - line_phase), 0.0, 2e-3);
}

// With the dressed axis along the initial state nothing rotates: the point is
// reported as a floor, not as a wrong value.
TEST(PhaseScan, AxisAlongInitialStateIsFlagged) {
  SweepSetup s;
  for (double phi : {0.0, kPi}) {
    s.drive.phi_prog = phi;
    const auto p = measure_point(s, 30.0, Strategy::Resonant, 4096, 1);
    EXPECT_TRUE(p.below_noise_floor) << phi;
    EXPECT_GE(p.phase_sigma, kPi);
  }
}
