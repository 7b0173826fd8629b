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

#include "qvna/line_models.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qvna;

namespace {

// Independent route to the stub response: general line-input impedance with a
// short load, then S21 of a shunt admittance from its ABCD matrix.
Complex stub_abcd_oracle(const StubParams& p, double f_mhz) {
  const double beta_l = 2 * M_PI * f_mhz * 1e-3 * p.electrical_delay_ns;
  const Complex gamma_l(p.loss_db_per_ns * p.electrical_delay_ns * std::log(10.0) / 20.0, beta_l);
  const Complex zs = p.impedance_ratio;  // normalized to the through line
  const Complex zload = 0.0;
  const Complex t = std::tanh(gamma_l);
  const Complex zin = zs * (zload + zs * t) / (zs + zload * t);
  const Complex y = 1.0 / zin;
  const Complex a = 1.0, b = 0.0, c = y, d = 1.0;
  return 2.0 / (a + b + c + d);
}

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

TEST(DelayLine, ZeroDelay) {
  const auto h = delay_line(0);
  for (double f : {1.0, 50.0, 400.0}) {
    EXPECT_EQ(h.at(f).amp, 1.0);
    EXPECT_EQ(h.at(f).phase, 0.0);
  }
}

TEST(DelayLine, PhaseAtHundredMegahertz) {
  // -2 pi * 0.1 GHz * 8.25 ns = -5.18363 rad, wrapped to 1.09956 rad.
  const auto h = delay_line(8.25);
  EXPECT_NEAR(h.at(100).phase, -2 * M_PI * 0.1 * 8.25 + 2 * M_PI, 1e-12);
  EXPECT_NEAR(h.at(100).phase, 1.0996, 1e-4);
}

TEST(DelayLine, PhaseSlope) {
  const auto h = delay_line(8.25);
  const double step = wrap_phase(h.at(10.5).phase - h.at(10).phase);
  EXPECT_NEAR(step / 0.0005, -2 * M_PI * 8.25, 1e-8);
}

TEST(ShortedStub, MatchesAbcdOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> f(0.1, 400.0);
  for (const StubParams p : {StubParams{10.0, 1.0, 0.0}, StubParams{7.3, 0.6, 0.0},
                             StubParams{10.0, 1.0, 0.02}}) {
    const auto h = shorted_stub(p);
    for (int i = 0; i < 1000; ++i) {
      const double fi = f(rng);
      const Complex expected = stub_abcd_oracle(p, fi);
      EXPECT_NEAR(std::abs(shorted_stub_s21(p, fi) - expected), 0.0, 1e-12) << fi;
      EXPECT_NEAR(std::abs(h.value(fi) - expected), 0.0, 1e-12) << fi;
    }
  }
}

TEST(ShortedStub, DcShortAndQuarterWave) {
  const StubParams p{10.0, 1.0, 0.0};
  const auto h = shorted_stub(p);
  EXPECT_LT(h.at(1e-6).amp, 1e-6);
  EXPECT_NEAR(h.at(25.0).amp, 1.0, 1e-12);  // f = 1 / (4 tau_e)
  EXPECT_NEAR(h.at(75.0).amp, 1.0, 1e-12);
}

TEST(ShortedStub, NotchesAtHalfWave) {
  const auto h = shorted_stub({10.0, 1.0, 0.0});
  for (double f : {50.0, 100.0, 150.0}) {
    const Response r = h.at(f);
    EXPECT_EQ(r.amp, 0.0);
    EXPECT_FALSE(r.phase_defined);
  }
  EXPECT_GT(h.at(49.0).amp, 0.05);
}

TEST(ShortedStub, LossLimitsNotchDepth) {
  const double loss = stub_loss_for_notch_depth(30.0, 1.0, 10.0);
  const auto h = shorted_stub({10.0, 1.0, loss});
  EXPECT_NEAR(20 * std::log10(h.at(50.0).amp), -30.0, 1e-9);
  EXPECT_NEAR(20 * std::log10(h.at(100.0).amp), -30.0, 1e-9);
  EXPECT_GT(h.at(25.0).amp, 0.99);
}

TEST(ShortedStub, RejectsBadParameters) {
  EXPECT_THROW(shorted_stub({0.0, 1.0, 0.0}), DomainError);
  EXPECT_THROW(shorted_stub({1.0, -1.0, 0.0}), DomainError);
  EXPECT_THROW(shorted_stub({1.0, 1.0, -0.1}), DomainError);
}

TEST(Lowpass, KnownPoints) {
  const auto h = first_order_lowpass(40.0);
  EXPECT_NEAR(h.at(40.0).amp, 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h.at(40.0).phase, -M_PI / 4, 1e-15);
  EXPECT_NEAR(h.at(1e-9).amp, 1.0, 1e-12);
  EXPECT_NEAR(h.at(400.0).amp, 0.0995037, 1e-7);
  EXPECT_THROW(first_order_lowpass(0), DomainError);
}

TEST(Cascade, UnityAndDelays) {
  const auto h = first_order_lowpass(30);
  const auto hu = cascade(h, unity_line());
  const auto dd = cascade(delay_line(3.0), delay_line(5.25));
  const auto d = delay_line(8.25);
  for (double f : grid(1, 400, 37)) {
    EXPECT_NEAR(std::abs(hu.value(f) - h.value(f)), 0, 1e-15);
    EXPECT_NEAR(std::abs(dd.value(f) - d.value(f)), 0, 1e-12);
  }
}

TEST(Cascade, NotchDepthBoundsProduct) {
  const StubParams sp{10.0, 1.0, stub_loss_for_notch_depth(30.0, 1.0, 10.0)};
  const auto line = first_order_lowpass(200);
  const auto total = cascade(line, shorted_stub(sp));
  EXPECT_LE(total.at(50).amp, line.at(50).amp * shorted_stub(sp).at(50).amp * (1 + 1e-12));
}

TEST(Cascade, AssociativeAndCommutative) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> f(1, 400);
  const auto a = first_order_lowpass(80), b = delay_line(2.5),
             c = shorted_stub({6.0, 0.8, 0.01});
  const auto left = cascade(cascade(a, b), c), right = cascade(a, cascade(b, c));
  const auto ab = cascade(a, b), ba = cascade(b, a);
  for (int i = 0; i < 1000; ++i) {
    const double fi = f(rng);
    EXPECT_NEAR(std::abs(left.value(fi) - right.value(fi)), 0, 1e-12);
    EXPECT_NEAR(std::abs(ab.value(fi) - ba.value(fi)), 0, 1e-12);
  }
}

TEST(Cascade, SampledGridsMustMatch) {
  const auto a = unity_line().sample_on({10, 20, 30});
  const auto b = unity_line().sample_on({10, 21, 30});
  try {
    cascade(a, b);
    FAIL();
  } catch (const GridError& e) {
    EXPECT_NE(std::string(e.what()).find("20/21"), std::string::npos);
  }
}

TEST(DeEmbed, SelfIsUnity) {
  const auto h = first_order_lowpass(50).sample_on(grid(8, 400, 20));
  const auto ratio = de_embed(h, h);
  for (const auto& p : ratio.samples().points) {
    EXPECT_NEAR(p.amp, 1, 1e-15);
    EXPECT_NEAR(p.phase, 0, 1e-15);
  }
}

TEST(DeEmbed, InvertsCascade) {
  const auto freqs = grid(8, 400, 57);
  const auto line = cascade(first_order_lowpass(120), delay_line(8.25)).sample_on(freqs);
  const auto stub = shorted_stub({9.1, 1.3, 0.004});
  const auto element = de_embed(cascade(line, stub), line);
  for (const auto& p : element.samples().points)
    EXPECT_NEAR(std::abs(p.value() - stub.value(p.freq_mhz)), 0, 1e-10);
  // Parametric operands stay parametric.
  const auto param = de_embed(cascade(first_order_lowpass(120), stub), first_order_lowpass(120));
  EXPECT_NEAR(std::abs(param.value(77) - stub.value(77)), 0, 1e-12);
}

TEST(DeEmbed, RecoversThirtyDecibelNotch) {
  const StubParams sp{10.0, 1.0, stub_loss_for_notch_depth(30.0, 1.0, 10.0)};
  const auto freqs = grid(40, 60, 21);
  const auto line = first_order_lowpass(300).sample_on(freqs);
  const auto element = de_embed(cascade(line, shorted_stub(sp)), line);
  EXPECT_NEAR(20 * std::log10(element.at(50).amp), -30, 1e-9);
}

TEST(DeEmbed, PropagatesUncertainty) {
  const auto a = TransferFunction::sampled({{10, 0.5, 0.1, 0.01, 0.02}});
  const auto b = TransferFunction::sampled({{10, 2.0, -0.2, 0.04, 0.03}});
  const auto r = de_embed(a, b).samples().points[0];
  EXPECT_DOUBLE_EQ(r.amp, 0.25);
  EXPECT_NEAR(r.phase, 0.3, 1e-15);
  EXPECT_NEAR(r.amp_sigma / r.amp, std::hypot(0.01 / 0.5, 0.04 / 2.0), 1e-15);
  EXPECT_NEAR(r.phase_sigma, std::hypot(0.02, 0.03), 1e-15);
}

TEST(DeEmbed, DivisionFloor) {
  const auto a = unity_line().sample_on({10, 50, 90});
  const auto b = shorted_stub({10.0, 1.0, 0.0}).sample_on({10, 50, 90});
  try {
    de_embed(a, b);
    FAIL();
  } catch (const DivisionFloorError& e) {
    EXPECT_NE(std::string(e.what()).find("50"), std::string::npos);
  }
}

TEST(ApplyLine, UnityDelayAndNotch) {
  const auto u = apply_line(unity_line(), 100, 0.5, 1.2);
  EXPECT_EQ(u.az_eff, 0.5);
  EXPECT_EQ(u.phiz_eff, 1.2);
  const auto d = apply_line(delay_line(8.25), 100, 1.0, 0.0);
  EXPECT_NEAR(d.phiz_eff, 1.0996, 1e-4);
  EXPECT_EQ(apply_line(shorted_stub({10.0, 1.0, 0.0}), 50, 1.0, 0.0).az_eff, 0.0);
}

TEST(ApplyLine, SampledCoverage) {
  const auto h = first_order_lowpass(50).sample_on({10, 20, 40});
  EXPECT_NO_THROW(apply_line(h, 15, 1, 0));
  EXPECT_NEAR(apply_line(h, 20, 1, 0).az_eff, first_order_lowpass(50).at(20).amp, 1e-15);
  EXPECT_THROW(apply_line(h, 5, 1, 0), CoverageError);
  EXPECT_THROW(apply_line(h, 41, 1, 0), CoverageError);
}

TEST(FitDelay, RecoversPureDelay) {
  const auto h = delay_line(8.25).sample_on(grid(8, 400, 40));
  const auto fit = fit_and_subtract_delay(h);
  EXPECT_NEAR(fit.tau_ns, 8.25, 0.01);
  EXPECT_FALSE(fit.unwrap_warning);
  for (const auto& p : fit.residual.samples().points) EXPECT_LT(std::abs(p.phase), 1e-6);
  EXPECT_LT(std::abs(fit_and_subtract_delay(fit.residual).tau_ns), 1e-3);
}

TEST(FitDelay, ZeroPhase) {
  const auto fit = fit_and_subtract_delay(unity_line().sample_on({10, 20, 30, 40}));
  EXPECT_NEAR(fit.tau_ns, 0.0, 1e-15);
}

TEST(FitDelay, DelayPlusStubDecomposes) {
  // The stub phase is a sawtooth that a finite-window linear fit partly
  // absorbs; the delay is recovered on top of the stub-only fit.
  const StubParams sp{10.0, 1.0, stub_loss_for_notch_depth(10.0, 1.0, 10.0)};
  std::vector<double> freqs;
  for (int i = 0; i < 200; ++i) freqs.push_back(50.0 + 1.0 * i + 0.5);
  const auto stub = shorted_stub(sp);
  const auto alone = fit_and_subtract_delay(stub.sample_on(freqs));
  const auto fit = fit_and_subtract_delay(cascade(delay_line(8.25), stub).sample_on(freqs));
  EXPECT_NEAR(fit.tau_ns - alone.tau_ns, 8.25, 1e-9);
  EXPECT_LT(std::abs(alone.tau_ns), 0.5);
  const auto& r = fit.residual.samples().points;
  const auto& ra = alone.residual.samples().points;
  for (std::size_t i = 0; i < r.size(); ++i)
    EXPECT_NEAR(wrap_phase(r[i].phase - ra[i].phase), 0.0, 1e-9) << r[i].freq_mhz;
}

TEST(FitDelay, WarnsOnSparseGrid) {
  const auto h = delay_line(30.0).sample_on({10, 20, 30, 60, 70});
  EXPECT_TRUE(fit_and_subtract_delay(h).unwrap_warning);
  EXPECT_THROW(fit_and_subtract_delay(unity_line().sample_on({10, 20})), DomainError);
}

TEST(TransferCsv, RoundTripProperty) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SamplePoint> pts;
    double f = 1.0;
    for (int i = 0; i < 15; ++i) {
      f += 30 * u(rng) + 1e-3;
      pts.push_back({f, 2 * u(rng), wrap_phase(7 * u(rng)), 0.01 * u(rng), 0.1 * u(rng)});
    }
    const auto h = TransferFunction::sampled(pts);
    const std::string csv = to_csv(h);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "freq_mhz,amp,phase_rad,amp_sigma,phase_sigma");
    const auto back = transfer_from_csv(csv);
    EXPECT_EQ(to_csv(back), csv);
    for (std::size_t i = 0; i < pts.size(); ++i)
      EXPECT_NEAR(back.samples().points[i].amp, pts[i].amp, 1e-8);
  }
  EXPECT_THROW(transfer_from_csv("f,a\n1,2\n"), ValidationError);
}
