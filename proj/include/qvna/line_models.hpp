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

// Transfer functions of the z control line: parametric ground-truth models,
// sampled estimates, cascading and de-embedding.
//
// Frequencies are cyclic MHz; delays are ns, so a phase 2 pi f tau carries a
// factor 1e-3.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qvna/error.hpp"
#include "qvna/text.hpp"
#include "qvna/units.hpp"

namespace qvna {

using Complex = std::complex<double>;

inline constexpr double kMhzNs = 1e-3;  // cycles per (MHz * ns)
inline constexpr double kDivisionFloor = 1e-6;

struct SamplePoint {
  double freq_mhz = 0.0;
  double amp = 0.0;
  double phase = 0.0;
  double amp_sigma = 0.0;
  double phase_sigma = 0.0;

  Complex value() const { return std::polar(amp, phase); }
};

/// Amplitude and phase at one frequency. A phase is undefined where the
/// response vanishes exactly.
struct Response {
  double amp = 0.0;
  double phase = 0.0;
  bool phase_defined = true;

  Complex value() const { return std::polar(amp, phase); }
};

struct StubParams {
  double electrical_delay_ns = 10.0;
  double impedance_ratio = 1.0;
  double loss_db_per_ns = 0.0;

  void validate() const {
    if (!(electrical_delay_ns > 0.0) || !std::isfinite(electrical_delay_ns))
      throw DomainError("stub: electrical_delay must be > 0");
    if (!(impedance_ratio > 0.0) || !std::isfinite(impedance_ratio))
      throw DomainError("stub: impedance_ratio must be > 0");
    if (!(loss_db_per_ns >= 0.0) || !std::isfinite(loss_db_per_ns))
      throw DomainError("stub: loss must be >= 0");
  }
  // One-way attenuation of the stub in nepers.
  double attenuation_np() const {
    return loss_db_per_ns * electrical_delay_ns * std::log(10.0) / 20.0;
  }
};

class TransferFunction {
 public:
  using Evaluator = std::function<Response(double)>;

  struct Parametric {
    std::string model;
    std::map<std::string, double> params;
    Evaluator eval;
  };
  struct Sampled {
    std::vector<SamplePoint> points;
  };

  static TransferFunction parametric(std::string model,
                                     std::map<std::string, double> params,
                                     Evaluator eval) {
    TransferFunction h;
    h.repr_ = Parametric{std::move(model), std::move(params), std::move(eval)};
    return h;
  }

  static TransferFunction sampled(std::vector<SamplePoint> points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!(p.freq_mhz > 0.0) || !std::isfinite(p.freq_mhz))
        throw DomainError("sampled transfer function: frequencies must be > 0");
      if (i > 0 && !(p.freq_mhz > points[i - 1].freq_mhz))
        throw DomainError("sampled transfer function: frequencies must increase");
      if (!(p.amp >= 0.0)) throw DomainError("sampled transfer function: amp < 0");
    }
    TransferFunction h;
    h.repr_ = Sampled{std::move(points)};
    return h;
  }

  bool is_sampled() const { return std::holds_alternative<Sampled>(repr_); }
  const Sampled& samples() const {
    if (!is_sampled()) throw UsageError("transfer function is not sampled");
    return std::get<Sampled>(repr_);
  }
  const Parametric& model() const {
    if (is_sampled()) throw UsageError("transfer function is not parametric");
    return std::get<Parametric>(repr_);
  }

  std::vector<double> frequencies() const {
    std::vector<double> f;
    for (const auto& p : samples().points) f.push_back(p.freq_mhz);
    return f;
  }

  /// Response at f. Sampled responses interpolate linearly in amplitude and
  /// unwrapped phase between neighbours and never extrapolate.
  Response at(double f_mhz) const {
    if (const auto* p = std::get_if<Parametric>(&repr_)) return p->eval(f_mhz);
    const auto& pts = std::get<Sampled>(repr_).points;
    if (pts.empty() || f_mhz < pts.front().freq_mhz * (1 - 1e-12) ||
        f_mhz > pts.back().freq_mhz * (1 + 1e-12))
      throw CoverageError("frequency " + format_number(f_mhz) +
                          " MHz outside the sampled coverage");
    auto it = std::lower_bound(pts.begin(), pts.end(), f_mhz,
                               [](const SamplePoint& s, double f) { return s.freq_mhz < f; });
    if (it == pts.end()) it = std::prev(it);
    if (std::abs(it->freq_mhz - f_mhz) <= 1e-12 * f_mhz || it == pts.begin())
      return {it->amp, it->phase, true};
    const auto& hi = *it;
    const auto& lo = *std::prev(it);
    const double w = (f_mhz - lo.freq_mhz) / (hi.freq_mhz - lo.freq_mhz);
    const double dphi = wrap_phase(hi.phase - lo.phase);
    return {lo.amp + w * (hi.amp - lo.amp), wrap_phase(lo.phase + w * dphi), true};
  }

  Complex value(double f_mhz) const { return at(f_mhz).value(); }

  /// Samples this response on a frequency grid (zero uncertainties for
  /// parametric models).
  TransferFunction sample_on(const std::vector<double>& freqs) const {
    std::vector<SamplePoint> pts;
    pts.reserve(freqs.size());
    for (double f : freqs) {
      const Response r = at(f);
      pts.push_back({f, r.amp, r.phase, 0.0, 0.0});
    }
    return sampled(std::move(pts));
  }

 private:
  std::variant<Parametric, Sampled> repr_;
};

inline Response response_from(Complex h) {
  const double amp = std::abs(h);
  return {amp, amp > 0.0 ? wrap_phase(std::arg(h)) : 0.0, amp > 0.0};
}

inline TransferFunction unity_line() {
  return TransferFunction::parametric("unity", {}, [](double) { return Response{1.0, 0.0, true}; });
}

inline TransferFunction delay_line(double tau_ns) {
  if (!std::isfinite(tau_ns)) throw DomainError("delay_line: tau must be finite");
  return TransferFunction::parametric("delay", {{"tau_ns", tau_ns}}, [tau_ns](double f) {
    return Response{1.0, wrap_phase(-kTwoPi * f * tau_ns * kMhzNs), true};
  });
}

/// Transmission past a shunt short-circuited stub on a matched line,
///   S21 = 2 r tanh(g) / (1 + 2 r tanh(g)),  g = a + j 2 pi f tau_e,
/// which reduces to 2jr tan / (1 + 2jr tan) without loss.
inline Complex shorted_stub_s21(const StubParams& p, double f_mhz) {
  const double beta = kTwoPi * f_mhz * p.electrical_delay_ns * kMhzNs;
  const double a = p.attenuation_np();
  const double r = p.impedance_ratio;
  if (a == 0.0) {
    const double t = std::tan(beta);
    const Complex z(0.0, 2.0 * r * t);
    return z / (1.0 + z);
  }
  const Complex th = std::tanh(Complex(a, beta));
  return 2.0 * r * th / (1.0 + 2.0 * r * th);
}

inline TransferFunction shorted_stub(const StubParams& p) {
  p.validate();
  return TransferFunction::parametric(
      "stub",
      {{"electrical_delay_ns", p.electrical_delay_ns},
       {"impedance_ratio", p.impedance_ratio},
       {"loss_db_per_ns", p.loss_db_per_ns}},
      [p](double f) -> Response {
        if (p.loss_db_per_ns == 0.0) {
          // Notches at f = n / (2 tau_e).
          const double cycles = 2.0 * f * p.electrical_delay_ns * kMhzNs;
          if (std::abs(cycles - std::round(cycles)) < 1e-12 * std::max(1.0, cycles))
            return {0.0, 0.0, false};
        }
        return response_from(shorted_stub_s21(p, f));
      });
}

/// Loss setting that limits the stub notch depth to `depth_db` below unity.
inline double stub_loss_for_notch_depth(double depth_db, double impedance_ratio,
                                        double electrical_delay_ns) {
  const double d = std::pow(10.0, -depth_db / 20.0);
  const double th = d / (2.0 * impedance_ratio * (1.0 - d));
  if (!(th < 1.0)) throw DomainError("stub_loss_for_notch_depth: depth unreachable");
  return std::atanh(th) * 20.0 / (std::log(10.0) * electrical_delay_ns);
}

inline TransferFunction first_order_lowpass(double fc_mhz) {
  if (!(fc_mhz > 0.0)) throw DomainError("first_order_lowpass: fc must be > 0");
  return TransferFunction::parametric("lowpass", {{"fc_mhz", fc_mhz}}, [fc_mhz](double f) {
    return response_from(1.0 / Complex(1.0, f / fc_mhz));
  });
}

namespace detail {

inline bool same_frequency(double a, double b) {
  return std::abs(a - b) <= 1e-8 * std::max(std::abs(a), std::abs(b));
}

inline void require_common_grid(const std::vector<SamplePoint>& a,
                                const std::vector<SamplePoint>& b) {
  std::string diffs;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= a.size() || i >= b.size() || !same_frequency(a[i].freq_mhz, b[i].freq_mhz)) {
      if (!diffs.empty()) diffs += ", ";
      diffs += i < a.size() ? format_number(a[i].freq_mhz) : "-";
      diffs += "/";
      diffs += i < b.size() ? format_number(b[i].freq_mhz) : "-";
    }
  }
  if (!diffs.empty())
    throw GridError("sampled transfer functions differ in frequency grid: " + diffs);
}

// Brings two operands onto a common sampled grid; parametric operands are
// evaluated on the other's grid.
inline std::pair<std::vector<SamplePoint>, std::vector<SamplePoint>> align(
    const TransferFunction& a, const TransferFunction& b) {
  if (a.is_sampled() && b.is_sampled()) {
    require_common_grid(a.samples().points, b.samples().points);
    return {a.samples().points, b.samples().points};
  }
  if (a.is_sampled()) return {a.samples().points, b.sample_on(a.frequencies()).samples().points};
  return {a.sample_on(b.frequencies()).samples().points, b.samples().points};
}

}  // namespace detail

/// Pointwise product; amplitudes multiply, phases add.
inline TransferFunction cascade(const TransferFunction& a, const TransferFunction& b) {
  if (!a.is_sampled() && !b.is_sampled()) {
    std::map<std::string, double> params;
    for (const auto& [k, v] : a.model().params) params["a." + k] = v;
    for (const auto& [k, v] : b.model().params) params["b." + k] = v;
    return TransferFunction::parametric(
        "cascade(" + a.model().model + "," + b.model().model + ")", std::move(params),
        [a, b](double f) {
          const Response ra = a.at(f), rb = b.at(f);
          return Response{ra.amp * rb.amp, wrap_phase(ra.phase + rb.phase),
                          ra.phase_defined && rb.phase_defined};
        });
  }
  auto [pa, pb] = detail::align(a, b);
  std::vector<SamplePoint> out;
  out.reserve(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto& x = pa[i];
    const auto& y = pb[i];
    out.push_back({x.freq_mhz, x.amp * y.amp, wrap_phase(x.phase + y.phase),
                   std::hypot(x.amp_sigma * y.amp, x.amp * y.amp_sigma),
                   std::hypot(x.phase_sigma, y.phase_sigma)});
  }
  return TransferFunction::sampled(std::move(out));
}

/// Pointwise complex ratio with_element / baseline. Uncertainties combine in
/// quadrature on log-amplitude and phase.
inline TransferFunction de_embed(const TransferFunction& with_element,
                                 const TransferFunction& baseline,
                                 double floor = kDivisionFloor) {
  if (!with_element.is_sampled() && !baseline.is_sampled()) {
    return TransferFunction::parametric(
        "de_embed(" + with_element.model().model + "," + baseline.model().model + ")", {},
        [with_element, baseline, floor](double f) {
          const Response rb = baseline.at(f);
          if (rb.amp < floor)
            throw DivisionFloorError("baseline amplitude below floor at " +
                                     format_number(f) + " MHz");
          const Response ra = with_element.at(f);
          return Response{ra.amp / rb.amp, wrap_phase(ra.phase - rb.phase),
                          ra.phase_defined};
        });
  }
  auto [pa, pb] = detail::align(with_element, baseline);
  std::string offending;
  for (const auto& p : pb) {
    if (p.amp < floor) {
      if (!offending.empty()) offending += ", ";
      offending += format_number(p.freq_mhz);
    }
  }
  if (!offending.empty())
    throw DivisionFloorError("baseline amplitude below floor at MHz: " + offending);
  std::vector<SamplePoint> out;
  out.reserve(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto& x = pa[i];
    const auto& y = pb[i];
    const double amp = x.amp / y.amp;
    out.push_back({x.freq_mhz, amp, wrap_phase(x.phase - y.phase),
                   std::hypot(x.amp_sigma / y.amp, amp * y.amp_sigma / y.amp),
                   std::hypot(x.phase_sigma, y.phase_sigma)});
  }
  return TransferFunction::sampled(std::move(out));
}

struct LineDrive {
  double az_eff = 0.0;
  double phiz_eff = 0.0;
};

/// The drive that reaches the qubit when (a_prog, phi_prog) is programmed at
/// frequency f.
inline LineDrive apply_line(const TransferFunction& h, double f_mhz, double a_prog,
                            double phi_prog) {
  const Response r = h.at(f_mhz);
  return {r.amp * a_prog, wrap_phase(phi_prog + (r.phase_defined ? r.phase : 0.0))};
}

struct DelayFit {
  TransferFunction residual;
  double tau_ns = 0.0;
  double tau_sigma_ns = 0.0;
  double intercept = 0.0;
  bool unwrap_warning = false;
};

// Points whose phase uncertainty exceeds this are left out of the delay fit.
inline constexpr double kDelayFitMaxPhaseSigma = 0.5;

/// Weighted least-squares fit of unwrapped phase to -2 pi f tau + c; the
/// residual has the linear (delay) part removed and keeps the intercept.
inline DelayFit fit_and_subtract_delay(const TransferFunction& h) {
  const auto& pts = h.samples().points;
  if (pts.size() < 3) throw DomainError("fit_and_subtract_delay: needs >= 3 points");

  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].phase_sigma < kDelayFitMaxPhaseSigma) used.push_back(i);
  if (used.size() < 3) throw DomainError("fit_and_subtract_delay: too few usable points");

  // Unwrap against a linear prediction from the previous two points, which
  // tolerates steps beyond pi on sparse grids.
  std::vector<double> unwrapped(used.size());
  unwrapped[0] = pts[used[0]].phase;
  bool warning = false;
  for (std::size_t k = 1; k < used.size(); ++k) {
    const auto& p = pts[used[k]];
    double predicted = unwrapped[k - 1];
    if (k >= 2) {
      const double f0 = pts[used[k - 2]].freq_mhz, f1 = pts[used[k - 1]].freq_mhz;
      const double slope = (unwrapped[k - 1] - unwrapped[k - 2]) / (f1 - f0);
      predicted += slope * (p.freq_mhz - f1);
    }
    unwrapped[k] = predicted + wrap_phase(p.phase - predicted);
    if (std::abs(unwrapped[k] - unwrapped[k - 1]) > kPi) warning = true;
  }

  bool weighted = true;
  for (std::size_t i : used) weighted &= pts[i].phase_sigma > 0.0;
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < used.size(); ++k) {
    const double w = weighted ? 1.0 / (pts[used[k]].phase_sigma * pts[used[k]].phase_sigma) : 1.0;
    const double x = -kTwoPi * pts[used[k]].freq_mhz * kMhzNs;
    sw += w;
    sx += w * x;
    sy += w * unwrapped[k];
    sxx += w * x * x;
    sxy += w * x * unwrapped[k];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw DomainError("fit_and_subtract_delay: degenerate frequency grid");
  const double tau = (sw * sxy - sx * sy) / det;
  const double c = (sxx * sy - sx * sxy) / det;
  double tau_var = sw / det;
  if (!weighted) {
    double rss = 0;
    for (std::size_t k = 0; k < used.size(); ++k) {
      const double x = -kTwoPi * pts[used[k]].freq_mhz * kMhzNs;
      rss += std::pow(unwrapped[k] - (tau * x + c), 2);
    }
    tau_var *= used.size() > 2 ? rss / static_cast<double>(used.size() - 2) : 0.0;
  }

  std::vector<SamplePoint> out = pts;
  for (auto& p : out) p.phase = wrap_phase(p.phase + kTwoPi * p.freq_mhz * tau * kMhzNs);
  return {TransferFunction::sampled(std::move(out)), tau, std::sqrt(tau_var),
          wrap_phase(c), warning};
}

// CSV: freq_mhz,amp,phase_rad,amp_sigma,phase_sigma

inline constexpr const char* kTransferCsvHeader = "freq_mhz,amp,phase_rad,amp_sigma,phase_sigma";

inline std::string to_csv(const TransferFunction& h) {
  std::string s = std::string(kTransferCsvHeader) + "\n";
  for (const auto& p : h.samples().points) {
    s += format_number(p.freq_mhz) + "," + format_number(p.amp) + "," +
         format_number(p.phase) + "," + format_number(p.amp_sigma) + "," +
         format_number(p.phase_sigma) + "\n";
  }
  return s;
}

inline TransferFunction transfer_from_csv(const std::string& text) {
  std::vector<SamplePoint> pts;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != kTransferCsvHeader)
        throw ValidationError("transfer CSV: unexpected header '" + line + "'");
      header = false;
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 5)
      throw ValidationError("transfer CSV line " + std::to_string(lineno) + ": expected 5 fields");
    pts.push_back({parse_number(f[0]), parse_number(f[1]), parse_number(f[2]),
                   parse_number(f[3]), parse_number(f[4])});
  }
  if (header) throw ValidationError("transfer CSV: missing header");
  return TransferFunction::sampled(std::move(pts));
}

}  // namespace qvna
