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

#include <cmath>
#include <numbers>

namespace qvna {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Frequencies at the public surface are cyclic MHz; rotation rates inside the
// kinematics and dynamics code are rad/us. These two helpers are the only
// place the factor 2*pi is applied.
constexpr double to_angular(double cyclic_mhz) { return kTwoPi * cyclic_mhz; }
constexpr double to_cyclic(double rad_per_us) { return rad_per_us / kTwoPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double phase) {
  double w = std::remainder(phase, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

}  // namespace qvna
