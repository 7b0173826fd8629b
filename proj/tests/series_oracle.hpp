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

// Test-only reference: the matrix exponential by its truncated power series,
// independent of the closed-form Rodrigues evaluation.

#include "qvna/so3.hpp"

namespace qvna::oracle {

inline Matrix3 series_exponential(const RotationRate& rate, double t, int terms = 50) {
  const Matrix3 a = hat(rate.vec()) * t;
  // Scaling and squaring keeps the terms of a large-angle series bounded.
  int squarings = 0;
  double norm = a.norm();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Matrix3 scaled = a / std::ldexp(1.0, squarings);
  Matrix3 sum = Matrix3::Identity();
  Matrix3 term = Matrix3::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace qvna::oracle
