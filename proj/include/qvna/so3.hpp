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

// Rotation algebra on Bloch vectors. Generators follow the right-handed
// convention L_z x = y, so exp(t (w . L)) v solves dv/dt = w x v.

#include <Eigen/Core>
#include <cmath>

namespace qvna {

using Matrix3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Vec3 = Eigen::Vector3d;

enum class Axis { X, Y, Z };

/// Pauli expectation values (<sx>, <sy>, <sz>).
struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  static BlochVector from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double component(Axis a) const {
    return a == Axis::X ? x : (a == Axis::Y ? y : z);
  }
  friend bool operator==(const BlochVector&, const BlochVector&) = default;
};

inline constexpr BlochVector kGroundState{0.0, 0.0, -1.0};
inline constexpr double kNormSlack = 1e-9;

/// Angular rotation rate in rad/us.
struct RotationRate {
  double wx = 0.0;
  double wy = 0.0;
  double wz = 0.0;

  Vec3 vec() const { return {wx, wy, wz}; }
  static RotationRate from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  double norm() const { return std::sqrt(wx * wx + wy * wy + wz * wz); }
  friend bool operator==(const RotationRate&, const RotationRate&) = default;
};

inline Matrix3 generator(Axis axis) {
  Matrix3 m = Matrix3::Zero();
  switch (axis) {
    case Axis::X:
      m(1, 2) = -1.0;
      m(2, 1) = 1.0;
      break;
    case Axis::Y:
      m(0, 2) = 1.0;
      m(2, 0) = -1.0;
      break;
    case Axis::Z:
      m(0, 1) = -1.0;
      m(1, 0) = 1.0;
      break;
  }
  return m;
}

/// w . L, the cross-product matrix of w.
inline Matrix3 hat(const Vec3& w) {
  Matrix3 m;
  m << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return m;
}

/// exp(t (rate . L)) by the Rodrigues formula; a third-order series is used
/// below a rotation angle of 1e-6 where sin(a)/a loses precision.
inline Matrix3 rotation_matrix(const RotationRate& rate, double t) {
  const Vec3 w = rate.vec() * t;
  const double angle = w.norm();
  const Matrix3 k = hat(w);
  if (angle < 1e-6) {
    return Matrix3::Identity() + k + 0.5 * k * k + (k * k * k) / 6.0;
  }
  const double s = std::sin(angle) / angle;
  const double c = (1.0 - std::cos(angle)) / (angle * angle);
  return Matrix3::Identity() + s * k + c * k * k;
}

inline BlochVector rotate(const RotationRate& rate, double t,
                          const BlochVector& v0) {
  return BlochVector::from(rotation_matrix(rate, t) * v0.vec());
}

/// exp(angle L_axis) v.
inline BlochVector rotate_about_axis(Axis axis, double angle,
                                     const BlochVector& v) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  switch (axis) {
    case Axis::X:
      return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
    case Axis::Y:
      return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
    case Axis::Z:
      return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
  }
  return v;
}

}  // namespace qvna
