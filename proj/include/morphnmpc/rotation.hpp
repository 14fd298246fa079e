#pragma once

// Z-Y-X Euler-angle utilities, templated on the scalar so the prediction model
// can be differentiated with Eigen's forward-mode AutoDiffScalar.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>

#include "morphnmpc/types.hpp"

namespace morphnmpc {

inline constexpr double kGimbalMargin = 1e-3;

inline double scalar_value(double v) { return v; }

template <typename AD>
auto scalar_value(const AD& v) -> decltype(v.value()) {
  return v.value();
}

inline void check_gimbal(double pitch) {
  if (!(std::abs(pitch) < std::numbers::pi / 2.0 - kGimbalMargin)) {
    throw GimbalLockError("pitch " + std::to_string(pitch) + " rad is within the gimbal-lock margin");
  }
}

/// Body-to-world rotation R = Rz(yaw) Ry(pitch) Rx(roll).
template <typename T>
Eigen::Matrix<T, 3, 3> rotation_matrix(const Eigen::Matrix<T, 3, 1>& euler) {
  using std::cos;
  using std::sin;
  const T cr = cos(euler(0)), sr = sin(euler(0));
  const T cp = cos(euler(1)), sp = sin(euler(1));
  const T cy = cos(euler(2)), sy = sin(euler(2));
  Eigen::Matrix<T, 3, 3> R;
  R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return R;
}

/// Maps body angular velocity to (roll, pitch, yaw) rates.
template <typename T>
Eigen::Matrix<T, 3, 3> euler_rate_matrix(const Eigen::Matrix<T, 3, 1>& euler) {
  using std::cos;
  using std::sin;
  check_gimbal(scalar_value(euler(1)));
  const T cr = cos(euler(0)), sr = sin(euler(0));
  const T cp = cos(euler(1)), sp = sin(euler(1));
  const T tp = sp / cp;
  Eigen::Matrix<T, 3, 3> J;
  J << T(1.0), sr * tp, cr * tp,
       T(0.0), cr, -sr,
       T(0.0), sr / cp, cr / cp;
  return J;
}

/// Inverse of euler_rate_matrix: omega_body = E(theta) * theta_dot. Defined everywhere.
template <typename T>
Eigen::Matrix<T, 3, 3> euler_rate_to_body(const Eigen::Matrix<T, 3, 1>& euler) {
  using std::cos;
  using std::sin;
  const T cr = cos(euler(0)), sr = sin(euler(0));
  const T cp = cos(euler(1)), sp = sin(euler(1));
  Eigen::Matrix<T, 3, 3> E;
  E << T(1.0), T(0.0), -sp,
       T(0.0), cr, sr * cp,
       T(0.0), -sr, cr * cp;
  return E;
}

template <typename T>
Eigen::Matrix<T, 3, 3> skew(const Eigen::Matrix<T, 3, 1>& v) {
  Eigen::Matrix<T, 3, 3> S;
  S << T(0.0), -v(2), v(1),
       v(2), T(0.0), -v(0),
       -v(1), v(0), T(0.0);
  return S;
}

/// Wraps an angle onto (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

}  // namespace morphnmpc
