#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <random>

#include "morphnmpc/types.hpp"

namespace testutil {

using namespace morphnmpc;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

template <typename A, typename B>
double rel_err(const A& a, const B& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

// Z-Y-X Euler angles of a rotation matrix, for |pitch| < pi/2.
inline Vec3 euler_of(const Mat3& R) {
  return Vec3(std::atan2(R(2, 1), R(2, 2)), -std::asin(R(2, 0)), std::atan2(R(1, 0), R(0, 0)));
}

// Independent construction of Rz(yaw) Ry(pitch) Rx(roll) from axis rotations.
inline Mat3 rotation_of(const Vec3& euler) {
  return (Eigen::AngleAxisd(euler(2), Vec3::UnitZ()) * Eigen::AngleAxisd(euler(1), Vec3::UnitY()) *
          Eigen::AngleAxisd(euler(0), Vec3::UnitX()))
      .toRotationMatrix();
}

inline RomState hover_state(const RobotParams& p, double z = 10.0) {
  RomState s;
  s.p_b = Vec3(0.0, 0.0, z);
  s.q_a = p.nominal_posture();
  return s;
}

inline RomState random_state(std::mt19937& rng, const RobotParams& p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RomState s;
  s.p_b = Vec3(u(rng), u(rng), 10.0 + u(rng));
  s.theta_b = 0.5 * Vec3(u(rng), u(rng), 3.0 * u(rng));
  s.q_a = p.nominal_posture() + 0.4 * Vec4(u(rng), u(rng), u(rng), u(rng));
  s.v_b = Vec3(u(rng), u(rng), u(rng));
  s.omega_b = Vec3(u(rng), u(rng), u(rng));
  s.qd_a = 0.5 * Vec4(u(rng), u(rng), u(rng), u(rng));
  return s;
}

}  // namespace testutil
