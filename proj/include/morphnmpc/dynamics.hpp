#pragma once

// Reduced-order prediction model: one rigid body whose thrusters ride on four
// sagittal legs. Posture moves the rotors and tilts their thrust axes, which is
// what gives the controller thrust-vectoring authority.

#include <Eigen/Core>

#include <array>
#include <cmath>

#include "morphnmpc/rotation.hpp"
#include "morphnmpc/types.hpp"

namespace morphnmpc {

struct ThrusterFrame {
  Vec3 position;   // body frame [m]
  Vec3 direction;  // unit thrust axis, body frame
};

using ThrusterGeometry = std::array<ThrusterFrame, kNumRotors>;

Mat3 euler_rate_matrix(const Vec3& theta_b);

ThrusterGeometry thruster_geometry(const Vec4& q_a, const RobotParams& params);

/// Thruster wrench. Unlike Wrench's usual convention both parts are body frame here;
/// callers rotate the force into the world.
Wrench net_wrench(const Vec4& q_a, const Vec4& thrusts, const RobotParams& params);

Wrench drag_wrench(const Vec3& v_b, const Vec3& omega_b, const RobotParams& params);

RomVector rom_dynamics(const RomVector& x, const InputVector& u, const RobotParams& params);
RomVector rom_dynamics(const RomState& x, const ControlInput& u, const RobotParams& params);

/// d(rom_dynamics)/d[x, u] as a 20 x 28 matrix, by forward-mode AD.
Eigen::Matrix<double, kRomStateDim, kRomStateDim + kInputDim> rom_jacobian(const RomVector& x, const InputVector& u,
                                                                          const RobotParams& params);

namespace detail {

template <typename T>
void leg_thruster(const RobotParams& p, int k, const T& q, Eigen::Matrix<T, 3, 1>& pos,
                  Eigen::Matrix<T, 3, 1>& dir) {
  using std::cos;
  using std::sin;
  const double s = p.leg_sign(k);
  const Vec3& hip = p.hip_offsets[static_cast<std::size_t>(k)];
  pos << T(hip.x()) + p.L_leg * s * sin(q), T(hip.y()), T(hip.z()) - p.L_leg * cos(q);
  const T tilt = q - p.q_nominal;
  dir << -s * sin(tilt), T(0.0), cos(tilt);
}

template <typename T>
void thruster_wrench_body(const RobotParams& p, const Eigen::Matrix<T, 4, 1>& q_a,
                          const Eigen::Matrix<T, 4, 1>& thrusts, Eigen::Matrix<T, 3, 1>& force,
                          Eigen::Matrix<T, 3, 1>& torque) {
  force.setZero();
  torque.setZero();
  Eigen::Matrix<T, 3, 1> pos, dir;
  for (int k = 0; k < kNumRotors; ++k) {
    leg_thruster(p, k, q_a(k), pos, dir);
    const Eigen::Matrix<T, 3, 1> f = thrusts(k) * dir;
    force += f;
    torque += pos.cross(f) + (p.spin_dirs(k) * p.c_m) * f;
  }
}

template <typename T>
Eigen::Matrix<T, kRomStateDim, 1> rom_rhs(const Eigen::Matrix<T, kRomStateDim, 1>& x,
                                          const Eigen::Matrix<T, kInputDim, 1>& u, const RobotParams& p) {
  using V3 = Eigen::Matrix<T, 3, 1>;
  using V4 = Eigen::Matrix<T, 4, 1>;
  const V3 euler = x.template segment<3>(idx::kEuler);
  const V4 q_a = x.template segment<4>(idx::kJoint);
  const V3 v = x.template segment<3>(idx::kVel);
  const V3 w = x.template segment<3>(idx::kOmega);

  V3 f_body, tau;
  thruster_wrench_body<T>(p, q_a, u.template head<4>(), f_body, tau);

  const Mat3 inertia = p.rom_inertia();
  const Eigen::Matrix<T, 3, 3> I = inertia.template cast<T>();
  const Eigen::Matrix<T, 3, 3> I_inv = inertia.inverse().template cast<T>();

  V3 f_world = rotation_matrix<T>(euler) * f_body;
  for (int i = 0; i < 3; ++i) {
    f_world(i) -= p.drag_lin(i) * v(i);
    tau(i) -= p.drag_ang(i) * w(i);
  }
  const double m = p.m_net();

  Eigen::Matrix<T, kRomStateDim, 1> xd;
  xd.template segment<3>(idx::kPos) = v;
  xd.template segment<3>(idx::kEuler) = euler_rate_matrix<T>(euler) * w;
  xd.template segment<4>(idx::kJoint) = x.template segment<4>(idx::kJointRate);
  xd.template segment<3>(idx::kVel) = f_world / m;
  xd(idx::kVel + 2) -= p.g;
  xd.template segment<3>(idx::kOmega) = I_inv * (tau - w.cross(I * w));
  xd.template segment<4>(idx::kJointRate) = u.template tail<4>();
  return xd;
}

}  // namespace detail
}  // namespace morphnmpc
