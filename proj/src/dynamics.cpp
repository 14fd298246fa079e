#include "morphnmpc/dynamics.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace morphnmpc {

RomVector RomState::flatten() const {
  RomVector x;
  x << p_b, theta_b, q_a, v_b, omega_b, qd_a;
  return x;
}

RomState RomState::unflatten(const RomVector& x) {
  RomState s;
  s.p_b = x.segment<3>(idx::kPos);
  s.theta_b = x.segment<3>(idx::kEuler);
  s.q_a = x.segment<4>(idx::kJoint);
  s.v_b = x.segment<3>(idx::kVel);
  s.omega_b = x.segment<3>(idx::kOmega);
  s.qd_a = x.segment<4>(idx::kJointRate);
  return s;
}

InputVector ControlInput::flatten() const {
  InputVector u;
  u << thrusts, joint_acc;
  return u;
}

ControlInput ControlInput::unflatten(const InputVector& u) {
  return ControlInput{u.head<4>(), u.tail<4>()};
}

void RobotParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (!(m_b > 0.0)) fail("m_b must be positive");
  if (!(m_l >= 0.0)) fail("m_l must be non-negative");
  if (!I_b.allFinite() || !I_b.isApprox(I_b.transpose(), 1e-12)) fail("I_b must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(I_b);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) fail("I_b must be positive definite");
  if (!(L_leg > 0.0)) fail("L_leg must be positive");
  if (!std::isfinite(q_nominal)) fail("q_nominal must be finite");
  if (!(c_m >= 0.0)) fail("c_m must be non-negative");
  for (int k = 0; k < kNumRotors; ++k) {
    if (std::abs(std::abs(spin_dirs(k)) - 1.0) > 0.0) fail("spin_dirs entries must be +1 or -1");
    if (!hip_offsets[static_cast<std::size_t>(k)].allFinite()) fail("hip_offsets must be finite");
  }
  if (spin_dirs.sum() != 0.0) fail("spin_dirs must sum to zero");
  if ((drag_lin.array() < 0.0).any() || (drag_ang.array() < 0.0).any()) fail("drag coefficients must be non-negative");
  if (!(g > 0.0)) fail("g must be positive");
}

Mat3 euler_rate_matrix(const Vec3& theta_b) { return euler_rate_matrix<double>(theta_b); }

ThrusterGeometry thruster_geometry(const Vec4& q_a, const RobotParams& params) {
  ThrusterGeometry out;
  for (int k = 0; k < kNumRotors; ++k) {
    auto& frame = out[static_cast<std::size_t>(k)];
    detail::leg_thruster<double>(params, k, q_a(k), frame.position, frame.direction);
  }
  return out;
}

Wrench net_wrench(const Vec4& q_a, const Vec4& thrusts, const RobotParams& params) {
  Wrench w;
  detail::thruster_wrench_body<double>(params, q_a, thrusts, w.force, w.torque);
  return w;
}

Wrench drag_wrench(const Vec3& v_b, const Vec3& omega_b, const RobotParams& params) {
  return Wrench{-params.drag_lin.cwiseProduct(v_b), -params.drag_ang.cwiseProduct(omega_b)};
}

RomVector rom_dynamics(const RomVector& x, const InputVector& u, const RobotParams& params) {
  return detail::rom_rhs<double>(x, u, params);
}

RomVector rom_dynamics(const RomState& x, const ControlInput& u, const RobotParams& params) {
  return rom_dynamics(x.flatten(), u.flatten(), params);
}

Eigen::Matrix<double, kRomStateDim, kRomStateDim + kInputDim> rom_jacobian(const RomVector& x, const InputVector& u,
                                                                          const RobotParams& params) {
  constexpr int kVars = kRomStateDim + kInputDim;
  using Deriv = Eigen::Matrix<double, kVars, 1>;
  using AD = Eigen::AutoDiffScalar<Deriv>;
  Eigen::Matrix<AD, kRomStateDim, 1> xa;
  Eigen::Matrix<AD, kInputDim, 1> ua;
  for (int i = 0; i < kRomStateDim; ++i) xa(i) = AD(x(i), kVars, i);
  for (int i = 0; i < kInputDim; ++i) ua(i) = AD(u(i), kVars, kRomStateDim + i);
  const auto f = detail::rom_rhs<AD>(xa, ua, params);
  Eigen::Matrix<double, kRomStateDim, kVars> jac;
  for (int i = 0; i < kRomStateDim; ++i) jac.row(i) = f(i).derivatives().transpose();
  return jac;
}

}  // namespace morphnmpc
