#pragma once

// Euler-Lagrange plant: a rigid main body plus three point masses on each leg.
// Generalized coordinates are q = (p_b, theta_b, q_a) and the velocities are
// their plain time derivatives, so the rotational block of M(q) is
// E(theta)^T I_b E(theta) with omega_b = E(theta) theta_dot.

#include <Eigen/Core>

#include <array>

#include "morphnmpc/types.hpp"

namespace morphnmpc {

inline constexpr int kGenDim = 10;
inline constexpr int kPointsPerLeg = 3;
inline constexpr int kNumPoints = kNumRotors * kPointsPerLeg;

using GenVector = Eigen::Matrix<double, kGenDim, 1>;
using GenMatrix = Eigen::Matrix<double, kGenDim, kGenDim>;
using PointJacobian = Eigen::Matrix<double, 3, kGenDim>;
using HfVector = Eigen::Matrix<double, 2 * kGenDim, 1>;
using InputMatrix = Eigen::Matrix<double, kGenDim, kInputDim>;

struct HfParams : RobotParams {
  // Positions along each leg as fractions of L_leg, and each point's share of m_l.
  std::array<double, kPointsPerLeg> point_fractions{0.3, 0.6, 1.0};
  std::array<double, kPointsPerLeg> point_shares{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  double point_mass(int i) const { return m_l * point_shares[static_cast<std::size_t>(i)]; }
  void validate() const;
  bool operator==(const HfParams&) const = default;
};

struct HfState {
  GenVector q = GenVector::Zero();
  GenVector qd = GenVector::Zero();

  HfVector flatten() const;
  static HfState unflatten(const HfVector& x);

  /// theta_dot = J(theta) omega_b; throws GimbalLockError near |pitch| = pi/2.
  static HfState from_rom(const RomState& s);
  RomState to_rom() const;
};

struct PointKinematics {
  std::array<Vec3, kNumPoints> positions;  // world frame; index = leg * 3 + point
  std::array<PointJacobian, kNumPoints> jacobians;
  Vec3 body_position;
  PointJacobian body_angular_jacobian;  // omega_b = this * qd
};

PointKinematics point_kinematics(const GenVector& q, const HfParams& params);

/// World position of rotor k's thrust point and its Jacobian.
std::pair<Vec3, PointJacobian> thruster_point(const GenVector& q, int k, const HfParams& params);

/// Throws SingularConfigurationError when the floating-base block is ill-conditioned
/// (condition number above 1e12, e.g. close to gimbal lock).
GenMatrix mass_matrix(const GenVector& q, const HfParams& params);

GenVector gravity_vector(const GenVector& q, const HfParams& params);

/// C(q, qd) qd + g(q). The Coriolis part uses Christoffel symbols of a
/// finite-differenced M (step 1e-6).
GenVector bias_and_gravity(const GenVector& q, const GenVector& qd, const HfParams& params);

/// C(q, qd) from the Christoffel symbols of the finite-differenced M, so that
/// C qd equals the Coriolis part of bias_and_gravity and Mdot - 2C is skew.
GenMatrix coriolis_matrix(const GenVector& q, const GenVector& qd, const HfParams& params);

/// Columns 0-3: rotor thrusts, including the reaction moment. Columns 4-7:
/// sagittal joint torques.
InputMatrix input_matrix(const GenVector& q, const HfParams& params);

GenVector drag_generalized(const GenVector& q, const GenVector& qd, const HfParams& params);

/// Torque-driven Lagrangian dynamics: M qdd = B [T; tau] + Q_drag - C qd - g.
HfVector hf_dynamics_torque(const HfVector& x, const Vec4& thrusts, const Vec4& joint_torques,
                            const HfParams& params, bool with_drag = true);

/// Plant dynamics with ideal joint servos: the joint rows follow u.joint_acc
/// exactly and the floating base responds through the coupled dynamics.
HfVector hf_dynamics(const HfVector& x, const InputVector& u, const HfParams& params, bool with_drag = true);

/// Sagittal torques the servos must apply to realize u.joint_acc.
Vec4 servo_torques(const HfVector& x, const InputVector& u, const HfParams& params, bool with_drag = true);

double total_energy(const HfVector& x, const HfParams& params);

/// Leg point-mass inertia about the body origin at the nominal posture.
Mat3 nominal_leg_inertia(const HfParams& params);

/// RobotParams for the prediction model, optionally with the legs' nominal
/// inertia lumped into the rigid body.
RobotParams prediction_params(const HfParams& params, bool include_leg_inertia);

}  // namespace morphnmpc
