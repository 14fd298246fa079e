#pragma once

#include <Eigen/Core>

#include <array>
#include <numbers>
#include <stdexcept>
#include <string>

namespace morphnmpc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kRomStateDim = 20;
inline constexpr int kInputDim = 8;
inline constexpr int kNumRotors = 4;

using RomVector = Eigen::Matrix<double, kRomStateDim, 1>;
using InputVector = Eigen::Matrix<double, kInputDim, 1>;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Offsets into the flattened 20-vector.
namespace idx {
inline constexpr int kPos = 0;
inline constexpr int kEuler = 3;  // roll, pitch, yaw
inline constexpr int kJoint = 6;
inline constexpr int kVel = 10;
inline constexpr int kOmega = 13;
inline constexpr int kJointRate = 16;
inline constexpr int kRoll = kEuler;
inline constexpr int kPitch = kEuler + 1;
inline constexpr int kYaw = kEuler + 2;
}  // namespace idx

/// Thrown when the Z-Y-X Euler-rate map is evaluated too close to |pitch| = pi/2.
class GimbalLockError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when the high-fidelity mass matrix is numerically singular.
class SingularConfigurationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown by the integrators when a stage evaluates to NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter / configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Reduced-order state. Legs are ordered front-left, front-right, rear-left,
 * rear-right. Euler angles are stored (roll, pitch, yaw) and composed Z-Y-X.
 */
struct RomState {
  Vec3 p_b = Vec3::Zero();      // world position [m]
  Vec3 theta_b = Vec3::Zero();  // roll, pitch, yaw [rad]
  Vec4 q_a = Vec4::Zero();      // hip sagittal angles [rad]
  Vec3 v_b = Vec3::Zero();      // world linear velocity [m/s]
  Vec3 omega_b = Vec3::Zero();  // body angular velocity [rad/s]
  Vec4 qd_a = Vec4::Zero();     // joint rates [rad/s]

  RomVector flatten() const;
  static RomState unflatten(const RomVector& x);

  bool operator==(const RomState&) const = default;
};

struct ControlInput {
  Vec4 thrusts = Vec4::Zero();    // [N], >= 0
  Vec4 joint_acc = Vec4::Zero();  // [rad/s^2]

  InputVector flatten() const;
  static ControlInput unflatten(const InputVector& u);

  bool operator==(const ControlInput&) const = default;
};

/// Force in the world frame, torque in the body frame.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

/**
 * Physical parameters shared by the prediction model and the plant.
 *
 * Leg k hangs from hip_offsets[k]; at joint angle q its tip (the thruster) sits
 * at hip + L_leg * (s_k sin q, 0, -cos q), s_k = +1 for front legs and -1 for
 * rear legs, so q = 0 points the leg straight down and q = pi/2 extends it
 * horizontally outward. The thrust axis is rigidly attached to the leg and
 * equals body +z at q = q_nominal.
 */
struct RobotParams {
  double m_b = 4.8;
  double m_l = 0.3;
  Mat3 I_b = Eigen::Vector3d(0.08, 0.13, 0.15).asDiagonal();
  std::array<Vec3, kNumRotors> hip_offsets{Vec3(0.16, 0.225, 0.0), Vec3(0.16, -0.225, 0.0),
                                           Vec3(-0.16, 0.225, 0.0), Vec3(-0.16, -0.225, 0.0)};
  // 0.16 + L sin(45 deg) = 0.225 puts the fore/aft rotor spacing at 0.45 m.
  double L_leg = 0.065 * std::numbers::sqrt2;
  double q_nominal = std::numbers::pi / 4.0;
  double c_m = 0.02;
  Vec4 spin_dirs = Vec4(1.0, -1.0, -1.0, 1.0);
  Vec3 drag_lin = Vec3(1.0, 1.0, 1.0);
  Vec3 drag_ang = Vec3(0.1, 0.1, 0.1);
  double g = 9.81;

  // Leg point-mass inertia folded into the prediction model's rigid body.
  // Zero for a pure main-body model; see prediction_params().
  Mat3 I_legs = Mat3::Zero();

  double m_net() const { return m_b + 4.0 * m_l; }
  double hover_thrust() const { return m_net() * g / 4.0; }
  Mat3 rom_inertia() const { return I_b + I_legs; }
  /// Sign of the hip x offset: +1 front, -1 rear.
  double leg_sign(int k) const { return hip_offsets[static_cast<std::size_t>(k)].x() >= 0.0 ? 1.0 : -1.0; }
  Vec4 nominal_posture() const { return Vec4::Constant(q_nominal); }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
  bool operator==(const RobotParams&) const = default;
};

}  // namespace morphnmpc
