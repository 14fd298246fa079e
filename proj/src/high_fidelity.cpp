#include "morphnmpc/high_fidelity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/rotation.hpp"

namespace morphnmpc {

namespace {

constexpr int kBase = 6;
constexpr double kChristoffelStep = 1e-6;
constexpr double kMaxCondition = 1e12;

Vec3 leg_unit(const RobotParams& p, int k, double q) {
  return Vec3(p.leg_sign(k) * std::sin(q), 0.0, -std::cos(q));
}

Vec3 leg_unit_derivative(const RobotParams& p, int k, double q) {
  return Vec3(p.leg_sign(k) * std::cos(q), 0.0, std::sin(q));
}

struct Frame {
  Mat3 R;
  Mat3 E;
};

Frame frame_of(const GenVector& q) {
  const Vec3 euler = q.segment<3>(3);
  return Frame{rotation_matrix<double>(euler), euler_rate_to_body<double>(euler)};
}

// Point fixed at `fraction` along leg k: world position and Jacobian.
void leg_point(const GenVector& q, const Frame& fr, const RobotParams& p, int k, double fraction, Vec3& x,
               PointJacobian& J) {
  const double qk = q(6 + k);
  const Vec3 r_body = p.hip_offsets[static_cast<std::size_t>(k)] + fraction * p.L_leg * leg_unit(p, k, qk);
  const Vec3 r_world = fr.R * r_body;
  x = q.head<3>() + r_world;
  J.setZero();
  J.leftCols<3>().setIdentity();
  J.block<3, 3>(0, 3) = -skew<double>(r_world) * fr.R * fr.E;
  J.col(6 + k) = fr.R * (fraction * p.L_leg * leg_unit_derivative(p, k, qk));
}

GenMatrix mass_matrix_unchecked(const GenVector& q, const HfParams& p) {
  const Frame fr = frame_of(q);
  GenMatrix M = GenMatrix::Zero();
  M.topLeftCorner<3, 3>() = p.m_b * Mat3::Identity();
  M.block<3, 3>(3, 3) = fr.E.transpose() * p.I_b * fr.E;
  Vec3 x;
  PointJacobian J;
  for (int k = 0; k < kNumRotors; ++k) {
    for (int i = 0; i < kPointsPerLeg; ++i) {
      const double m = p.point_mass(i);
      if (m == 0.0) continue;
      leg_point(q, fr, p, k, p.point_fractions[static_cast<std::size_t>(i)], x, J);
      M.noalias() += m * J.transpose() * J;
    }
  }
  return M;
}

void check_conditioning(const Eigen::Matrix<double, kBase, kBase>& M_bb) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kBase, kBase>> eig(M_bb, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    throw SingularConfigurationError("floating-base mass matrix is singular (condition " + std::to_string(hi / lo) +
                                     ")");
  }
}

}  // namespace

void HfParams::validate() const {
  RobotParams::validate();
  double total = 0.0;
  for (int i = 0; i < kPointsPerLeg; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (!(point_fractions[s] >= 0.0 && point_fractions[s] <= 1.0)) {
      throw ConfigError("leg point fractions must lie in [0, 1]");
    }
    if (!(point_shares[s] >= 0.0)) throw ConfigError("leg point mass shares must be non-negative");
    total += point_shares[s];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("leg point mass shares must sum to 1");
}

HfVector HfState::flatten() const {
  HfVector x;
  x << q, qd;
  return x;
}

HfState HfState::unflatten(const HfVector& x) { return HfState{x.head<kGenDim>(), x.tail<kGenDim>()}; }

HfState HfState::from_rom(const RomState& s) {
  HfState h;
  h.q << s.p_b, s.theta_b, s.q_a;
  h.qd << s.v_b, euler_rate_matrix<double>(s.theta_b) * s.omega_b, s.qd_a;
  return h;
}

RomState HfState::to_rom() const {
  RomState s;
  s.p_b = q.head<3>();
  s.theta_b = q.segment<3>(3);
  s.q_a = q.tail<4>();
  s.v_b = qd.head<3>();
  s.omega_b = euler_rate_to_body<double>(s.theta_b) * qd.segment<3>(3);
  s.qd_a = qd.tail<4>();
  return s;
}

PointKinematics point_kinematics(const GenVector& q, const HfParams& params) {
  const Frame fr = frame_of(q);
  PointKinematics out;
  for (int k = 0; k < kNumRotors; ++k) {
    for (int i = 0; i < kPointsPerLeg; ++i) {
      const auto n = static_cast<std::size_t>(k * kPointsPerLeg + i);
      leg_point(q, fr, params, k, params.point_fractions[static_cast<std::size_t>(i)], out.positions[n],
                out.jacobians[n]);
    }
  }
  out.body_position = q.head<3>();
  out.body_angular_jacobian.setZero();
  out.body_angular_jacobian.block<3, 3>(0, 3) = fr.E;
  return out;
}

std::pair<Vec3, PointJacobian> thruster_point(const GenVector& q, int k, const HfParams& params) {
  std::pair<Vec3, PointJacobian> out;
  leg_point(q, frame_of(q), params, k, 1.0, out.first, out.second);
  return out;
}

GenMatrix mass_matrix(const GenVector& q, const HfParams& params) {
  const GenMatrix M = mass_matrix_unchecked(q, params);
  check_conditioning(M.topLeftCorner<kBase, kBase>());
  return M;
}

GenVector gravity_vector(const GenVector& q, const HfParams& params) {
  GenVector grav = GenVector::Zero();
  grav(2) = params.m_b * params.g;
  const Frame fr = frame_of(q);
  Vec3 x;
  PointJacobian J;
  for (int k = 0; k < kNumRotors; ++k) {
    for (int i = 0; i < kPointsPerLeg; ++i) {
      const double m = params.point_mass(i);
      if (m == 0.0) continue;
      leg_point(q, fr, params, k, params.point_fractions[static_cast<std::size_t>(i)], x, J);
      grav += (m * params.g) * J.row(2).transpose();
    }
  }
  return grav;
}

GenVector bias_and_gravity(const GenVector& q, const GenVector& qd, const HfParams& params) {
  // c = Mdot qd - 1/2 d/dq (qd^T M qd). M does not depend on p_b, so only the
  // orientation and joint coordinates are differenced.
  GenVector mdot_qd = GenVector::Zero();
  GenVector half_grad = GenVector::Zero();
  for (int j = 3; j < kGenDim; ++j) {
    GenVector qp = q, qm = q;
    qp(j) += kChristoffelStep;
    qm(j) -= kChristoffelStep;
    const GenMatrix dM = (mass_matrix_unchecked(qp, params) - mass_matrix_unchecked(qm, params)) /
                         (2.0 * kChristoffelStep);
    const GenVector dM_qd = dM * qd;
    mdot_qd += qd(j) * dM_qd;
    half_grad(j) = 0.5 * qd.dot(dM_qd);
  }
  return mdot_qd - half_grad + gravity_vector(q, params);
}

GenMatrix coriolis_matrix(const GenVector& q, const GenVector& qd, const HfParams& params) {
  std::array<GenMatrix, kGenDim> dM;
  for (int j = 0; j < kGenDim; ++j) {
    if (j < 3) {
      dM[static_cast<std::size_t>(j)].setZero();
      continue;
    }
    GenVector qp = q, qm = q;
    qp(j) += kChristoffelStep;
    qm(j) -= kChristoffelStep;
    dM[static_cast<std::size_t>(j)] =
        (mass_matrix_unchecked(qp, params) - mass_matrix_unchecked(qm, params)) / (2.0 * kChristoffelStep);
  }
  // C_ij = sum_k 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_kj/dq_i) qd_k
  GenMatrix C = GenMatrix::Zero();
  for (int i = 0; i < kGenDim; ++i) {
    for (int j = 0; j < kGenDim; ++j) {
      double c = 0.0;
      for (int k = 0; k < kGenDim; ++k) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j), uk = static_cast<std::size_t>(k);
        c += 0.5 * (dM[uk](i, j) + dM[uj](i, k) - dM[ui](k, j)) * qd(k);
      }
      C(i, j) = c;
    }
  }
  return C;
}

InputMatrix input_matrix(const GenVector& q, const HfParams& params) {
  const Frame fr = frame_of(q);
  InputMatrix B = InputMatrix::Zero();
  Vec3 x;
  PointJacobian J;
  Vec3 pos, dir;
  for (int k = 0; k < kNumRotors; ++k) {
    leg_point(q, fr, params, k, 1.0, x, J);
    detail::leg_thruster<double>(params, k, q(6 + k), pos, dir);
    B.col(k) = J.transpose() * (fr.R * dir);
    B.col(k).segment<3>(3) += fr.E.transpose() * (params.spin_dirs(k) * params.c_m * dir);
    B(6 + k, 4 + k) = 1.0;
  }
  return B;
}

GenVector drag_generalized(const GenVector& q, const GenVector& qd, const HfParams& params) {
  const Mat3 E = euler_rate_to_body<double>(Vec3(q.segment<3>(3)));
  const Vec3 omega = E * qd.segment<3>(3);
  GenVector Q = GenVector::Zero();
  Q.head<3>() = -params.drag_lin.cwiseProduct(qd.head<3>());
  Q.segment<3>(3) = E.transpose() * (-params.drag_ang.cwiseProduct(omega));
  return Q;
}

namespace {

struct Assembled {
  GenMatrix M;
  GenVector rhs;  // B_thrust T + Q_drag - C qd - g, joint torques excluded
};

Assembled assemble(const HfVector& x, const Vec4& thrusts, const HfParams& params, bool with_drag) {
  const GenVector q = x.head<kGenDim>();
  const GenVector qd = x.tail<kGenDim>();
  Assembled a{mass_matrix(q, params), GenVector::Zero()};
  a.rhs = input_matrix(q, params).leftCols<4>() * thrusts - bias_and_gravity(q, qd, params);
  if (with_drag) a.rhs += drag_generalized(q, qd, params);
  return a;
}

}  // namespace

HfVector hf_dynamics_torque(const HfVector& x, const Vec4& thrusts, const Vec4& joint_torques,
                            const HfParams& params, bool with_drag) {
  Assembled a = assemble(x, thrusts, params, with_drag);
  a.rhs.tail<4>() += joint_torques;
  Eigen::LDLT<GenMatrix> ldlt(a.M);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw SingularConfigurationError("mass matrix is not positive definite; torque mode needs m_l > 0");
  }
  HfVector xd;
  xd << x.tail<kGenDim>(), ldlt.solve(a.rhs);
  return xd;
}

namespace {

GenVector servo_accelerations(const Assembled& a, const Vec4& joint_acc) {
  const auto M_bb = a.M.topLeftCorner<kBase, kBase>();
  const auto M_ba = a.M.topRightCorner<kBase, 4>();
  const Eigen::Matrix<double, kBase, 1> rhs_b = a.rhs.head<kBase>() - M_ba * joint_acc;
  GenVector qdd;
  qdd << M_bb.ldlt().solve(rhs_b), joint_acc;
  return qdd;
}

}  // namespace

HfVector hf_dynamics(const HfVector& x, const InputVector& u, const HfParams& params, bool with_drag) {
  const Assembled a = assemble(x, u.head<4>(), params, with_drag);
  HfVector xd;
  xd << x.tail<kGenDim>(), servo_accelerations(a, u.tail<4>());
  return xd;
}

Vec4 servo_torques(const HfVector& x, const InputVector& u, const HfParams& params, bool with_drag) {
  const Assembled a = assemble(x, u.head<4>(), params, with_drag);
  const GenVector qdd = servo_accelerations(a, u.tail<4>());
  return (a.M * qdd - a.rhs).tail<4>();
}

double total_energy(const HfVector& x, const HfParams& params) {
  const GenVector q = x.head<kGenDim>();
  const GenVector qd = x.tail<kGenDim>();
  const double kinetic = 0.5 * qd.dot(mass_matrix_unchecked(q, params) * qd);
  double potential = params.m_b * params.g * q(2);
  const PointKinematics pk = point_kinematics(q, params);
  for (int n = 0; n < kNumPoints; ++n) {
    potential += params.point_mass(n % kPointsPerLeg) * params.g * pk.positions[static_cast<std::size_t>(n)].z();
  }
  return kinetic + potential;
}

Mat3 nominal_leg_inertia(const HfParams& params) {
  Mat3 I = Mat3::Zero();
  for (int k = 0; k < kNumRotors; ++k) {
    for (int i = 0; i < kPointsPerLeg; ++i) {
      const Vec3 r = params.hip_offsets[static_cast<std::size_t>(k)] +
                     params.point_fractions[static_cast<std::size_t>(i)] * params.L_leg *
                         leg_unit(params, k, params.q_nominal);
      I += params.point_mass(i) * (r.squaredNorm() * Mat3::Identity() - r * r.transpose());
    }
  }
  return I;
}

RobotParams prediction_params(const HfParams& params, bool include_leg_inertia) {
  RobotParams p = static_cast<const RobotParams&>(params);
  p.I_legs = include_leg_inertia ? nominal_leg_inertia(params) : Mat3::Zero();
  return p;
}

}  // namespace morphnmpc
