#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/high_fidelity.hpp"
#include "morphnmpc/integrator.hpp"
#include "morphnmpc/selftest.hpp"

using namespace morphnmpc;
using namespace testutil;

namespace {

GenVector random_q(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GenVector q;
  q << 3 * u(rng), 3 * u(rng), 5 + u(rng), 1.2 * u(rng), 1.2 * u(rng), 3 * u(rng), 0.8 + 0.7 * u(rng),
      0.8 + 0.7 * u(rng), 0.8 + 0.7 * u(rng), 0.8 + 0.7 * u(rng);
  return q;
}

GenVector random_qd(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GenVector qd;
  for (int i = 0; i < kGenDim; ++i) qd(i) = u(rng);
  return qd;
}

HfParams no_drag() {
  HfParams p;
  p.drag_lin.setZero();
  p.drag_ang.setZero();
  return p;
}

}  // namespace

TEST_CASE("point kinematics") {
  const HfParams p;
  SUBCASE("zero configuration") {
    const PointKinematics pk = point_kinematics(GenVector::Zero(), p);
    for (int k = 0; k < 4; ++k) {
      for (int i = 0; i < kPointsPerLeg; ++i) {
        const Vec3 expect = p.hip_offsets[static_cast<std::size_t>(k)] +
                            p.point_fractions[static_cast<std::size_t>(i)] * p.L_leg * Vec3(0, 0, -1);
        CHECK((pk.positions[static_cast<std::size_t>(k * 3 + i)] - expect).norm() < 1e-15);
      }
    }
  }
  SUBCASE("jacobians match central differences") {
    std::mt19937 rng(1);
    const double h = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
      const GenVector q = random_q(rng);
      const PointKinematics pk = point_kinematics(q, p);
      for (int n = 0; n < kNumPoints; ++n) {
        const auto un = static_cast<std::size_t>(n);
        for (int j = 0; j < kGenDim; ++j) {
          GenVector qp = q, qm = q;
          qp(j) += h;
          qm(j) -= h;
          const Vec3 fd = (point_kinematics(qp, p).positions[un] - point_kinematics(qm, p).positions[un]) / (2 * h);
          CHECK((pk.jacobians[un].col(j) - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
        }
      }
    }
  }
  SUBCASE("translation equivariance") {
    std::mt19937 rng(2);
    const GenVector q = random_q(rng);
    GenVector q2 = q;
    const Vec3 d(0.5, -2.0, 3.25);
    q2.head<3>() += d;
    const auto a = point_kinematics(q, p), b = point_kinematics(q2, p);
    for (int n = 0; n < kNumPoints; ++n) {
      const auto un = static_cast<std::size_t>(n);
      CHECK((b.positions[un] - a.positions[un] - d).norm() < 1e-13);
    }
  }
}

TEST_CASE("mass matrix") {
  const HfParams p;
  std::mt19937 rng(4);
  SUBCASE("massless legs decouple") {
    HfParams q0 = p;
    q0.m_l = 0.0;
    const GenMatrix M = mass_matrix(random_q(rng), q0);
    CHECK((M.block<3, 3>(0, 0) - q0.m_b * Mat3::Identity()).norm() < 1e-14);
    CHECK(M.block<4, 4>(6, 6).norm() < 1e-15);
    CHECK(M.block<3, 7>(0, 3).norm() < 1e-14);
  }
  SUBCASE("symmetric positive definite at 1000 postures") {
    CHECK(min_mass_eigenvalue(p, 1000, 9) > 0.0);
  }
  SUBCASE("kinetic energy equals the direct point-velocity sum") {
    for (int trial = 0; trial < 20; ++trial) {
      const GenVector q = random_q(rng), qd = random_qd(rng);
      const GenMatrix M = mass_matrix(q, p);
      const PointKinematics pk = point_kinematics(q, p);
      double direct = 0.5 * p.m_b * qd.head<3>().squaredNorm();
      const Vec3 omega = euler_rate_to_body<double>(Vec3(q.segment<3>(3))) * qd.segment<3>(3);
      direct += 0.5 * omega.dot(p.I_b * omega);
      for (int n = 0; n < kNumPoints; ++n) {
        direct += 0.5 * p.point_mass(n % kPointsPerLeg) * (pk.jacobians[static_cast<std::size_t>(n)] * qd).squaredNorm();
      }
      CHECK(rel_err(0.5 * qd.dot(M * qd), direct) < 1e-10);
    }
  }
  SUBCASE("near gimbal lock is rejected") {
    GenVector q = GenVector::Zero();
    q(4) = std::numbers::pi / 2.0;
    CHECK_THROWS_AS(mass_matrix(q, p), SingularConfigurationError);
  }
}

TEST_CASE("bias and gravity") {
  const HfParams p;
  std::mt19937 rng(6);
  const GenVector q = random_q(rng);
  SUBCASE("static gravity load") {
    const GenVector g = bias_and_gravity(q, GenVector::Zero(), p);
    CHECK(g(2) == doctest::Approx(p.m_net() * p.g).epsilon(1e-12));
    CHECK((g - gravity_vector(q, p)).norm() < 1e-15);
  }
  SUBCASE("vertical translation leaves it unchanged") {
    const GenVector qd = random_qd(rng);
    GenVector q2 = q;
    q2(2) += 7.0;
    CHECK((bias_and_gravity(q, qd, p) - bias_and_gravity(q2, qd, p)).norm() < 1e-9);
  }
  SUBCASE("Mdot - 2C is skew symmetric") {
    CHECK(christoffel_skew_residual(p, 30, 13) < 1e-6);
    for (int trial = 0; trial < 10; ++trial) {
      const GenVector qq = random_q(rng), qd = random_qd(rng);
      const double eps = 1e-5;
      const GenMatrix Mdot = (mass_matrix(qq + eps * qd, p) - mass_matrix(qq - eps * qd, p)) / (2 * eps);
      CHECK(std::abs(qd.dot((Mdot - 2.0 * coriolis_matrix(qq, qd, p)) * qd)) < 1e-6);
      // C qd is the Coriolis part of the bias vector.
      CHECK((coriolis_matrix(qq, qd, p) * qd + gravity_vector(qq, p) - bias_and_gravity(qq, qd, p)).norm() < 1e-8);
    }
  }
}

TEST_CASE("input matrix") {
  const HfParams p;
  SUBCASE("upright thrust lifts") {
    GenVector q = GenVector::Zero();
    q.segment<4>(6) = p.nominal_posture();
    const InputMatrix B = input_matrix(q, p);
    for (int k = 0; k < 4; ++k) CHECK(B(2, k) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("virtual work matches thruster-point velocities") {
    std::mt19937 rng(8);
    HfParams q0 = p;
    q0.c_m = 0.0;  // reaction moments do no work along the thrust axis
    for (int trial = 0; trial < 10; ++trial) {
      const GenVector q = random_q(rng), qd = random_qd(rng);
      const InputMatrix B = input_matrix(q, q0);
      const Mat3 R = rotation_matrix<double>(Vec3(q.segment<3>(3)));
      const auto geo = thruster_geometry(q.segment<4>(6), q0);
      for (int k = 0; k < 4; ++k) {
        const auto [x, J] = thruster_point(q, k, q0);
        const double power = (J * qd).dot(R * geo[static_cast<std::size_t>(k)].direction);
        CHECK(rel_err(B.col(k).dot(qd), power) < 1e-8);
      }
    }
  }
  SUBCASE("tilted 90 deg thrust has no vertical component") {
    HfParams q0 = p;
    q0.q_nominal = 0.0;  // thrust axis tilts with the full leg angle
    GenVector q = GenVector::Zero();
    q.segment<4>(6) = Vec4::Constant(std::numbers::pi / 2.0);
    const InputMatrix B = input_matrix(q, q0);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(B(2, k)) < 1e-15);
  }
}

TEST_CASE("HF dynamics") {
  const HfParams p;
  SUBCASE("hover equilibrium") {
    const RomState s = hover_state(p);
    ControlInput u;
    u.thrusts = Vec4::Constant(p.hover_thrust());
    CHECK(hf_dynamics(HfState::from_rom(s).flatten(), u.flatten(), p).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("passive flight conserves energy") {
    CHECK(hf_energy_drift(no_drag(), 1.0, 1e-4) < 1e-6);
  }
  SUBCASE("drop test: kinetic gain equals potential loss") {
    const HfParams q0 = no_drag();
    RomState s = hover_state(q0);
    s.omega_b = Vec3(0.3, -0.2, 0.5);
    HfVector x = HfState::from_rom(s).flatten();
    auto kinetic = [&q0](const HfVector& xx) {
      const GenVector qd = xx.tail<kGenDim>();
      return 0.5 * qd.dot(mass_matrix(xx.head<kGenDim>(), q0) * qd);
    };
    const double k0 = kinetic(x), v0 = total_energy(x, q0) - k0;
    auto f = [&q0](const HfVector& xx, const Vec4&) {
      return hf_dynamics_torque(xx, Vec4::Zero(), Vec4::Zero(), q0, false);
    };
    for (int i = 0; i < 1000; ++i) x = rk4_step(f, x, Vec4::Zero().eval(), 1e-3);
    const double k1 = kinetic(x), v1 = total_energy(x, q0) - k1;
    CHECK(rel_err(k1 - k0, v0 - v1) < 1e-6);
  }
  SUBCASE("energy is non-increasing with drag and no input") {
    RomState s = hover_state(p);
    s.v_b = Vec3(2, -1, 1);
    s.omega_b = Vec3(1, 1, -2);
    s.qd_a = Vec4(0.5, -0.5, 0.2, 0.1);
    HfVector x = HfState::from_rom(s).flatten();
    auto f = [&p](const HfVector& xx, const Vec4&) { return hf_dynamics_torque(xx, Vec4::Zero(), Vec4::Zero(), p); };
    double e = total_energy(x, p);
    for (int i = 0; i < 200; ++i) {
      x = rk4_step(f, x, Vec4::Zero().eval(), 5e-3);
      const double e1 = total_energy(x, p);
      CHECK(e1 <= e + 1e-9);
      e = e1;
    }
  }
  SUBCASE("massless legs with frozen joints reduce to the ROM") {
    HfParams q0 = p;
    q0.m_b = 6.0;
    q0.m_l = 0.0;
    const RobotParams rp = prediction_params(q0, false);
    RomState s = hover_state(q0);
    s.theta_b = Vec3(0.1, -0.05, 0.4);
    s.v_b = Vec3(0.5, 0.2, -0.1);
    s.omega_b = Vec3(0.3, -0.4, 0.8);
    const ControlInput u{Vec4(15.0, 14.0, 16.0, 13.5), Vec4::Zero()};
    auto fr = [&rp](const RomVector& x, const InputVector& uu) { return rom_dynamics(x, uu, rp); };
    auto fh = [&q0](const HfVector& x, const InputVector& uu) { return hf_dynamics(x, uu, q0); };
    const auto a = integrate_held(fr, s.flatten(), u.flatten(), 1e-3, 1000).back();
    const auto b = integrate_held(fh, HfState::from_rom(s).flatten(), u.flatten(), 1e-3, 1000).back();
    CHECK((RomState::unflatten(a).flatten() - HfState::unflatten(b).to_rom().flatten()).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("servo joints follow the commanded acceleration") {
    std::mt19937 rng(10);
    RomState s = random_state(rng, p);
    const InputVector u = (InputVector() << 14, 15, 13, 16, 2.0, -3.0, 1.5, 0.5).finished();
    const HfVector xd = hf_dynamics(HfState::from_rom(s).flatten(), u, p);
    CHECK((xd.segment<4>(kGenDim + 6) - u.tail<4>()).norm() < 1e-10);
  }
  SUBCASE("rotating the world about z rotates solutions") {
    std::mt19937 rng(12);
    RomState s = random_state(rng, p);
    const InputVector u = (InputVector() << 14, 15, 13, 16, 2.0, -3.0, 1.5, 0.5).finished();
    const double psi = 0.83;
    const Mat3 Rz = Eigen::AngleAxisd(psi, Vec3::UnitZ()).toRotationMatrix();
    RomState r = s;
    r.p_b = Rz * s.p_b;
    r.v_b = Rz * s.v_b;
    r.theta_b.z() += psi;
    auto fh = [&p](const HfVector& x, const InputVector& uu) { return hf_dynamics(x, uu, p); };
    const RomState a = HfState::unflatten(integrate_held(fh, HfState::from_rom(s).flatten(), u, 1e-3, 200).back()).to_rom();
    const RomState b = HfState::unflatten(integrate_held(fh, HfState::from_rom(r).flatten(), u, 1e-3, 200).back()).to_rom();
    CHECK((Rz * a.p_b - b.p_b).norm() < 1e-8);
    CHECK((Rz * a.v_b - b.v_b).norm() < 1e-8);
    CHECK((a.omega_b - b.omega_b).norm() < 1e-8);
    CHECK(std::abs(wrap_angle(a.theta_b.z() + psi - b.theta_b.z())) < 1e-8);
  }
}

TEST_CASE("total energy") {
  HfParams p;
  p.m_l = 0.0;
  RomState s;
  CHECK(total_energy(HfState::from_rom(s).flatten(), p) == 0.0);
  s.v_b = Vec3(0, 0, 2.0);
  CHECK(total_energy(HfState::from_rom(s).flatten(), p) == doctest::Approx(0.5 * p.m_net() * 4.0));
  HfParams q;
  RomState r;
  r.v_b = Vec3(0, 0, 2.0);
  r.q_a = q.nominal_posture();
  // Leg points hang below the origin; their potential is the only offset.
  double v = 0.0;
  const PointKinematics pk = point_kinematics(HfState::from_rom(r).q, q);
  for (int n = 0; n < kNumPoints; ++n) v += q.point_mass(n % 3) * q.g * pk.positions[static_cast<std::size_t>(n)].z();
  CHECK(total_energy(HfState::from_rom(r).flatten(), q) == doctest::Approx(0.5 * q.m_net() * 4.0 + v));
}

TEST_CASE("HF state conversion round trip") {
  std::mt19937 rng(14);
  const HfParams p;
  const RomState s = random_state(rng, p);
  const RomState back = HfState::from_rom(s).to_rom();
  CHECK((back.flatten() - s.flatten()).norm() < 1e-12);
}
