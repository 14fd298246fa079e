#include <doctest.h>

#include <Eigen/Geometry>

#include "helpers.hpp"
#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/integrator.hpp"

using namespace morphnmpc;
using namespace testutil;

TEST_CASE("rotation matrix matches composed axis rotations") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int i = 0; i < 50; ++i) {
    const Vec3 e(u(rng), u(rng), 2.0 * u(rng));
    CHECK((rotation_matrix<double>(e) - rotation_of(e)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((euler_of(rotation_of(e)) - e).norm() < 1e-12);
  }
}

TEST_CASE("euler rate matrix") {
  CHECK(euler_rate_matrix(Vec3::Zero()) == Mat3::Identity());
  CHECK_THROWS_AS(euler_rate_matrix(Vec3(0.0, std::numbers::pi / 2.0, 0.0)), GimbalLockError);

  SUBCASE("matches finite differences of the rotation on SO(3)") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-5;
    for (int i = 0; i < 30; ++i) {
      const Vec3 theta(u(rng), 0.99 * u(rng), 3.0 * u(rng));
      const Vec3 omega(u(rng), u(rng), u(rng));
      const Mat3 R = rotation_of(theta);
      // Constant body rate: R(t) = R0 exp(t [omega]x).
      const Mat3 Rp = R * Eigen::AngleAxisd(h * omega.norm(), omega.normalized()).toRotationMatrix();
      const Mat3 Rm = R * Eigen::AngleAxisd(-h * omega.norm(), omega.normalized()).toRotationMatrix();
      const Vec3 fd = (euler_of(Rp) - euler_of(Rm)) / (2.0 * h);
      CHECK(rel_err(euler_rate_matrix(theta) * omega, fd) < 1e-5);
    }
  }

  SUBCASE("inverse of the body-rate map") {
    const Vec3 theta(0.3, -0.7, 2.0);
    CHECK((euler_rate_matrix(theta) * euler_rate_to_body<double>(theta) - Mat3::Identity()).norm() < 1e-14);
  }
}

TEST_CASE("thruster geometry") {
  const RobotParams p;
  SUBCASE("nominal posture: axes along body z, 0.45 m rotor spacing") {
    const auto g = thruster_geometry(p.nominal_posture(), p);
    for (const auto& f : g) CHECK((f.direction - Vec3::UnitZ()).norm() < 1e-15);
    // FL-RL along x, FL-FR along y.
    CHECK(std::abs((g[0].position - g[2].position).x() - 0.45) < 1e-12);
    CHECK(std::abs((g[0].position - g[1].position).y() - 0.45) < 1e-12);
    CHECK(std::abs((g[1].position - g[3].position).x() - 0.45) < 1e-12);
    CHECK(std::abs((g[2].position - g[3].position).y() - 0.45) < 1e-12);
  }
  SUBCASE("perturbing one leg only moves that rotor") {
    const double d = 0.1;
    const auto g0 = thruster_geometry(p.nominal_posture(), p);
    for (int k = 0; k < 4; ++k) {
      Vec4 q = p.nominal_posture();
      q(k) += d;
      const auto g = thruster_geometry(q, p);
      for (int j = 0; j < 4; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (j == k) {
          CHECK(std::abs(std::abs(g[uj].direction.x()) - std::sin(d)) < 1e-14);
          CHECK((g[uj].position - g0[uj].position).norm() > 1e-3);
        } else {
          CHECK(g[uj].position == g0[uj].position);
          CHECK(g[uj].direction == g0[uj].direction);
        }
      }
    }
  }
  SUBCASE("legs at 90 deg are horizontal and thrust tilts by 45 deg") {
    const auto g = thruster_geometry(Vec4::Constant(std::numbers::pi / 2.0), p);
    for (int k = 0; k < 4; ++k) {
      const auto& f = g[static_cast<std::size_t>(k)];
      const Vec3& hip = p.hip_offsets[static_cast<std::size_t>(k)];
      CHECK(std::abs(f.position.z() - hip.z()) < 1e-15);
      CHECK(std::abs(f.position.x() - (hip.x() + p.leg_sign(k) * p.L_leg)) < 1e-15);
      const double s = p.leg_sign(k);
      CHECK((f.direction - Vec3(-s * std::sin(std::numbers::pi / 4.0), 0.0, std::cos(std::numbers::pi / 4.0))).norm() <
            1e-15);
    }
  }
}

TEST_CASE("net wrench") {
  const RobotParams p;
  const Vec4 q = p.nominal_posture();
  SUBCASE("equal thrusts cancel moments") {
    const Wrench w = net_wrench(q, Vec4::Constant(10.0), p);
    CHECK((w.force - Vec3(0, 0, 40.0)).norm() < 1e-12);
    CHECK(w.torque.norm() < 1e-12);
  }
  SUBCASE("zero thrust gives zero wrench") {
    const Wrench w = net_wrench(Vec4(0.3, 0.9, 1.2, 0.1), Vec4::Zero(), p);
    CHECK(w.force.norm() == 0.0);
    CHECK(w.torque.norm() == 0.0);
  }
  SUBCASE("rotor 4 off: explicit cross-product sum") {
    const double T = p.hover_thrust();
    const Vec4 thr(T, T, T, 0.0);
    const Wrench w = net_wrench(q, thr, p);
    Vec3 tau = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      const double s = p.leg_sign(k);
      const Vec3& hip = p.hip_offsets[static_cast<std::size_t>(k)];
      const Vec3 r(hip.x() + p.L_leg * s * std::sin(q(k)), hip.y(), hip.z() - p.L_leg * std::cos(q(k)));
      const Vec3 f = T * Vec3::UnitZ();
      tau += r.cross(f) + p.spin_dirs(k) * p.c_m * f;
    }
    CHECK((w.torque - tau).norm() < 1e-12);
    // Rotor 4 sits rear-right (x < 0, y < 0): losing it rolls right-side down and pitches nose up.
    CHECK(w.torque.x() > 0.0);
    CHECK(w.torque.y() < 0.0);
    CHECK(std::abs(w.torque.z() - (-p.spin_dirs(3) * p.c_m * T)) < 1e-12);
  }
  SUBCASE("linear in thrust") {
    const Vec4 qa(0.4, 0.9, 0.7, 1.1);
    const Vec4 t1(3, 8, 1, 12), t2(7, 2, 9, 4);
    const double a = 0.7, b = -1.3;
    const Wrench w = net_wrench(qa, a * t1 + b * t2, p);
    const Wrench w1 = net_wrench(qa, t1, p), w2 = net_wrench(qa, t2, p);
    CHECK((w.force - (a * w1.force + b * w2.force)).norm() < 1e-13);
    CHECK((w.torque - (a * w1.torque + b * w2.torque)).norm() < 1e-13);
  }
}

TEST_CASE("drag wrench") {
  const RobotParams p;
  const Wrench z = drag_wrench(Vec3::Zero(), Vec3::Zero(), p);
  CHECK(z.force.norm() == 0.0);
  CHECK(z.torque.norm() == 0.0);
  for (double w : {-3.0, -0.1, 0.5, 8.0}) {
    const Vec3 omega(0, 0, w);
    CHECK(omega.dot(drag_wrench(Vec3::Zero(), omega, p).torque) == doctest::Approx(-p.drag_ang.z() * w * w));
  }

  SUBCASE("constant yaw moment settles at N / drag") {
    RobotParams q = p;
    q.drag_lin.setZero();
    const double N = 0.3;
    // Pure yaw spin about a principal axis: omega_z' = (N - d w) / I_zz.
    auto f = [&](const Eigen::Matrix<double, 1, 1>& w, double) {
      return Eigen::Matrix<double, 1, 1>((N + drag_wrench(Vec3::Zero(), Vec3(0, 0, w(0)), q).torque.z()) /
                                         q.rom_inertia()(2, 2));
    };
    auto traj = integrate_held(f, Eigen::Matrix<double, 1, 1>::Zero().eval(), 0.0, 0.01, 3000);
    CHECK(traj.back()(0) == doctest::Approx(N / q.drag_ang.z()).epsilon(1e-6));
  }
}

TEST_CASE("ROM dynamics") {
  const RobotParams p;
  SUBCASE("hover is a fixed point") {
    ControlInput u;
    u.thrusts = Vec4::Constant(p.hover_thrust());
    CHECK(p.hover_thrust() == doctest::Approx(14.715).epsilon(1e-12));
    const RomVector xd = rom_dynamics(hover_state(p), u, p);
    CHECK(xd.norm() < 1e-12);
  }
  SUBCASE("free fall") {
    RobotParams q = p;
    q.drag_lin.setZero();
    q.drag_ang.setZero();
    RomState s = hover_state(q);
    s.v_b = Vec3(1, 2, 3);
    const RomVector xd = rom_dynamics(s, ControlInput{}, q);
    CHECK((xd.segment<3>(idx::kVel) - Vec3(0, 0, -9.81)).norm() < 1e-14);
  }
  SUBCASE("spin about a principal axis has no gyroscopic torque") {
    RobotParams q = p;
    q.drag_ang.setZero();
    RomState s = hover_state(q);
    s.omega_b = Vec3(0, 0, 1);
    CHECK(rom_dynamics(s, ControlInput{}, q).segment<3>(idx::kOmega).norm() < 1e-15);
  }
  SUBCASE("translational dynamics are yaw invariant under isotropic drag") {
    std::mt19937 rng(11);
    ControlInput u;
    u.thrusts = Vec4(13, 16, 15, 12);
    for (int i = 0; i < 10; ++i) {
      RomState s = random_state(rng, p);
      const double psi = 0.3 + 0.5 * i;
      const Mat3 Rz = Eigen::AngleAxisd(psi, Vec3::UnitZ()).toRotationMatrix();
      RomState r = s;
      r.theta_b.z() += psi;
      r.v_b = Rz * s.v_b;
      const RomVector a = rom_dynamics(s, u, p), b = rom_dynamics(r, u, p);
      CHECK((Rz * a.segment<3>(idx::kVel) - b.segment<3>(idx::kVel)).norm() < 1e-12);
      CHECK((a.segment<3>(idx::kOmega) - b.segment<3>(idx::kOmega)).norm() < 1e-12);
    }
  }
  SUBCASE("gyroscopic motion conserves rotational energy") {
    RobotParams q = p;
    q.drag_ang.setZero();
    q.drag_lin.setZero();
    RomState s = hover_state(q);
    s.omega_b = Vec3(1.0, -2.0, 0.7);
    const Mat3 I = q.rom_inertia();
    const double e0 = 0.5 * s.omega_b.dot(I * s.omega_b);
    auto f = [&q](const RomVector& x, const InputVector& u) { return rom_dynamics(x, u, q); };
    RomVector x = s.flatten();
    for (int i = 0; i < 100000; ++i) x = rk4_step(f, x, InputVector::Zero().eval(), 1e-5);
    const Vec3 w = x.segment<3>(idx::kOmega);
    CHECK(std::abs(0.5 * w.dot(I * w) - e0) / e0 < 1e-8);
  }
  SUBCASE("jacobian matches central differences") {
    std::mt19937 rng(5);
    const RomVector x = random_state(rng, p).flatten();
    const InputVector u = (InputVector() << 12, 15, 17, 11, 1, -2, 0.5, 3).finished();
    const auto J = rom_jacobian(x, u, p);
    const double h = 1e-6;
    for (int j = 0; j < kRomStateDim + kInputDim; ++j) {
      RomVector xp = x, xm = x;
      InputVector up = u, um = u;
      if (j < kRomStateDim) {
        xp(j) += h;
        xm(j) -= h;
      } else {
        up(j - kRomStateDim) += h;
        um(j - kRomStateDim) -= h;
      }
      const RomVector fd = (rom_dynamics(xp, up, p) - rom_dynamics(xm, um, p)) / (2 * h);
      CHECK((J.col(j) - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("state flatten round trip and parameter validation") {
  std::mt19937 rng(2);
  const RobotParams p;
  const RomState s = random_state(rng, p);
  CHECK(RomState::unflatten(s.flatten()) == s);
  ControlInput u{Vec4(1, 2, 3, 4), Vec4(5, 6, 7, 8)};
  CHECK(ControlInput::unflatten(u.flatten()) == u);

  CHECK_NOTHROW(p.validate());
  RobotParams bad = p;
  bad.m_b = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.drag_ang.z() = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
