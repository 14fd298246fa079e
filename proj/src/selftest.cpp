#include "morphnmpc/selftest.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/integrator.hpp"
#include "morphnmpc/nmpc.hpp"

namespace morphnmpc {
namespace {

GenVector random_posture(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> tilt(-deg2rad(80.0), deg2rad(80.0));
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> joint(0.0, deg2rad(90.0));
  GenVector q;
  q << pos(rng), pos(rng), pos(rng), tilt(rng), tilt(rng), yaw(rng), joint(rng), joint(rng), joint(rng), joint(rng);
  return q;
}

GenVector random_rates(std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  GenVector qd;
  for (int i = 0; i < kGenDim; ++i) qd(i) = d(rng);
  return qd;
}

std::string le(double bound) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "< %g", bound);
  return buf;
}

}  // namespace

double rk4_convergence_slope(const RobotParams& params) {
  RomState s;
  s.p_b = Vec3(0.0, 0.0, 5.0);
  s.theta_b = Vec3(0.2, -0.15, 0.3);
  s.q_a = Vec4(0.6, 0.9, 0.7, 0.8);
  s.v_b = Vec3(1.0, -0.5, 0.3);
  s.omega_b = Vec3(0.5, -0.4, 1.0);
  s.qd_a = Vec4(0.3, -0.2, 0.1, -0.3);
  ControlInput u;
  u.thrusts = Vec4(16.0, 13.0, 15.0, 14.0);
  u.joint_acc = Vec4(0.5, -0.5, 0.2, -0.2);
  const RomVector x0 = s.flatten();
  const InputVector uv = u.flatten();
  auto f = [&params](const RomVector& x, const InputVector& in) { return rom_dynamics(x, in, params); };
  auto endpoint = [&](double h) { return integrate_held(f, x0, uv, h, static_cast<int>(std::lround(1.0 / h))).back(); };

  const std::vector<double> hs = {0.04, 0.02, 0.01, 0.005};
  const RomVector ref = endpoint(hs.back() / 64.0);
  // Least-squares slope of log(err) against log(h).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double h : hs) {
    const double lx = std::log(h), ly = std::log((endpoint(h) - ref).norm());
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(hs.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double min_mass_eigenvalue(const HfParams& params, int samples, unsigned seed) {
  std::mt19937 rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const GenMatrix M = mass_matrix(random_posture(rng), params);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * M.cwiseAbs().maxCoeff()) return -1.0;
    lo = std::min(lo, Eigen::SelfAdjointEigenSolver<GenMatrix>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());
  }
  return lo;
}

double christoffel_skew_residual(const HfParams& params, int samples, unsigned seed) {
  std::mt19937 rng(seed);
  double worst = 0.0;
  const double eps = 1e-5;
  for (int i = 0; i < samples; ++i) {
    const GenVector q = random_posture(rng);
    const GenVector qd = random_rates(rng);
    const GenMatrix Mdot = (mass_matrix(q + eps * qd, params) - mass_matrix(q - eps * qd, params)) / (2.0 * eps);
    const GenMatrix N = Mdot - 2.0 * coriolis_matrix(q, qd, params);
    worst = std::max(worst, (N + N.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double hf_energy_drift(const HfParams& params, double duration, double h) {
  RomState s;
  s.theta_b = Vec3(0.1, -0.2, 0.3);
  s.q_a = params.nominal_posture();
  s.v_b = Vec3(1.0, 0.5, 2.0);
  s.omega_b = Vec3(1.0, -0.8, 1.5);
  s.qd_a = Vec4(1.0, -0.5, 0.8, -1.2);
  HfVector x = HfState::from_rom(s).flatten();
  auto f = [&params](const HfVector& xx, const Vec4&) {
    return hf_dynamics_torque(xx, Vec4::Zero(), Vec4::Zero(), params, false);
  };
  const double e0 = total_energy(x, params);
  double worst = 0.0;
  const int n = static_cast<int>(std::lround(duration / h));
  for (int i = 0; i < n; ++i) {
    x = rk4_step(f, x, Vec4::Zero().eval(), h);
    worst = std::max(worst, std::abs(total_energy(x, params) - e0));
  }
  return worst / std::abs(e0);
}

double max_gradient_error(const RobotParams& params, int instances, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  NmpcConfig cfg;
  double worst = 0.0;
  for (int n = 0; n < instances; ++n) {
    RomState s;
    s.p_b = Vec3(unit(rng), unit(rng), 10.0 + unit(rng));
    s.theta_b = 0.3 * Vec3(unit(rng), unit(rng), unit(rng));
    s.q_a = params.nominal_posture() + 0.3 * Vec4(unit(rng), unit(rng), unit(rng), unit(rng));
    s.v_b = Vec3(unit(rng), unit(rng), unit(rng));
    s.omega_b = Vec3(unit(rng), unit(rng), unit(rng));
    s.qd_a = 0.5 * Vec4(unit(rng), unit(rng), unit(rng), unit(rng));
    const RomVector x0 = s.flatten();

    InputSequence u(static_cast<std::size_t>(cfg.horizon));
    for (auto& uk : u) {
      for (int i = 0; i < 4; ++i) uk(i) = params.hover_thrust() + 3.0 * unit(rng);
      for (int i = 4; i < 8; ++i) uk(i) = 2.0 * unit(rng);
    }
    Reference ref;
    RomState target;
    target.p_b = Vec3(0.0, 0.0, 10.0);
    target.q_a = params.nominal_posture();
    ref.states.assign(static_cast<std::size_t>(cfg.horizon), target.flatten());

    const Eigen::VectorXd g = cost_gradient(x0, u, ref, cfg, params);
    Eigen::VectorXd fd(g.size());
    const double step = 1e-6;
    for (int j = 0; j < g.size(); ++j) {
      InputSequence up = u, um = u;
      up[static_cast<std::size_t>(j / kInputDim)](j % kInputDim) += step;
      um[static_cast<std::size_t>(j / kInputDim)](j % kInputDim) -= step;
      fd(j) = (total_cost(rollout(x0, up, cfg, params), up, ref, cfg) -
               total_cost(rollout(x0, um, cfg, params), um, ref, cfg)) /
              (2.0 * step);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return worst;
}

double hover_residual(const HfParams& params) {
  RomState s;
  s.p_b = Vec3(0.0, 0.0, 10.0);
  s.q_a = params.nominal_posture();
  ControlInput u;
  u.thrusts = Vec4::Constant(params.hover_thrust());
  const double rom = rom_dynamics(s, u, params).cwiseAbs().maxCoeff();
  const double hf = hf_dynamics(HfState::from_rom(s).flatten(), u.flatten(), params).cwiseAbs().maxCoeff();
  return std::max(rom, hf);
}

std::vector<CheckResult> run_invariant_suite(const HfParams& params, unsigned seed) {
  std::vector<CheckResult> out;
  const double slope = rk4_convergence_slope(params);
  out.push_back({"rk4_convergence_slope", slope, "in [3.8, 4.2]", slope >= 3.8 && slope <= 4.2});
  const double eig = min_mass_eigenvalue(params, 1000, seed);
  out.push_back({"mass_matrix_min_eigenvalue_1000_postures", eig, "> 0", eig > 0.0});
  const double skew = christoffel_skew_residual(params, 50, seed);
  out.push_back({"christoffel_skew_residual", skew, le(1e-6), skew < 1e-6});
  HfParams passive = params;
  passive.drag_lin.setZero();
  passive.drag_ang.setZero();
  const double drift = hf_energy_drift(passive);
  out.push_back({"hf_energy_drift_1s", drift, le(1e-6), drift < 1e-6});
  const double grad = max_gradient_error(prediction_params(params, true), 20, seed);
  out.push_back({"cost_gradient_rel_error_20_instances", grad, le(1e-4), grad < 1e-4});
  const double hover = hover_residual(params);
  out.push_back({"hover_fixed_point_residual", hover, le(1e-9), hover < 1e-9});
  return out;
}

}  // namespace morphnmpc
