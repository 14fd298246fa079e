#include "morphnmpc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/integrator.hpp"

namespace morphnmpc {

namespace {

constexpr double kTimeEps = 1e-9;

void fail(const std::string& what) { throw ConfigError(what); }

}  // namespace

void Scenario::validate() const {
  if (name.empty()) fail("scenario name must not be empty");
  if (!(duration > 0.0)) fail("scenario duration must be positive");
  robot.validate();
  nmpc.validate();
  if (substeps < 1) fail("sim.substeps must be >= 1");
  if (!(detection_delay >= 0.0)) fail("detection delay must be non-negative");
  if (!(plant_ceiling > 0.0)) fail("plant ceiling must be positive");
  if (!initial.flatten().allFinite()) fail("initial state must be finite");
  const ReferenceSpec& r = reference;
  if (!r.hover_point.allFinite() || !r.cruise_velocity.allFinite()) fail("reference points must be finite");
  for (const auto& w : r.waypoints) {
    if (!w.allFinite()) fail("waypoints must be finite");
  }
  if (r.kind == ReferenceKind::kWaypoints && r.waypoints.empty()) fail("waypoint reference needs waypoints");
  if (!(r.speed > 0.0) || !(r.hold >= 0.0) || !(r.descent_rate > 0.0) || !(r.cruise_accel > 0.0)) {
    fail("reference speeds must be positive");
  }
  if (!(r.touchdown_altitude > 0.0)) fail("touchdown altitude must be positive");
}

Scenario hover_scenario(const Vec3& point, double duration) {
  Scenario s;
  s.name = "hover";
  s.duration = duration;
  s.reference.kind = ReferenceKind::kHover;
  s.reference.hover_point = point;
  s.initial.p_b = point;
  s.initial.q_a = s.robot.nominal_posture();
  return s;
}

ReferenceTrajectory::ReferenceTrajectory(const ReferenceSpec& spec, const Vec3& start) : spec_(spec), start_(start) {
  if (spec_.kind != ReferenceKind::kWaypoints) return;
  double t = spec_.hold;
  Vec3 p = start_;
  segments_.push_back({0.0, t, p, p});
  for (const Vec3& w : spec_.waypoints) {
    const double travel = (w - p).norm() / spec_.speed;
    segments_.push_back({t, t + travel, p, w});
    t += travel;
    segments_.push_back({t, t + spec_.hold, w, w});
    t += spec_.hold;
    p = w;
  }
  if (spec_.land) {
    landing_start_ = t;
    Vec3 ground = p;
    ground.z() = spec_.ground_z;
    const double descent = std::max(0.0, p.z() - spec_.ground_z) / spec_.descent_rate;
    segments_.push_back({t, t + descent, p, ground});
  }
}

Vec3 ReferenceTrajectory::position(double t) const {
  if (frozen_) return *frozen_;
  switch (spec_.kind) {
    case ReferenceKind::kHover:
      return spec_.hover_point;
    case ReferenceKind::kCruise: {
      const double tau = std::max(0.0, t - spec_.cruise_start);
      const double v = spec_.cruise_velocity.norm();
      if (v == 0.0) return start_;
      const Vec3 dir = spec_.cruise_velocity / v;
      const double t_ramp = v / spec_.cruise_accel;
      const double s = tau < t_ramp ? 0.5 * spec_.cruise_accel * tau * tau
                                     : 0.5 * v * t_ramp + v * (tau - t_ramp);
      return start_ + s * dir;
    }
    case ReferenceKind::kWaypoints:
      for (const auto& seg : segments_) {
        if (t < seg.t1) {
          const double span = seg.t1 - seg.t0;
          const double a = span > 0.0 ? std::clamp((t - seg.t0) / span, 0.0, 1.0) : 1.0;
          return seg.p0 + a * (seg.p1 - seg.p0);
        }
      }
      return segments_.back().p1;
  }
  return start_;
}

Vec3 ReferenceTrajectory::velocity(double t) const {
  if (frozen_) return Vec3::Zero();
  switch (spec_.kind) {
    case ReferenceKind::kHover:
      return Vec3::Zero();
    case ReferenceKind::kCruise: {
      const double tau = t - spec_.cruise_start;
      if (tau <= 0.0) return Vec3::Zero();
      const double v = spec_.cruise_velocity.norm();
      if (v == 0.0) return Vec3::Zero();
      return std::min(v, spec_.cruise_accel * tau) * spec_.cruise_velocity / v;
    }
    case ReferenceKind::kWaypoints:
      for (const auto& seg : segments_) {
        if (t < seg.t1) {
          const double span = seg.t1 - seg.t0;
          return span > 0.0 ? Vec3((seg.p1 - seg.p0) / span) : Vec3::Zero();
        }
      }
      return Vec3::Zero();
  }
  return Vec3::Zero();
}

void ReferenceTrajectory::freeze(const Vec3& p) { frozen_ = p; }

namespace {

// Plant abstraction over the two models. State is kept as the plant's native vector.
class Plant {
 public:
  Plant(const Scenario& s, const RobotParams& rom_params) : scenario_(s), rom_params_(rom_params) {
    if (s.plant == PlantKind::kHf) {
      hf_ = HfState::from_rom(s.initial).flatten();
    } else {
      rom_ = s.initial.flatten();
    }
  }

  RomState state() const {
    return scenario_.plant == PlantKind::kHf ? HfState::unflatten(hf_).to_rom() : RomState::unflatten(rom_);
  }

  double energy() const { return scenario_.plant == PlantKind::kHf ? total_energy(hf_, scenario_.robot) : 0.0; }

  bool finite() const { return scenario_.plant == PlantKind::kHf ? hf_.allFinite() : rom_.allFinite(); }

  void step(const InputVector& u, double h) {
    if (scenario_.plant == PlantKind::kHf) {
      auto f = [this](const HfVector& x, const InputVector& in) {
        return hf_dynamics(x, in, scenario_.robot, scenario_.drag);
      };
      hf_ = rk4_step(f, hf_, u, h);
    } else {
      RobotParams p = rom_params_;
      if (!scenario_.drag) {
        p.drag_lin.setZero();
        p.drag_ang.setZero();
      }
      auto f = [&p](const RomVector& x, const InputVector& in) { return rom_dynamics(x, in, p); };
      rom_ = rk4_step(f, rom_, u, h);
    }
  }

  // Touchdown: the vehicle comes to rest where it is.
  void settle() {
    if (scenario_.plant == PlantKind::kHf) {
      hf_.tail<kGenDim>().setZero();
    } else {
      rom_.segment<3>(idx::kVel).setZero();
      rom_.segment<3>(idx::kOmega).setZero();
      rom_.segment<4>(idx::kJointRate).setZero();
    }
  }

 private:
  const Scenario& scenario_;
  RobotParams rom_params_;
  HfVector hf_ = HfVector::Zero();
  RomVector rom_ = RomVector::Zero();
};

InputBounds detected_bounds(const Scenario& s, double t, double hover_thrust) {
  const Vec4 loe = loe_vector(s.faults, t - s.detection_delay);
  if (s.loe_normalization == LoeNormalization::kCeiling) return update_detected_bounds(s.nmpc.bounds, loe);
  InputBounds b = s.nmpc.bounds;
  for (int k = 0; k < kNumRotors; ++k) {
    b.thrust_max(k) = std::min(b.thrust_max(k), rotor_ceiling(loe(k), s.plant_ceiling, s.loe_normalization, hover_thrust));
  }
  b.thrust_min = b.thrust_min.cwiseMin(b.thrust_max);
  return b;
}

// Thrusts are regularized toward the last applied command: hover trim in
// nominal flight, and whatever the degraded rotor set sustains after a fault.
Reference build_reference(const ReferenceTrajectory& traj, const ReferenceSpec& spec, const RomState& now, double t,
                          const Vec4& thrust_ref, const NmpcConfig& cfg, const RobotParams& params) {
  Reference ref;
  InputVector u_trim = InputVector::Zero();
  u_trim.head<4>() = thrust_ref;
  for (int j = 0; j < cfg.horizon; ++j) {
    const double tj = t + j * cfg.dt;
    RomState target;
    target.p_b = traj.position(tj);
    target.v_b = traj.velocity(tj);
    target.theta_b = Vec3(0.0, 0.0, now.theta_b.z());  // yaw is free
    if (spec.free_yaw_rate) target.omega_b.z() = now.omega_b.z();
    target.q_a = params.nominal_posture();
    ref.states.push_back(target.flatten());
    ref.inputs.push_back(u_trim);
  }
  return ref;
}

}  // namespace

SimLog run_closed_loop(const Scenario& scenario) {
  scenario.validate();
  const RobotParams rom_params = prediction_params(scenario.robot, scenario.rom_leg_inertia);
  NmpcController controller(scenario.nmpc, rom_params);
  ReferenceTrajectory reference(scenario.reference, scenario.initial.p_b);
  Plant plant(scenario, rom_params);

  const double dt = scenario.nmpc.dt;
  const double h = dt / scenario.substeps;
  const int n_steps = static_cast<int>(std::lround(scenario.duration / dt));
  const double hover_thrust = scenario.robot.hover_thrust();

  SimLog log;
  log.scenario = scenario.name;
  log.dt = dt;
  log.nmpc_fingerprint = fingerprint(scenario.nmpc);
  log.nominal_bounds = scenario.nmpc.bounds;
  log.state_bounds = scenario.nmpc.state_bounds;
  log.fault_time = scenario.faults.first_fault_time();
  log.complete_failure_time = scenario.faults.complete_failure_time();
  log.landing_start = reference.landing_start();
  log.drag_ang_z = scenario.drag ? scenario.robot.drag_ang.z() : 0.0;
  log.rows.reserve(static_cast<std::size_t>(n_steps) + 1);

  bool landed = false;
  Vec4 thrust_ref = Vec4::Constant(hover_thrust);
  for (int i = 0; i <= n_steps; ++i) {
    const double t = i * dt;
    if (!plant.finite()) {
      log.aborted = true;
      log.abort_reason = "plant state became non-finite at t=" + std::to_string(t);
      break;
    }
    const RomState x = plant.state();
    if (!reference.landing_start() && x.p_b.z() < scenario.crash_altitude) {
      log.aborted = true;
      log.abort_reason = "crash: altitude " + std::to_string(x.p_b.z()) + " m at t=" + std::to_string(t);
      break;
    }

    const InputBounds bounds = detected_bounds(scenario, t, hover_thrust);
    if (scenario.reference.hold_on_fault && !reference.frozen() && (bounds.thrust_max.array() < scenario.nmpc.bounds.thrust_max.array()).any()) {
      reference.freeze(x.p_b);
    }

    LogRow row;
    row.t = t;
    row.state = x;
    row.ref_position = reference.position(t);
    row.detected_thrust_max = bounds.thrust_max;

    if (!landed && reference.landing(t) &&
        x.p_b.z() < scenario.reference.ground_z + scenario.reference.touchdown_altitude) {
      landed = true;
      plant.settle();
    }

    ControlInput command;
    if (!landed && scenario.controller == ControllerKind::kNmpc) {
      const Reference ref = build_reference(reference, scenario.reference, x, t, thrust_ref, scenario.nmpc, rom_params);
      const NmpcSolution sol = controller.step(x, ref, bounds);
      command = ControlInput::unflatten(sol.u_seq.front());
      row.solver_iterations = sol.diagnostics.iterations;
      row.solver_cost = sol.diagnostics.final_cost;
      row.solver_grad_norm = sol.diagnostics.grad_norm;
      row.solver_status = sol.diagnostics.status;
      thrust_ref = command.thrusts;
    }
    row.command = command;
    row.landed = landed;
    row.effective_thrust = effective_thrust(command.thrusts, t, scenario.faults, scenario.plant_ceiling,
                                            scenario.loe_normalization, hover_thrust);
    row.thrust_yaw_moment = net_wrench(x.q_a, row.effective_thrust, scenario.robot).torque.z();
    row.energy = plant.energy();
    log.rows.push_back(row);

    if (i == n_steps || landed) {
      if (landed && i < n_steps) continue;  // resting on the ground
      break;
    }
    try {
      for (int s = 0; s < scenario.substeps; ++s) {
        const double ts = t + s * h + kTimeEps;
        InputVector u;
        u << effective_thrust(command.thrusts, ts, scenario.faults, scenario.plant_ceiling,
                              scenario.loe_normalization, hover_thrust),
            command.joint_acc;
        plant.step(u, h);
      }
    } catch (const std::exception& e) {
      log.aborted = true;
      log.abort_reason = std::string("plant integration failed at t=") + std::to_string(t) + ": " + e.what();
      break;
    }
  }
  return log;
}

Metrics compute_metrics(const SimLog& log) {
  Metrics m;
  const auto& rows = log.rows;
  if (rows.empty()) return m;
  const double t_end = rows.back().t;

  auto attitude_deg = [](const LogRow& r) {
    return rad2deg(std::max(std::abs(r.state.theta_b.x()), std::abs(r.state.theta_b.y())));
  };

  m.min_joint_deg = rad2deg(rows.front().state.q_a.minCoeff());
  m.max_joint_deg = rad2deg(rows.front().state.q_a.maxCoeff());
  Vec3 sq_err = Vec3::Zero();
  int tracked = 0;
  for (const auto& r : rows) {
    m.max_attitude_deg = std::max(m.max_attitude_deg, attitude_deg(r));
    m.min_joint_deg = std::min(m.min_joint_deg, rad2deg(r.state.q_a.minCoeff()));
    m.max_joint_deg = std::max(m.max_joint_deg, rad2deg(r.state.q_a.maxCoeff()));
    const double left = r.state.q_a(0) + r.state.q_a(2);
    const double right = r.state.q_a(1) + r.state.q_a(3);
    m.max_side_sum_deg = std::max(m.max_side_sum_deg, rad2deg(std::max(left, right)));
    InputBounds detected = log.nominal_bounds;
    detected.thrust_max = r.detected_thrust_max;
    detected.thrust_min = detected.thrust_min.cwiseMin(detected.thrust_max);
    if (!r.landed && !detected.contains(r.command.flatten())) ++m.bound_violations;
    if (!r.landed) {
      sq_err += (r.state.p_b - r.ref_position).cwiseAbs2();
      ++tracked;
    }
  }
  if (tracked > 0) m.position_rmse = (sq_err / tracked).cwiseSqrt();

  if (log.fault_time) {
    const double tf = *log.fault_time;
    std::optional<double> z_fault;
    double z_min = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const LogRow& r = rows[i];
      if (r.t + kTimeEps < tf) continue;
      if (!z_fault) {
        z_fault = r.state.p_b.z();
        z_min = *z_fault;
      }
      z_min = std::min(z_min, r.state.p_b.z());
      m.max_attitude_after_fault_deg = std::max(m.max_attitude_after_fault_deg, attitude_deg(r));
      if (!m.recovery_time && r.t + kRecoveryDwell <= t_end + kTimeEps) {
        bool inside = true;
        for (std::size_t j = i; j < rows.size() && rows[j].t <= r.t + kRecoveryDwell + kTimeEps; ++j) {
          if (attitude_deg(rows[j]) >= kRecoveryBandDeg) {
            inside = false;
            break;
          }
        }
        if (inside) m.recovery_time = r.t - tf;
      }
    }
    if (z_fault) m.altitude_loss = *z_fault - z_min;
  }

  if (log.complete_failure_time) {
    const double tc = *log.complete_failure_time;
    // The spin persists through the descent until the thrusts are cut at touchdown.
    double window_end = t_end;
    for (const auto& r : rows) {
      if (r.landed) {
        window_end = std::min(window_end, r.t);
        break;
      }
    }
    if (window_end - tc >= kSaturationWindow) {
      double rate_sum = 0.0, moment_sum = 0.0;
      int n = 0;
      for (const auto& r : rows) {
        if (r.t >= window_end - kSaturationWindow - kTimeEps && r.t <= window_end + kTimeEps) {
          rate_sum += r.state.omega_b.z();
          moment_sum += r.thrust_yaw_moment;
          ++n;
        }
      }
      const double sat = rate_sum / n;
      m.yaw_rate_saturation = sat;
      if (log.drag_ang_z > 0.0) m.yaw_rate_fixed_point = moment_sum / n / log.drag_ang_z;
      // Earliest time after which the yaw rate never leaves the band around its final level.
      std::optional<double> entered;
      for (const auto& r : rows) {
        if (r.t + kTimeEps < tc || r.t > window_end + kTimeEps) continue;
        const bool in_band = std::abs(r.state.omega_b.z() - sat) <= kSaturationBand * std::abs(sat);
        if (in_band && !entered) entered = r.t;
        if (!in_band) entered.reset();
      }
      if (entered) m.yaw_saturation_time = *entered - tc;
    }
  }

  for (const auto& r : rows) {
    if (r.landed) {
      m.touchdown_z = r.state.p_b.z();
      m.touchdown_speed = std::abs(r.state.v_b.z());
      m.final_thrust_sum = rows.back().command.thrusts.sum();
      break;
    }
  }
  return m;
}

MatchReport model_matching(const RomState& x0, const std::vector<ControlInput>& u_schedule, const HfParams& params,
                           const RobotParams& rom_params, double dt, int substeps) {
  MatchReport rep;
  const double h = dt / substeps;
  RomVector xr = x0.flatten();
  HfVector xh = HfState::from_rom(x0).flatten();
  auto f_rom = [&rom_params](const RomVector& x, const InputVector& u) { return rom_dynamics(x, u, rom_params); };
  auto f_hf = [&params](const HfVector& x, const InputVector& u) { return hf_dynamics(x, u, params, true); };
  auto record = [&](double t) {
    const RomState a = RomState::unflatten(xr);
    const RomState b = HfState::unflatten(xh).to_rom();
    rep.t.push_back(t);
    rep.rom.push_back(a);
    rep.hf.push_back(b);
    rep.max_position_deviation = rep.max_position_deviation.cwiseMax((a.p_b - b.p_b).cwiseAbs());
    Vec3 de;
    for (int i = 0; i < 3; ++i) de(i) = std::abs(wrap_angle(a.theta_b(i) - b.theta_b(i)));
    rep.max_euler_deviation = rep.max_euler_deviation.cwiseMax(de);
  };
  record(0.0);
  for (std::size_t i = 0; i < u_schedule.size(); ++i) {
    const InputVector u = u_schedule[i].flatten();
    for (int s = 0; s < substeps; ++s) {
      xr = rk4_step(f_rom, xr, u, h);
      xh = rk4_step(f_hf, xh, u, h);
      record(static_cast<double>(i) * dt + (s + 1) * h);
    }
  }
  return rep;
}

MatchSetup failure_match_setup(const Scenario& base, double cut_time, double window) {
  Scenario s = base;
  s.plant = PlantKind::kHf;
  s.controller = ControllerKind::kNmpc;
  s.faults = FaultSchedule({FaultEvent{cut_time, std::numeric_limits<double>::infinity(), 4, 1.0}});
  s.duration = cut_time + window;
  const SimLog log = run_closed_loop(s);
  if (log.aborted) throw std::runtime_error("match setup run aborted: " + log.abort_reason);
  MatchSetup out;
  bool found = false;
  for (const auto& r : log.rows) {
    if (r.t + kTimeEps < cut_time) continue;
    if (!found) {
      out.x0 = r.state;
      found = true;
    }
    if (r.t + kTimeEps >= cut_time + window) break;
    out.schedule.push_back(ControlInput{r.effective_thrust, r.command.joint_acc});
  }
  return out;
}

}  // namespace morphnmpc
