#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morphnmpc/faults.hpp"
#include "morphnmpc/high_fidelity.hpp"
#include "morphnmpc/nmpc.hpp"
#include "morphnmpc/types.hpp"

namespace morphnmpc {

enum class PlantKind { kHf, kRom };
enum class ReferenceKind { kHover, kCruise, kWaypoints };
enum class ControllerKind { kNmpc, kZero };

/**
 * Position reference. Hover holds `hover_point`. Cruise accelerates at
 * cruise_accel from rest at cruise_start up to cruise_velocity. Waypoints are
 * visited in order at `speed`, holding `hold` seconds at the start and at each
 * one; with `land` the final hold is followed by a descent to ground_z at
 * descent_rate.
 */
struct ReferenceSpec {
  ReferenceKind kind = ReferenceKind::kHover;
  Vec3 hover_point = Vec3(0.0, 0.0, 10.0);
  Vec3 cruise_velocity = Vec3(3.5, 0.0, 0.0);
  double cruise_accel = 1.5;
  double cruise_start = 0.5;
  bool hold_on_fault = false;
  // Track the measured yaw rate instead of zero, so the yaw-rate weight only
  // damps changes of the spin within the horizon.
  bool free_yaw_rate = true;
  std::vector<Vec3> waypoints;
  double speed = 0.5;
  double hold = 1.0;
  bool land = false;
  double descent_rate = 0.5;
  double touchdown_altitude = 0.05;
  double ground_z = 0.0;

  bool operator==(const ReferenceSpec&) const = default;
};

struct Scenario {
  std::string name = "hover";
  PlantKind plant = PlantKind::kHf;
  ControllerKind controller = ControllerKind::kNmpc;
  double duration = 10.0;
  ReferenceSpec reference;
  FaultSchedule faults;
  RomState initial;
  HfParams robot;
  NmpcConfig nmpc;
  bool rom_leg_inertia = true;
  int substeps = 10;
  double detection_delay = 0.1;
  LoeNormalization loe_normalization = LoeNormalization::kCeiling;
  double plant_ceiling = 30.0;
  double crash_altitude = -0.5;
  bool drag = true;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

/// Scenario with the robot hovering at `point` in the nominal posture.
Scenario hover_scenario(const Vec3& point = Vec3(0.0, 0.0, 10.0), double duration = 10.0);

/// Time-parameterized reference position/velocity.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory(const ReferenceSpec& spec, const Vec3& start);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  /// Time at which the landing descent begins, if the spec lands.
  std::optional<double> landing_start() const { return landing_start_; }
  bool landing(double t) const { return landing_start_ && t >= *landing_start_; }

  /// Holds `p` from now on.
  void freeze(const Vec3& p);
  bool frozen() const { return frozen_.has_value(); }

 private:
  struct Segment {
    double t0, t1;
    Vec3 p0, p1;
  };
  ReferenceSpec spec_;
  Vec3 start_;
  std::vector<Segment> segments_;
  std::optional<double> landing_start_;
  std::optional<Vec3> frozen_;
};

struct LogRow {
  double t = 0.0;
  RomState state;
  Vec3 ref_position = Vec3::Zero();
  ControlInput command;
  Vec4 effective_thrust = Vec4::Zero();
  Vec4 detected_thrust_max = Vec4::Zero();
  int solver_iterations = 0;
  double solver_cost = 0.0;
  double solver_grad_norm = 0.0;
  SolverStatus solver_status = SolverStatus::kConverged;
  double thrust_yaw_moment = 0.0;  // body z moment of the effective thrusts [N m]
  double energy = 0.0;             // plant total energy; HF only, 0 for the ROM plant
  bool landed = false;
};

struct SimLog {
  std::string scenario;
  double dt = 0.1;
  std::vector<LogRow> rows;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t nmpc_fingerprint = 0;
  InputBounds nominal_bounds;
  StateBounds state_bounds;
  std::optional<double> fault_time;
  std::optional<double> complete_failure_time;
  std::optional<double> landing_start;
  double drag_ang_z = 0.0;
};

/// Closed loop at the NMPC period: measure, solve, apply the first input
/// through the fault model, integrate the plant over `substeps` RK4 substeps.
SimLog run_closed_loop(const Scenario& scenario);

struct Metrics {
  std::optional<double> recovery_time;  // after the first fault
  double max_attitude_deg = 0.0;        // max |roll|, |pitch| over the run
  double max_attitude_after_fault_deg = 0.0;
  Vec3 position_rmse = Vec3::Zero();
  std::optional<double> altitude_loss;  // z at the fault minus the lowest z after it
  std::optional<double> yaw_rate_saturation;
  std::optional<double> yaw_rate_fixed_point;  // mean thrust yaw moment / drag_ang_z
  std::optional<double> yaw_saturation_time;   // after complete failure
  std::optional<double> touchdown_speed;
  std::optional<double> touchdown_z;
  std::optional<double> final_thrust_sum;
  int bound_violations = 0;  // commanded inputs outside the detected bounds
  double max_side_sum_deg = 0.0;
  double min_joint_deg = 0.0;
  double max_joint_deg = 0.0;
};

inline constexpr double kRecoveryBandDeg = 10.0;
inline constexpr double kRecoveryDwell = 1.0;
inline constexpr double kSaturationBand = 0.05;
inline constexpr double kSaturationWindow = 2.0;

Metrics compute_metrics(const SimLog& log);

struct MatchReport {
  Vec3 max_position_deviation = Vec3::Zero();
  Vec3 max_euler_deviation = Vec3::Zero();  // [rad]
  std::vector<double> t;
  std::vector<RomState> rom;
  std::vector<RomState> hf;
};

/**
 * Open-loop ROM and HF runs from the same state under the same per-period
 * inputs (held over each period of length dt, integrated at dt / substeps).
 */
MatchReport model_matching(const RomState& x0, const std::vector<ControlInput>& u_schedule, const HfParams& params,
                           const RobotParams& rom_params, double dt = 0.1, int substeps = 10);

struct MatchSetup {
  RomState x0;                         // plant state at the failure instant
  std::vector<ControlInput> schedule;  // effective inputs after the failure
};

/// Hover under NMPC on the HF plant, cut rotor 4 at `cut_time`, and record the
/// plant state at the cut and the effective inputs applied over `window`.
MatchSetup failure_match_setup(const Scenario& base, double cut_time = 0.2, double window = 0.5);

}  // namespace morphnmpc
