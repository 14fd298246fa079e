#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "morphnmpc/types.hpp"

namespace morphnmpc {

struct InputBounds {
  Vec4 thrust_min = Vec4::Zero();
  Vec4 thrust_max = Vec4::Constant(30.0);
  Vec4 joint_acc_min = Vec4::Constant(-50.0);
  Vec4 joint_acc_max = Vec4::Constant(50.0);

  InputVector lower() const;
  InputVector upper() const;
  InputVector clamp(const InputVector& u) const;
  bool contains(const InputVector& u) const;
  void validate() const;
  bool operator==(const InputBounds&) const = default;
};

/// Soft state limits, enforced through quadratic penalties.
struct StateBounds {
  double roll_pitch_max = deg2rad(90.0);
  double joint_min = 0.0;
  double joint_max = deg2rad(90.0);
  double side_sum_max = deg2rad(110.0);  // q_a on legs {0, 2} and on legs {1, 3}

  void validate() const;
  bool operator==(const StateBounds&) const = default;
};

/// Diagonal Q and R, named by the state/input group they weight.
struct CostWeights {
  double position = 10.0;
  double roll_pitch = 50.0;
  double yaw = 0.0;
  double joint = 0.5;
  double velocity = 1.0;
  double roll_pitch_rate = 0.5;
  double yaw_rate = 0.1;
  double joint_rate = 0.1;
  double thrust = 1e-3;
  double joint_acc = 1e-2;

  RomVector state_diagonal() const;
  InputVector input_diagonal() const;
  bool operator==(const CostWeights&) const = default;
};

struct NmpcConfig {
  int horizon = 5;
  double dt = 0.1;
  CostWeights weights;
  InputBounds bounds;
  StateBounds state_bounds;
  double penalty_weight = 1e3;
  int max_iters = 20;
  double grad_tol = 1e-6;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  bool record_iterates = false;

  void validate() const;
  bool operator==(const NmpcConfig&) const = default;
};

/// Canonical text of every field, used for hashing.
std::string describe(const NmpcConfig& cfg);
/// FNV-1a of describe(cfg).
std::uint64_t fingerprint(const NmpcConfig& cfg);

/**
 * Targets over the horizon. states[j] is compared with the predicted x_j for
 * j = 0 .. horizon - 1; inputs[j], if present, is the input the R term is
 * measured from (zero when empty).
 */
struct Reference {
  std::vector<RomVector> states;
  std::vector<InputVector> inputs;
};

using InputSequence = std::vector<InputVector>;
using StateTrajectory = std::vector<RomVector>;

StateTrajectory rollout(const RomVector& x0, const InputSequence& u_seq, const NmpcConfig& cfg,
                        const RobotParams& params);

/// Quadratic tracking cost plus state-bound penalties on x_1 .. x_N.
double total_cost(const StateTrajectory& traj, const InputSequence& u_seq, const Reference& ref,
                  const NmpcConfig& cfg);

/// State part of one stage: (x - ref)^T Q (x - ref), roll/pitch/yaw errors wrapped.
double stage_cost(const RomVector& x, const RomVector& ref, const NmpcConfig& cfg);

/// Penalty for leaving StateBounds; exactly zero strictly inside them.
double state_penalty(const RomVector& x, const NmpcConfig& cfg);

/// dJ/dU stacked as [u_0; u_1; ...], via forward sensitivities through RK4.
Eigen::VectorXd cost_gradient(const RomVector& x0, const InputSequence& u_seq, const Reference& ref,
                              const NmpcConfig& cfg, const RobotParams& params);

enum class SolverStatus { kConverged, kMaxIterations, kStalled, kFailure };

const char* to_string(SolverStatus s);

struct SolverDiagnostics {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double grad_norm = 0.0;  // projected gradient norm at the returned iterate
  SolverStatus status = SolverStatus::kFailure;
  std::vector<InputSequence> iterates;  // only with cfg.record_iterates
};

struct NmpcSolution {
  InputSequence u_seq;
  SolverDiagnostics diagnostics;
};

/// Shift by one step and repeat the last input.
InputSequence shift_warm_start(const InputSequence& previous);

/**
 * Box-constrained minimization of total_cost over the horizon inputs. Each
 * iterate is a projected step on `bounds`: the free variables move along the
 * Gauss-Newton-scaled negative gradient, the step is backtracked until the
 * Armijo condition holds, and the result is projected back onto the box.
 */
NmpcSolution solve(const RomVector& x0, const Reference& ref, const InputSequence& warm_start,
                   const NmpcConfig& cfg, const RobotParams& params, const InputBounds& bounds);

/// Scales thrust_max by (1 - loe_k); nothing else changes.
InputBounds update_detected_bounds(const InputBounds& current, const Vec4& fault_estimate);

/// Receding-horizon wrapper that keeps the previous solution as warm start.
class NmpcController {
 public:
  NmpcController(NmpcConfig cfg, RobotParams params);

  NmpcSolution step(const RomState& x0, const Reference& ref, const InputBounds& detected_bounds);
  void reset() { warm_.clear(); }

  const NmpcConfig& config() const { return cfg_; }
  const RobotParams& params() const { return params_; }

 private:
  NmpcConfig cfg_;
  RobotParams params_;
  InputSequence warm_;
};

}  // namespace morphnmpc
