#include "morphnmpc/nmpc.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/integrator.hpp"
#include "morphnmpc/rotation.hpp"

namespace morphnmpc {

namespace {

using SensMatrix = Eigen::Matrix<double, kRomStateDim, Eigen::Dynamic>;
using RomMatrix = Eigen::Matrix<double, kRomStateDim, kRomStateDim>;

constexpr double kInf = std::numeric_limits<double>::infinity();

RomVector tracking_error(const RomVector& x, const RomVector& ref) {
  RomVector e = x - ref;
  for (int i = idx::kEuler; i < idx::kEuler + 3; ++i) e(i) = wrap_angle(e(i));
  return e;
}

// Gradient and Gauss-Newton curvature of state_penalty.
void penalty_derivatives(const RomVector& x, const NmpcConfig& cfg, RomVector& grad, RomMatrix& curv) {
  const double w = cfg.penalty_weight;
  const StateBounds& sb = cfg.state_bounds;
  for (int i : {idx::kRoll, idx::kPitch}) {
    const double over = std::abs(x(i)) - sb.roll_pitch_max;
    if (over > 0.0) {
      grad(i) += 2.0 * w * over * (x(i) > 0.0 ? 1.0 : -1.0);
      curv(i, i) += 2.0 * w;
    }
  }
  for (int k = 0; k < kNumRotors; ++k) {
    const int i = idx::kJoint + k;
    if (x(i) < sb.joint_min) {
      grad(i) += 2.0 * w * (x(i) - sb.joint_min);
      curv(i, i) += 2.0 * w;
    } else if (x(i) > sb.joint_max) {
      grad(i) += 2.0 * w * (x(i) - sb.joint_max);
      curv(i, i) += 2.0 * w;
    }
  }
  for (int side = 0; side < 2; ++side) {
    const int a = idx::kJoint + side;
    const int b = idx::kJoint + side + 2;
    const double over = x(a) + x(b) - sb.side_sum_max;
    if (over > 0.0) {
      grad(a) += 2.0 * w * over;
      grad(b) += 2.0 * w * over;
      curv(a, a) += 2.0 * w;
      curv(a, b) += 2.0 * w;
      curv(b, a) += 2.0 * w;
      curv(b, b) += 2.0 * w;
    }
  }
}

InputVector input_reference(const Reference& ref, int j) {
  if (ref.inputs.empty()) return InputVector::Zero();
  return ref.inputs[static_cast<std::size_t>(std::min<int>(j, static_cast<int>(ref.inputs.size()) - 1))];
}

void check_reference(const Reference& ref, const NmpcConfig& cfg) {
  if (static_cast<int>(ref.states.size()) < cfg.horizon) {
    throw std::invalid_argument("reference shorter than the prediction horizon");
  }
}

Eigen::VectorXd stack(const InputSequence& u_seq) {
  Eigen::VectorXd U(kInputDim * static_cast<Eigen::Index>(u_seq.size()));
  for (std::size_t j = 0; j < u_seq.size(); ++j) U.segment<kInputDim>(kInputDim * static_cast<Eigen::Index>(j)) = u_seq[j];
  return U;
}

InputSequence unstack(const Eigen::VectorXd& U) {
  InputSequence u_seq(static_cast<std::size_t>(U.size() / kInputDim));
  for (std::size_t j = 0; j < u_seq.size(); ++j) u_seq[j] = U.segment<kInputDim>(kInputDim * static_cast<Eigen::Index>(j));
  return u_seq;
}

double safe_cost(const RomVector& x0, const InputSequence& u_seq, const Reference& ref, const NmpcConfig& cfg,
                 const RobotParams& params) {
  try {
    const double J = total_cost(rollout(x0, u_seq, cfg, params), u_seq, ref, cfg);
    return std::isfinite(J) ? J : kInf;
  } catch (const NonFiniteError&) {
    return kInf;
  } catch (const GimbalLockError&) {
    return kInf;
  }
}

struct Derivatives {
  double cost = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd gauss_newton;
};

// Forward sensitivities S_j = dx_j/dU propagated through every RK4 stage.
Derivatives differentiate(const RomVector& x0, const InputSequence& u_seq, const Reference& ref,
                          const NmpcConfig& cfg, const RobotParams& params) {
  check_reference(ref, cfg);
  const int N = cfg.horizon;
  const int n_u = kInputDim * N;
  const double h = cfg.dt;
  const RomVector q_diag = cfg.weights.state_diagonal();
  const InputVector r_diag = cfg.weights.input_diagonal();

  Derivatives d;
  d.grad = Eigen::VectorXd::Zero(n_u);
  d.gauss_newton = Eigen::MatrixXd::Zero(n_u, n_u);

  auto accumulate_state = [&](const RomVector& x, const SensMatrix& S, int j) {
    RomVector g = RomVector::Zero();
    RomMatrix W = RomMatrix::Zero();
    if (j < N) {
      const RomVector e = tracking_error(x, ref.states[static_cast<std::size_t>(j)]);
      d.cost += e.dot(q_diag.cwiseProduct(e));
      g += 2.0 * q_diag.cwiseProduct(e);
      W.diagonal() += 2.0 * q_diag;
    }
    if (j > 0) {
      d.cost += state_penalty(x, cfg);
      penalty_derivatives(x, cfg, g, W);
    }
    if (j == 0) return;  // x_0 does not depend on U
    d.grad.noalias() += S.transpose() * g;
    d.gauss_newton.noalias() += S.transpose() * W * S;
  };

  RomVector x = x0;
  SensMatrix S = SensMatrix::Zero(kRomStateDim, n_u);
  accumulate_state(x, S, 0);
  for (int j = 0; j < N; ++j) {
    const InputVector& u = u_seq[static_cast<std::size_t>(j)];
    const Eigen::Index col = kInputDim * j;
    auto stage = [&](const RomVector& y, const SensMatrix& dy, RomVector& k, SensMatrix& dk) {
      k = rom_dynamics(y, u, params);
      if (!k.allFinite()) throw NonFiniteError("non-finite prediction stage");
      const auto jac = rom_jacobian(y, u, params);
      dk.noalias() = jac.leftCols<kRomStateDim>() * dy;
      dk.middleCols<kInputDim>(col) += jac.rightCols<kInputDim>();
    };
    RomVector k1, k2, k3, k4;
    SensMatrix dk1(kRomStateDim, n_u), dk2(kRomStateDim, n_u), dk3(kRomStateDim, n_u), dk4(kRomStateDim, n_u);
    stage(x, S, k1, dk1);
    stage(x + 0.5 * h * k1, S + 0.5 * h * dk1, k2, dk2);
    stage(x + 0.5 * h * k2, S + 0.5 * h * dk2, k3, dk3);
    stage(x + h * k3, S + h * dk3, k4, dk4);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    S = S + (h / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);

    const InputVector du = u - input_reference(ref, j);
    d.cost += du.dot(r_diag.cwiseProduct(du));
    d.grad.segment<kInputDim>(col) += 2.0 * r_diag.cwiseProduct(du);
    d.gauss_newton.diagonal().segment<kInputDim>(col) += 2.0 * r_diag;

    accumulate_state(x, S, j + 1);
  }
  return d;
}

Eigen::VectorXd project(const Eigen::VectorXd& U, const InputBounds& bounds) {
  Eigen::VectorXd P = U;
  const InputVector lo = bounds.lower();
  const InputVector hi = bounds.upper();
  for (Eigen::Index j = 0; j < U.size() / kInputDim; ++j) {
    P.segment<kInputDim>(kInputDim * j) = P.segment<kInputDim>(kInputDim * j).cwiseMax(lo).cwiseMin(hi);
  }
  return P;
}

double projected_gradient_norm(const Eigen::VectorXd& U, const Eigen::VectorXd& g, const InputBounds& bounds) {
  return (project(U - g, bounds) - U).norm();
}

void append(std::string& out, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.17g;", key, v);
  out += buf;
}

void append(std::string& out, const char* key, const Vec4& v) {
  for (int i = 0; i < 4; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s[%d]", key, i);
    append(out, name, v(i));
  }
}

}  // namespace

InputVector InputBounds::lower() const {
  InputVector v;
  v << thrust_min, joint_acc_min;
  return v;
}

InputVector InputBounds::upper() const {
  InputVector v;
  v << thrust_max, joint_acc_max;
  return v;
}

InputVector InputBounds::clamp(const InputVector& u) const { return u.cwiseMax(lower()).cwiseMin(upper()); }

bool InputBounds::contains(const InputVector& u) const {
  return (u.array() >= lower().array()).all() && (u.array() <= upper().array()).all();
}

void InputBounds::validate() const {
  if (!lower().allFinite() || !upper().allFinite()) throw ConfigError("input bounds must be finite");
  if ((lower().array() > upper().array()).any()) throw ConfigError("input bounds need min <= max");
  if ((thrust_min.array() < 0.0).any()) throw ConfigError("thrust_min must be non-negative");
}

void StateBounds::validate() const {
  if (!(roll_pitch_max > 0.0)) throw ConfigError("roll/pitch limit must be positive");
  if (!(joint_min < joint_max)) throw ConfigError("joint range must be nonempty");
  if (!(side_sum_max > 2.0 * joint_min)) throw ConfigError("joint side-sum ceiling is unreachable");
}

RomVector CostWeights::state_diagonal() const {
  RomVector q;
  q << Vec3::Constant(position), roll_pitch, roll_pitch, yaw, Vec4::Constant(joint), Vec3::Constant(velocity),
      roll_pitch_rate, roll_pitch_rate, yaw_rate, Vec4::Constant(joint_rate);
  return q;
}

InputVector CostWeights::input_diagonal() const {
  InputVector r;
  r << Vec4::Constant(thrust), Vec4::Constant(joint_acc);
  return r;
}

void NmpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("nmpc.horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("nmpc.dt must be positive");
  if ((weights.state_diagonal().array() < 0.0).any() || !weights.state_diagonal().allFinite()) {
    throw ConfigError("state weights must be non-negative");
  }
  if (!(weights.thrust > 0.0)) throw ConfigError("nmpc.r_thrust must be positive");
  if (!(weights.joint_acc >= 0.0)) throw ConfigError("nmpc.r_joint_acc must be non-negative");
  bounds.validate();
  state_bounds.validate();
  if (!(penalty_weight >= 0.0)) throw ConfigError("nmpc.penalty_weight must be non-negative");
  if (max_iters < 1) throw ConfigError("nmpc.max_iters must be >= 1");
  if (!(grad_tol >= 0.0)) throw ConfigError("nmpc.grad_tol must be non-negative");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("nmpc.armijo must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("nmpc.backtrack must lie in (0, 1)");
  if (max_backtracks < 1) throw ConfigError("nmpc.max_backtracks must be >= 1");
}

std::string describe(const NmpcConfig& cfg) {
  std::string s;
  append(s, "horizon", cfg.horizon);
  append(s, "dt", cfg.dt);
  const RomVector q = cfg.weights.state_diagonal();
  const InputVector r = cfg.weights.input_diagonal();
  for (int i = 0; i < kRomStateDim; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "Q%d", i);
    append(s, name, q(i));
  }
  for (int i = 0; i < kInputDim; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "R%d", i);
    append(s, name, r(i));
  }
  append(s, "thrust_min", cfg.bounds.thrust_min);
  append(s, "thrust_max", cfg.bounds.thrust_max);
  append(s, "joint_acc_min", cfg.bounds.joint_acc_min);
  append(s, "joint_acc_max", cfg.bounds.joint_acc_max);
  append(s, "roll_pitch_max", cfg.state_bounds.roll_pitch_max);
  append(s, "joint_min", cfg.state_bounds.joint_min);
  append(s, "joint_max", cfg.state_bounds.joint_max);
  append(s, "side_sum_max", cfg.state_bounds.side_sum_max);
  append(s, "penalty_weight", cfg.penalty_weight);
  append(s, "max_iters", cfg.max_iters);
  append(s, "grad_tol", cfg.grad_tol);
  append(s, "armijo", cfg.armijo);
  append(s, "backtrack", cfg.backtrack);
  append(s, "max_backtracks", cfg.max_backtracks);
  return s;
}

std::uint64_t fingerprint(const NmpcConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : describe(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

StateTrajectory rollout(const RomVector& x0, const InputSequence& u_seq, const NmpcConfig& cfg,
                        const RobotParams& params) {
  StateTrajectory traj;
  traj.reserve(u_seq.size() + 1);
  traj.push_back(x0);
  auto f = [&params](const RomVector& x, const InputVector& u) { return rom_dynamics(x, u, params); };
  for (const auto& u : u_seq) traj.push_back(rk4_step(f, traj.back(), u, cfg.dt));
  return traj;
}

double stage_cost(const RomVector& x, const RomVector& ref, const NmpcConfig& cfg) {
  const RomVector e = tracking_error(x, ref);
  return e.dot(cfg.weights.state_diagonal().cwiseProduct(e));
}

double state_penalty(const RomVector& x, const NmpcConfig& cfg) {
  const StateBounds& sb = cfg.state_bounds;
  auto sq = [](double v) { return v > 0.0 ? v * v : 0.0; };
  double p = sq(std::abs(x(idx::kRoll)) - sb.roll_pitch_max) + sq(std::abs(x(idx::kPitch)) - sb.roll_pitch_max);
  for (int k = 0; k < kNumRotors; ++k) {
    const double q = x(idx::kJoint + k);
    p += sq(sb.joint_min - q) + sq(q - sb.joint_max);
  }
  p += sq(x(idx::kJoint) + x(idx::kJoint + 2) - sb.side_sum_max);
  p += sq(x(idx::kJoint + 1) + x(idx::kJoint + 3) - sb.side_sum_max);
  return cfg.penalty_weight * p;
}

double total_cost(const StateTrajectory& traj, const InputSequence& u_seq, const Reference& ref,
                  const NmpcConfig& cfg) {
  check_reference(ref, cfg);
  const int N = static_cast<int>(u_seq.size());
  if (static_cast<int>(traj.size()) != N + 1) throw std::invalid_argument("trajectory/input length mismatch");
  const InputVector r_diag = cfg.weights.input_diagonal();
  double J = 0.0;
  for (int j = 0; j < N; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    J += stage_cost(traj[sj], ref.states[sj], cfg);
    const InputVector du = u_seq[sj] - input_reference(ref, j);
    J += du.dot(r_diag.cwiseProduct(du));
  }
  for (int j = 1; j <= N; ++j) J += state_penalty(traj[static_cast<std::size_t>(j)], cfg);
  return J;
}

Eigen::VectorXd cost_gradient(const RomVector& x0, const InputSequence& u_seq, const Reference& ref,
                              const NmpcConfig& cfg, const RobotParams& params) {
  if (static_cast<int>(u_seq.size()) != cfg.horizon) throw std::invalid_argument("input sequence length != horizon");
  return differentiate(x0, u_seq, ref, cfg, params).grad;
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kMaxIterations: return "max_iters";
    case SolverStatus::kStalled: return "stalled";
    case SolverStatus::kFailure: return "failure";
  }
  return "unknown";
}

InputSequence shift_warm_start(const InputSequence& previous) {
  if (previous.empty()) return previous;
  InputSequence shifted(previous.begin() + 1, previous.end());
  shifted.push_back(previous.back());
  return shifted;
}

NmpcSolution solve(const RomVector& x0, const Reference& ref, const InputSequence& warm_start,
                   const NmpcConfig& cfg, const RobotParams& params, const InputBounds& bounds) {
  if (!x0.allFinite()) throw std::invalid_argument("initial state is not finite");
  if (static_cast<int>(warm_start.size()) != cfg.horizon) throw std::invalid_argument("warm start length != horizon");
  bounds.validate();
  check_reference(ref, cfg);

  NmpcSolution sol;
  SolverDiagnostics& diag = sol.diagnostics;
  Eigen::VectorXd U = project(stack(warm_start), bounds);
  const Eigen::Index n = U.size();
  const Eigen::VectorXd lo = project(Eigen::VectorXd::Constant(n, -kInf), bounds);
  const Eigen::VectorXd hi = project(Eigen::VectorXd::Constant(n, kInf), bounds);

  Derivatives d;
  try {
    d = differentiate(x0, unstack(U), ref, cfg, params);
  } catch (const std::runtime_error&) {
    sol.u_seq = unstack(U);
    diag.status = SolverStatus::kFailure;
    diag.final_cost = diag.initial_cost = kInf;
    return sol;
  } catch (const GimbalLockError&) {
    sol.u_seq = unstack(U);
    diag.status = SolverStatus::kFailure;
    diag.final_cost = diag.initial_cost = kInf;
    return sol;
  }
  diag.initial_cost = d.cost;
  if (cfg.record_iterates) diag.iterates.push_back(unstack(U));
  diag.status = SolverStatus::kMaxIterations;

  for (int it = 0; it < cfg.max_iters; ++it) {
    diag.grad_norm = projected_gradient_norm(U, d.grad, bounds);
    if (diag.grad_norm <= cfg.grad_tol) {
      diag.status = SolverStatus::kConverged;
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    constexpr double kActiveEps = 1e-12;
    std::vector<Eigen::Index> free;
    free.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = U(i) <= lo(i) + kActiveEps && d.grad(i) > 0.0;
      const bool at_hi = U(i) >= hi(i) - kActiveEps && d.grad(i) < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }

    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd H(nf, nf);
      Eigen::VectorXd g(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        g(a) = d.grad(free[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < nf; ++b) {
          H(a, b) = d.gauss_newton(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      Eigen::VectorXd step = -g;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::VectorXd newton = -ldlt.solve(g);
        if (newton.allFinite() && newton.dot(g) < 0.0) step = newton;
      }
      for (Eigen::Index a = 0; a < nf; ++a) dir(free[static_cast<std::size_t>(a)]) = step(a);
    }

    // Backtracking along the projection arc; fall back to the raw gradient.
    bool accepted = false;
    for (const Eigen::VectorXd& search : {dir, Eigen::VectorXd(-d.grad)}) {
      double alpha = 1.0;
      for (int bt = 0; bt < cfg.max_backtracks; ++bt, alpha *= cfg.backtrack) {
        const Eigen::VectorXd trial = project(U + alpha * search, bounds);
        const Eigen::VectorXd delta = trial - U;
        if (delta.squaredNorm() == 0.0) break;
        const double J = safe_cost(x0, unstack(trial), ref, cfg, params);
        if (J <= d.cost + cfg.armijo * d.grad.dot(delta) && J < d.cost) {
          U = trial;
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    diag.iterations = it + 1;
    if (!accepted) {
      diag.status = it == 0 ? SolverStatus::kFailure : SolverStatus::kStalled;
      break;
    }
    if (cfg.record_iterates) diag.iterates.push_back(unstack(U));
    d = differentiate(x0, unstack(U), ref, cfg, params);
  }
  if (diag.status == SolverStatus::kMaxIterations) diag.grad_norm = projected_gradient_norm(U, d.grad, bounds);
  if (diag.status == SolverStatus::kStalled || diag.status == SolverStatus::kFailure) {
    diag.grad_norm = projected_gradient_norm(U, d.grad, bounds);
  }
  diag.final_cost = d.cost;
  sol.u_seq = unstack(U);
  return sol;
}

InputBounds update_detected_bounds(const InputBounds& current, const Vec4& fault_estimate) {
  InputBounds out = current;
  for (int k = 0; k < kNumRotors; ++k) {
    const double loe = fault_estimate(k);
    if (!(loe >= 0.0 && loe <= 1.0)) throw std::invalid_argument("LoE estimate must lie in [0, 1]");
    out.thrust_max(k) = current.thrust_max(k) * (1.0 - loe);
  }
  out.thrust_min = out.thrust_min.cwiseMin(out.thrust_max);
  return out;
}

NmpcController::NmpcController(NmpcConfig cfg, RobotParams params) : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
}

NmpcSolution NmpcController::step(const RomState& x0, const Reference& ref, const InputBounds& detected_bounds) {
  InputSequence warm;
  if (static_cast<int>(warm_.size()) == cfg_.horizon) {
    warm = shift_warm_start(warm_);
  } else {
    for (int j = 0; j < cfg_.horizon; ++j) warm.push_back(ref.inputs.empty() ? InputVector::Zero() : input_reference(ref, j));
  }
  NmpcSolution sol = solve(x0.flatten(), ref, warm, cfg_, params_, detected_bounds);
  warm_ = sol.u_seq;
  return sol;
}

}  // namespace morphnmpc
