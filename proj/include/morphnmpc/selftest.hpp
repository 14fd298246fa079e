#pragma once

// Numerical invariant suite: integrator order, mass-matrix and Coriolis
// structure, energy conservation, NMPC gradient and the hover fixed point.

#include <string>
#include <vector>

#include "morphnmpc/high_fidelity.hpp"

namespace morphnmpc {

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string bound;  // human-readable tolerance
  bool passed = false;
};

/// Log-log slope of the RK4 endpoint error on the ROM over 1 s
/// (h = 0.04 .. 0.005, reference at h / 64).
double rk4_convergence_slope(const RobotParams& params);

/// Smallest eigenvalue of M(q) over `samples` random postures (seeded).
double min_mass_eigenvalue(const HfParams& params, int samples, unsigned seed);

/// max |N + N^T| with N = Mdot - 2C, over `samples` random (q, qd).
double christoffel_skew_residual(const HfParams& params, int samples, unsigned seed);

/// Relative total-energy drift of the passive HF model (no thrust, no joint
/// torque, no drag) over `duration` at step h.
double hf_energy_drift(const HfParams& params, double duration = 1.0, double h = 1e-3);

/// Worst relative error of cost_gradient against central differences.
double max_gradient_error(const RobotParams& params, int instances, unsigned seed);

/// max |dx/dt| of ROM and HF at hover with every rotor at params.hover_thrust().
double hover_residual(const HfParams& params);

std::vector<CheckResult> run_invariant_suite(const HfParams& params, unsigned seed);

}  // namespace morphnmpc
