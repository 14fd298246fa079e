#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "morphnmpc/types.hpp"

namespace morphnmpc {

/// Fixed step over one control period: h is the plant substep, substeps per period.
struct StepSpec {
  double h = 0.01;
  int substeps = 10;

  void validate() const {
    if (!(h > 0.0)) throw ConfigError("step size h must be positive");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
  }
};

namespace detail {
template <typename Vec>
void require_finite(const Vec& k, const char* stage) {
  if (!k.allFinite()) throw NonFiniteError(std::string("non-finite RK4 stage ") + stage);
}
}  // namespace detail

/// Classical RK4 with the input held over the step. f(x, u) returns dx/dt.
template <typename F, typename Vec, typename Input>
Vec rk4_step(F&& f, const Vec& x, const Input& u, double h) {
  const Vec k1 = f(x, u);
  detail::require_finite(k1, "k1");
  const Vec k2 = f(Vec(x + (0.5 * h) * k1), u);
  detail::require_finite(k2, "k2");
  const Vec k3 = f(Vec(x + (0.5 * h) * k2), u);
  detail::require_finite(k3, "k3");
  const Vec k4 = f(Vec(x + h * k3), u);
  detail::require_finite(k4, "k4");
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// n held-input RK4 steps; returns the n + 1 visited states including x0.
template <typename F, typename Vec, typename Input>
std::vector<Vec> integrate_held(F&& f, const Vec& x0, const Input& u, double h, int n) {
  std::vector<Vec> traj;
  traj.reserve(static_cast<std::size_t>(n) + 1);
  traj.push_back(x0);
  for (int i = 0; i < n; ++i) traj.push_back(rk4_step(f, traj.back(), u, h));
  return traj;
}

}  // namespace morphnmpc
