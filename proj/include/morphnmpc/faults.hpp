#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "morphnmpc/types.hpp"

namespace morphnmpc {

/// How a loss-of-effectiveness fraction limits a rotor.
enum class LoeNormalization {
  kCeiling,  // cap = ceiling * (1 - loe)
  kHover,    // cap = ceiling - loe * hover_thrust; a complete failure (loe = 1) still caps at 0
};

struct FaultEvent {
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();  // exclusive; infinity = open-ended
  int rotor = 1;                                           // 1-based
  double loe = 1.0;

  bool active_at(double t) const { return t >= t_start && t < t_end; }
  bool operator==(const FaultEvent&) const = default;
};

/// Piecewise-constant per-rotor loss of effectiveness. Intervals for one rotor
/// must not overlap; the constructor rejects schedules that do.
class FaultSchedule {
 public:
  FaultSchedule() = default;
  explicit FaultSchedule(std::vector<FaultEvent> events);

  const std::vector<FaultEvent>& events() const { return events_; }
  bool empty() const { return events_.empty(); }

  /// Start of the earliest event, if any.
  std::optional<double> first_fault_time() const;
  /// Start of the earliest event with loe == 1.
  std::optional<double> complete_failure_time() const;

  /// Same events shifted so the earliest one starts at t0.
  FaultSchedule shifted_to(double t0) const;

  bool operator==(const FaultSchedule&) const = default;

 private:
  std::vector<FaultEvent> events_;
};

/// rotor is 1-based. Returns 0 outside every event.
double loe_at(const FaultSchedule& schedule, int rotor, double t);

Vec4 loe_vector(const FaultSchedule& schedule, double t);

/// Per-rotor thrust cap under the given LoE fractions.
double rotor_ceiling(double loe, double plant_ceiling, LoeNormalization norm, double hover_thrust);

/// What the rotors actually deliver: min(commanded, cap_k(t)).
Vec4 effective_thrust(const Vec4& commanded, double t, const FaultSchedule& schedule, double plant_ceiling,
                      LoeNormalization norm = LoeNormalization::kCeiling, double hover_thrust = 0.0);

}  // namespace morphnmpc
