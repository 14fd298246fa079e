#include "morphnmpc/faults.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace morphnmpc {

FaultSchedule::FaultSchedule(std::vector<FaultEvent> events) : events_(std::move(events)) {
  for (const auto& e : events_) {
    if (e.rotor < 1 || e.rotor > kNumRotors) {
      throw ConfigError("fault rotor index " + std::to_string(e.rotor) + " is outside 1..4");
    }
    if (!(e.loe >= 0.0 && e.loe <= 1.0)) throw ConfigError("fault loe must lie in [0, 1]");
    if (!std::isfinite(e.t_start) || !(e.t_end > e.t_start)) {
      throw ConfigError("fault interval must satisfy start < end");
    }
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    for (std::size_t j = i + 1; j < events_.size(); ++j) {
      const auto& a = events_[i];
      const auto& b = events_[j];
      if (a.rotor == b.rotor && a.t_start < b.t_end && b.t_start < a.t_end) {
        throw ConfigError("overlapping fault intervals on rotor " + std::to_string(a.rotor));
      }
    }
  }
}

std::optional<double> FaultSchedule::first_fault_time() const {
  std::optional<double> t;
  for (const auto& e : events_) {
    if (!t || e.t_start < *t) t = e.t_start;
  }
  return t;
}

std::optional<double> FaultSchedule::complete_failure_time() const {
  std::optional<double> t;
  for (const auto& e : events_) {
    if (e.loe >= 1.0 && (!t || e.t_start < *t)) t = e.t_start;
  }
  return t;
}

FaultSchedule FaultSchedule::shifted_to(double t0) const {
  const auto first = first_fault_time();
  if (!first) return *this;
  const double dt = t0 - *first;
  std::vector<FaultEvent> moved = events_;
  for (auto& e : moved) {
    e.t_start += dt;
    e.t_end += dt;
  }
  return FaultSchedule(std::move(moved));
}

double loe_at(const FaultSchedule& schedule, int rotor, double t) {
  for (const auto& e : schedule.events()) {
    if (e.rotor == rotor && e.active_at(t)) return e.loe;
  }
  return 0.0;
}

Vec4 loe_vector(const FaultSchedule& schedule, double t) {
  Vec4 loe;
  for (int k = 0; k < kNumRotors; ++k) loe(k) = loe_at(schedule, k + 1, t);
  return loe;
}

double rotor_ceiling(double loe, double plant_ceiling, LoeNormalization norm, double hover_thrust) {
  if (loe <= 0.0) return plant_ceiling;
  if (norm == LoeNormalization::kCeiling || loe >= 1.0) return plant_ceiling * (1.0 - loe);
  return std::max(0.0, plant_ceiling - loe * hover_thrust);
}

Vec4 effective_thrust(const Vec4& commanded, double t, const FaultSchedule& schedule, double plant_ceiling,
                      LoeNormalization norm, double hover_thrust) {
  Vec4 out;
  for (int k = 0; k < kNumRotors; ++k) {
    const double cap = rotor_ceiling(loe_at(schedule, k + 1, t), plant_ceiling, norm, hover_thrust);
    out(k) = std::min(commanded(k), cap);
  }
  return out;
}

}  // namespace morphnmpc
