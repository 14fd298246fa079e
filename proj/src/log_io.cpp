#include "morphnmpc/log_io.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace morphnmpc {
namespace {

using Getter = std::function<double(const LogRow&)>;

struct Channel {
  std::string name;
  Getter get;
};

std::vector<Channel> make_channels() {
  std::vector<Channel> c;
  const char* axes[] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) c.push_back({axes[i], [i](const LogRow& r) { return r.state.p_b(i); }});
  const char* euler[] = {"roll", "pitch", "yaw"};
  for (int i = 0; i < 3; ++i) c.push_back({euler[i], [i](const LogRow& r) { return r.state.theta_b(i); }});
  for (int i = 0; i < 4; ++i) {
    c.push_back({"q_" + std::to_string(i + 1), [i](const LogRow& r) { return r.state.q_a(i); }});
  }
  const char* vel[] = {"vx", "vy", "vz"};
  for (int i = 0; i < 3; ++i) c.push_back({vel[i], [i](const LogRow& r) { return r.state.v_b(i); }});
  const char* omega[] = {"wx", "wy", "wz"};
  for (int i = 0; i < 3; ++i) c.push_back({omega[i], [i](const LogRow& r) { return r.state.omega_b(i); }});
  for (int i = 0; i < 4; ++i) {
    c.push_back({"qd_" + std::to_string(i + 1), [i](const LogRow& r) { return r.state.qd_a(i); }});
  }
  for (int i = 0; i < 4; ++i) {
    c.push_back({"cmd_thrust_" + std::to_string(i + 1), [i](const LogRow& r) { return r.command.thrusts(i); }});
  }
  for (int i = 0; i < 4; ++i) {
    c.push_back({"joint_acc_" + std::to_string(i + 1), [i](const LogRow& r) { return r.command.joint_acc(i); }});
  }
  // thrust_k is what rotor k actually delivers after the fault model.
  for (int i = 0; i < 4; ++i) {
    c.push_back({"thrust_" + std::to_string(i + 1), [i](const LogRow& r) { return r.effective_thrust(i); }});
  }
  for (int i = 0; i < 4; ++i) {
    c.push_back({"thrust_max_" + std::to_string(i + 1), [i](const LogRow& r) { return r.detected_thrust_max(i); }});
  }
  for (int i = 0; i < 3; ++i) {
    c.push_back({std::string("ref_") + axes[i], [i](const LogRow& r) { return r.ref_position(i); }});
  }
  c.push_back({"solver_iterations", [](const LogRow& r) { return static_cast<double>(r.solver_iterations); }});
  c.push_back({"solver_cost", [](const LogRow& r) { return r.solver_cost; }});
  c.push_back({"solver_grad_norm", [](const LogRow& r) { return r.solver_grad_norm; }});
  c.push_back({"yaw_moment", [](const LogRow& r) { return r.thrust_yaw_moment; }});
  c.push_back({"energy", [](const LogRow& r) { return r.energy; }});
  c.push_back({"landed", [](const LogRow& r) { return r.landed ? 1.0 : 0.0; }});
  return c;
}

const std::vector<Channel>& channels() {
  static const std::vector<Channel> c = make_channels();
  return c;
}

const Channel& lookup(const std::string& name) {
  for (const auto& c : channels()) {
    if (c.name == name) return c;
  }
  std::string list;
  for (const auto& c : channels()) list += (list.empty() ? "" : ", ") + c.name;
  throw ConfigError("unknown channel '" + name + "'; available: " + list);
}

std::string g9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? g9(*x) : "none"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

const std::vector<std::string>& series_channels() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : channels()) n.push_back(c.name);
    return n;
  }();
  return names;
}

double channel_value(const LogRow& row, const std::string& channel) { return lookup(channel).get(row); }

std::string format_log_csv(const SimLog& log) {
  std::string out = "t";
  for (const auto& c : channels()) out += "," + c.name;
  out += ",solver_status\n";
  for (const auto& r : log.rows) {
    out += g9(r.t);
    for (const auto& c : channels()) out += "," + g9(c.get(r));
    out += std::string(",") + to_string(r.solver_status) + "\n";
  }
  return out;
}

std::string format_metrics(const SimLog& log, const Metrics& m) {
  std::ostringstream o;
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(log.nmpc_fingerprint));
  o << "scenario = " << log.scenario << "\n";
  o << "nmpc_fingerprint = " << fp << "\n";
  o << "rows = " << log.rows.size() << "\n";
  o << "aborted = " << (log.aborted ? "true" : "false") << "\n";
  o << "abort_reason = " << (log.abort_reason.empty() ? "none" : log.abort_reason) << "\n";
  o << "fault_time = " << opt(log.fault_time) << "\n";
  o << "complete_failure_time = " << opt(log.complete_failure_time) << "\n";
  o << "recovery_time = " << opt(m.recovery_time) << "\n";
  o << "max_attitude_deg = " << g9(m.max_attitude_deg) << "\n";
  o << "max_attitude_after_fault_deg = " << g9(m.max_attitude_after_fault_deg) << "\n";
  o << "rmse_x = " << g9(m.position_rmse.x()) << "\n";
  o << "rmse_y = " << g9(m.position_rmse.y()) << "\n";
  o << "rmse_z = " << g9(m.position_rmse.z()) << "\n";
  o << "altitude_loss = " << opt(m.altitude_loss) << "\n";
  o << "yaw_rate_saturation = " << opt(m.yaw_rate_saturation) << "\n";
  o << "yaw_rate_fixed_point = " << opt(m.yaw_rate_fixed_point) << "\n";
  o << "yaw_saturation_time = " << opt(m.yaw_saturation_time) << "\n";
  o << "touchdown_speed = " << opt(m.touchdown_speed) << "\n";
  o << "touchdown_z = " << opt(m.touchdown_z) << "\n";
  o << "final_thrust_sum = " << opt(m.final_thrust_sum) << "\n";
  o << "bound_violations = " << m.bound_violations << "\n";
  o << "max_side_sum_deg = " << g9(m.max_side_sum_deg) << "\n";
  o << "min_joint_deg = " << g9(m.min_joint_deg) << "\n";
  o << "max_joint_deg = " << g9(m.max_joint_deg) << "\n";
  return o.str();
}

void write_log_csv(const SimLog& log, const std::filesystem::path& path) { write_file(path, format_log_csv(log)); }

void write_metrics(const SimLog& log, const Metrics& metrics, const std::filesystem::path& path) {
  write_file(path, format_metrics(log, metrics));
}

std::vector<std::filesystem::path> emit_series(const SimLog& log, const std::vector<std::string>& names,
                                               const std::filesystem::path& dir) {
  std::vector<const Channel*> selected;
  for (const auto& n : names) selected.push_back(&lookup(n));
  std::vector<std::filesystem::path> written;
  for (const Channel* c : selected) {
    std::string text;
    for (const auto& r : log.rows) text += g9(r.t) + " " + g9(c->get(r)) + "\n";
    const auto path = dir / (c->name + ".dat");
    write_file(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace morphnmpc
