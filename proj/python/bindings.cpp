#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "morphnmpc/config.hpp"
#include "morphnmpc/dynamics.hpp"
#include "morphnmpc/log_io.hpp"
#include "morphnmpc/selftest.hpp"

namespace py = pybind11;
using namespace morphnmpc;

namespace {

py::object optional(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict metrics_dict(const SimLog& log, const Metrics& m) {
  py::dict d;
  d["aborted"] = log.aborted;
  d["abort_reason"] = log.abort_reason;
  d["nmpc_fingerprint"] = log.nmpc_fingerprint;
  d["recovery_time"] = optional(m.recovery_time);
  d["max_attitude_deg"] = m.max_attitude_deg;
  d["max_attitude_after_fault_deg"] = m.max_attitude_after_fault_deg;
  d["position_rmse"] = Vec3(m.position_rmse);
  d["altitude_loss"] = optional(m.altitude_loss);
  d["yaw_rate_saturation"] = optional(m.yaw_rate_saturation);
  d["yaw_rate_fixed_point"] = optional(m.yaw_rate_fixed_point);
  d["yaw_saturation_time"] = optional(m.yaw_saturation_time);
  d["touchdown_z"] = optional(m.touchdown_z);
  d["touchdown_speed"] = optional(m.touchdown_speed);
  d["final_thrust_sum"] = optional(m.final_thrust_sum);
  d["bound_violations"] = m.bound_violations;
  d["max_side_sum_deg"] = m.max_side_sum_deg;
  return d;
}

// Runs a scenario and returns (metrics, {channel: values}) with "t" included.
py::tuple run(const RunConfig& cfg) {
  SimLog log;
  {
    py::gil_scoped_release release;
    log = run_closed_loop(cfg.scenario);
  }
  const Metrics m = compute_metrics(log);
  py::dict series;
  std::vector<double> t;
  for (const auto& r : log.rows) t.push_back(r.t);
  series["t"] = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())).eval();
  for (const auto& name : series_channels()) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(log.rows.size()));
    for (std::size_t i = 0; i < log.rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = channel_value(log.rows[i], name);
    series[py::str(name)] = v;
  }
  return py::make_tuple(metrics_dict(log, m), series);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fault-tolerant NMPC simulator for a legged quadrotor";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("name", [](const RunConfig& c) { return c.scenario.name; })
      .def_property_readonly("duration", [](const RunConfig& c) { return c.scenario.duration; })
      .def_property_readonly("nmpc_fingerprint", [](const RunConfig& c) { return fingerprint(c.scenario.nmpc); })
      .def("serialize", &serialize_config)
      .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; });

  m.def("parse_config", [](const std::string& text, const std::vector<std::string>& overrides) {
    return parse_config(text, "<string>", overrides);
  }, py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
  m.def("load_config", [](const std::string& path, const std::vector<std::string>& overrides) {
    return load_config(path, overrides);
  }, py::arg("path"), py::arg("overrides") = std::vector<std::string>{});

  m.def("run", &run, py::arg("config"), "Closed-loop run; returns (metrics, series).");
  m.def("channels", &series_channels);

  m.def("hover_thrust", [] { return RobotParams{}.hover_thrust(); });
  m.def("rom_dynamics", [](const RomVector& x, const InputVector& u) {
    return rom_dynamics(x, u, prediction_params(HfParams{}, true));
  }, py::arg("x"), py::arg("u"), "ROM state derivative under the default parameters.");
  m.def("hover_state", [] {
    RomState s;
    s.p_b = Vec3(0.0, 0.0, 10.0);
    s.q_a = RobotParams{}.nominal_posture();
    return s.flatten();
  });

  m.def("selftest", [](unsigned seed) {
    py::list out;
    for (const auto& c : run_invariant_suite(HfParams{}, seed)) out.append(py::make_tuple(c.name, c.value, c.passed));
    return out;
  }, py::arg("seed") = 1u);
}
