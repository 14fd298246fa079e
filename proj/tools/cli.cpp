#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "morphnmpc/config.hpp"
#include "morphnmpc/log_io.hpp"
#include "morphnmpc/selftest.hpp"

namespace morphnmpc::cli {
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string out;
  std::string plant;
  std::vector<std::string> overrides;
};

std::vector<std::string> all_overrides(const Common& c) {
  std::vector<std::string> o = c.overrides;
  if (!c.plant.empty()) o.push_back("scenario.plant=" + c.plant);
  return o;
}

// --out, then MORPHNMPC_OUT, then [sim].out.
fs::path output_dir(const Common& c, const RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("MORPHNMPC_OUT"); env && *env) return env;
  return cfg.sim.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? g6(*x) : "none"; }

void check_channels(const std::vector<std::string>& channels) {
  for (const auto& c : channels) {
    if (std::find(series_channels().begin(), series_channels().end(), c) == series_channels().end()) {
      std::string list;
      for (const auto& n : series_channels()) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("unknown channel '" + c + "'; available: " + list);
    }
  }
}

int cmd_run(const std::string& file, const Common& common, const std::vector<std::string>& series, std::ostream& out,
            std::ostream& err) {
  const RunConfig cfg = load_config(file, all_overrides(common));
  check_channels(series);
  const fs::path dir = output_dir(common, cfg);
  const SimLog log = run_closed_loop(cfg.scenario);
  const Metrics m = compute_metrics(log);
  write_log_csv(log, dir / "log.csv");
  write_metrics(log, m, dir / "metrics.txt");
  write_text(dir / "config.cfg", serialize_config(cfg));
  emit_series(log, series, dir / "series");
  out << "scenario " << cfg.scenario.name << ": " << log.rows.size() << " rows -> " << dir.string() << "\n";
  out << format_metrics(log, m);
  if (log.aborted) {
    err << "simulation aborted: " << log.abort_reason << "\n";
    return kExitCrash;
  }
  return kExitOk;
}

int cmd_match(const std::string& file, const Common& common, double cut, double window, std::ostream& out) {
  RunConfig cfg;
  cfg.scenario = hover_scenario();
  if (!file.empty()) cfg = load_config(file, all_overrides(common));
  const Scenario& s = cfg.scenario;
  const MatchSetup setup = failure_match_setup(s, cut, window);
  const MatchReport r = model_matching(setup.x0, setup.schedule, s.robot, prediction_params(s.robot, s.rom_leg_inertia),
                                       s.nmpc.dt, s.substeps);
  std::string csv = "t,rom_x,rom_y,rom_z,rom_roll,rom_pitch,rom_yaw,hf_x,hf_y,hf_z,hf_roll,hf_pitch,hf_yaw\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    char line[512];
    const RomState& a = r.rom[i];
    const RomState& b = r.hf[i];
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.t[i],
                  a.p_b.x(), a.p_b.y(), a.p_b.z(), a.theta_b.x(), a.theta_b.y(), a.theta_b.z(), b.p_b.x(), b.p_b.y(),
                  b.p_b.z(), b.theta_b.x(), b.theta_b.y(), b.theta_b.z());
    csv += line;
  }
  const fs::path dir = output_dir(common, cfg);
  write_text(dir / "match.csv", csv);
  out << "rotor 4 cut at " << g6(cut) << " s, window " << g6(window) << " s\n";
  out << "max position deviation [m]: " << g6(r.max_position_deviation.x()) << " " << g6(r.max_position_deviation.y())
      << " " << g6(r.max_position_deviation.z()) << "\n";
  out << "max euler deviation [deg]: " << g6(rad2deg(r.max_euler_deviation.x())) << " "
      << g6(rad2deg(r.max_euler_deviation.y())) << " " << g6(rad2deg(r.max_euler_deviation.z())) << "\n";
  out << "-> " << (dir / "match.csv").string() << "\n";
  return kExitOk;
}

std::vector<double> parse_grid(const std::string& spec) {
  double a = 0, b = 0, step = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &a, &b, &step, &tail) != 3 || !(step > 0.0) || b < a) {
    throw ConfigError("--fault-time expects a:b:step with b >= a and step > 0, got '" + spec + "'");
  }
  std::vector<double> grid;
  const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
  for (int i = 0; i <= n; ++i) grid.push_back(a + i * step);
  return grid;
}

int cmd_sweep(const std::string& file, const Common& common, const std::string& fault_time, int jobs,
              std::ostream& out, std::ostream& err) {
  const RunConfig base = load_config(file, all_overrides(common));
  if (base.scenario.faults.empty()) throw ConfigError(file + ": sweep needs a scenario with [scenario].faults");
  const std::vector<double> grid = parse_grid(fault_time);
  const fs::path dir = output_dir(common, base);

  struct Result {
    std::string run;
    Metrics metrics;
    bool aborted = false;
  };
  std::vector<Result> results(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      Scenario s = base.scenario;
      s.faults = s.faults.shifted_to(grid[i]);
      char name[64];
      std::snprintf(name, sizeof name, "fault_t_%.3f", grid[i]);
      try {
        const SimLog log = run_closed_loop(s);
        const Metrics m = compute_metrics(log);
        write_log_csv(log, dir / name / "log.csv");
        write_metrics(log, m, dir / name / "metrics.txt");
        results[i] = {name, m, log.aborted};
      } catch (const std::exception& e) {
        results[i] = {name, Metrics{}, true};
        write_text(dir / name / "error.txt", std::string(e.what()) + "\n");
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string table =
      "fault_time,run,aborted,recovery_time,max_attitude_after_fault_deg,altitude_loss,rmse_x,rmse_y,rmse_z,"
      "yaw_rate_saturation,bound_violations\n";
  bool any_aborted = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Metrics& m = results[i].metrics;
    any_aborted = any_aborted || results[i].aborted;
    table += g6(grid[i]) + "," + results[i].run + "," + (results[i].aborted ? "true" : "false") + "," +
             opt(m.recovery_time) + "," + g6(m.max_attitude_after_fault_deg) + "," + opt(m.altitude_loss) + "," +
             g6(m.position_rmse.x()) + "," + g6(m.position_rmse.y()) + "," + g6(m.position_rmse.z()) + "," +
             opt(m.yaw_rate_saturation) + "," + std::to_string(m.bound_violations) + "\n";
  }
  write_text(dir / "sweep.csv", table);
  out << table;
  if (any_aborted) {
    err << "one or more sweep runs aborted\n";
    return kExitCrash;
  }
  return kExitOk;
}

int cmd_selftest(unsigned seed, std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_invariant_suite(HfParams{}, seed)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << g6(c.value) << " (" << c.bound << ")\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fault-tolerant NMPC simulator for a legged quadrotor"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--plant", common.plant, "plant model")->check(CLI::IsMember({"hf", "rom"}));
    sub->add_option("--override", common.overrides, "section.key=value, applied in order")->allow_extra_args(false);
  };

  std::string file;
  std::vector<std::string> series;
  CLI::App* run = app.add_subcommand("run", "run a scenario, write log.csv and metrics.txt");
  run->add_option("scenario", file, "scenario file")->required();
  run->add_option("--series", series, "channel to emit as <out>/series/<channel>.dat")->allow_extra_args(false);
  add_common(run);

  std::string match_file;
  double cut = 0.2, window = 0.5;
  CLI::App* match = app.add_subcommand("match", "open-loop ROM vs HF comparison after a rotor 4 cut");
  match->add_option("--config", match_file, "scenario file (default: hover at 10 m)");
  match->add_option("--cut", cut, "rotor cut time [s]");
  match->add_option("--window", window, "comparison window [s]");
  add_common(match);

  std::string fault_time;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  CLI::App* sweep = app.add_subcommand("sweep", "grid of runs over the first fault time");
  sweep->add_option("scenario", file, "scenario file")->required();
  sweep->add_option("--fault-time", fault_time, "a:b:step")->required();
  sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  add_common(sweep);

  unsigned seed = 1;
  CLI::App* selftest = app.add_subcommand("selftest", "run the numerical invariant suite");
  selftest->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(file, common, series, out, err);
    if (*match) return cmd_match(match_file, common, cut, window, out);
    if (*sweep) return cmd_sweep(file, common, fault_time, jobs, out, err);
    if (*selftest) return cmd_selftest(seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "simulation error: " << e.what() << "\n";
    return kExitCrash;
  }
  return kExitConfig;
}

}  // namespace morphnmpc::cli
