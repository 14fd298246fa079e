#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "morphnmpc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = morphnmpc::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("morphnmpc_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kShortHover = R"(
[robot]
m_b = 4.8
m_l = 0.3
[scenario]
plant = rom
duration = 1
)";

}  // namespace

TEST_CASE("run writes log and metrics") {
  const fs::path d = scratch("run");
  const fs::path cfg = write(d, "hover.cfg", kShortHover);
  const Result r = run({"run", cfg.string(), "--out", (d / "out").string(), "--series", "z"});
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "out" / "log.csv"));
  CHECK(fs::exists(d / "out" / "metrics.txt"));
  const std::string z = slurp(d / "out" / "series" / "z.dat");
  CHECK(std::count(z.begin(), z.end(), '\n') == 11);

  SUBCASE("the default horizon override changes nothing") {
    const Result o = run({"run", cfg.string(), "--out", (d / "o5").string(), "--override", "nmpc.horizon=5"});
    CHECK(o.code == 0);
    CHECK(slurp(d / "o5" / "log.csv") == slurp(d / "out" / "log.csv"));
  }
  SUBCASE("the resolved config reproduces the run") {
    const Result o = run({"run", (d / "out" / "config.cfg").string(), "--out", (d / "again").string()});
    CHECK(o.code == 0);
    CHECK(slurp(d / "again" / "log.csv") == slurp(d / "out" / "log.csv"));
  }
  SUBCASE("environment output directory") {
    const fs::path env_out = d / "env";
    setenv("MORPHNMPC_OUT", env_out.c_str(), 1);
    const Result o = run({"run", cfg.string()});
    unsetenv("MORPHNMPC_OUT");
    CHECK(o.code == 0);
    CHECK(fs::exists(env_out / "log.csv"));
  }
  SUBCASE("no series requested writes none") {
    const Result o = run({"run", cfg.string(), "--out", (d / "none").string()});
    CHECK(o.code == 0);
    CHECK(!fs::exists(d / "none" / "series"));
  }
}

TEST_CASE("config errors exit 1") {
  const fs::path d = scratch("errors");
  const Result missing = run({"run", write(d, "a.cfg", "[robot]\nm_l = 0.3\n").string(), "--out", d.string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("[robot].m_b") != std::string::npos);

  const Result unknown = run({"run", write(d, "b.cfg", std::string(kShortHover) + "colour = red\n").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("b.cfg:8") != std::string::npos);
  CHECK(unknown.err.find("[scenario].colour") != std::string::npos);

  const Result channel = run({"run", write(d, "c.cfg", kShortHover).string(), "--series", "nope"});
  CHECK(channel.code == 1);
  CHECK(channel.err.find("available:") != std::string::npos);

  CHECK(run({"run", (d / "absent.cfg").string()}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"run", write(d, "d.cfg", kShortHover).string(), "--plant", "simscape"}).code == 1);
}

TEST_CASE("crash exits 2") {
  const fs::path d = scratch("crash");
  const fs::path cfg = write(d, "fall.cfg", "[robot]\nm_b = 4.8\nm_l = 0.3\n[scenario]\nplant = rom\ncontroller = zero\nhover_point = (0, 0, 0.5)\nduration = 3\n");
  const Result r = run({"run", cfg.string(), "--out", d.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("crash") != std::string::npos);
  CHECK(slurp(d / "metrics.txt").find("aborted = true") != std::string::npos);
}

TEST_CASE("sweep writes per-run directories and a table") {
  const fs::path d = scratch("sweep");
  const fs::path cfg =
      write(d, "s.cfg", std::string(kShortHover) + "faults = [{start = 0.5, rotor = 4, loe = 0.3}]\n");
  const Result r = run({"sweep", cfg.string(), "--fault-time", "0.2:0.6:0.2", "--out", d.string(), "--jobs", "3"});
  CHECK(r.code == 0);
  for (const char* name : {"fault_t_0.200", "fault_t_0.400", "fault_t_0.600"}) {
    CHECK(fs::exists(d / name / "log.csv"));
  }
  const std::string table = slurp(d / "sweep.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK(run({"sweep", cfg.string(), "--fault-time", "0.6:0.2:0.1"}).code == 1);
  CHECK(run({"sweep", write(d, "n.cfg", kShortHover).string(), "--fault-time", "0:1:1"}).code == 1);
}

TEST_CASE("selftest passes") {
  const Result r = run({"selftest"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}
