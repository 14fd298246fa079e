#include "morphnmpc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace morphnmpc {
namespace {

struct Value {
  enum class Kind { kNumber, kWord, kTuple, kList, kRecord };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  std::string word;
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> fields;
};

class ValueParser {
 public:
  ValueParser(std::string_view text, std::string where) : s_(text), where_(std::move(where)) {}

  Value parse() {
    Value v = value();
    skip_ws();
    if (pos_ != s_.size()) error("unexpected '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::vector<Value> sequence(char close) {
    std::vector<Value> items;
    if (eat(close)) return items;
    while (true) {
      items.push_back(value());
      if (eat(close)) return items;
      if (!eat(',')) error(std::string("expected ',' or '") + close + "'");
      if (eat(close)) return items;  // trailing comma
    }
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '/')) {
      ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }

  Value value() {
    skip_ws();
    if (pos_ >= s_.size()) error("missing value");
    Value v;
    const char c = s_[pos_];
    if (c == '(' || c == '[') {
      ++pos_;
      v.kind = c == '(' ? Value::Kind::kTuple : Value::Kind::kList;
      v.items = sequence(c == '(' ? ')' : ']');
      return v;
    }
    if (c == '{') {
      ++pos_;
      v.kind = Value::Kind::kRecord;
      if (eat('}')) return v;
      while (true) {
        std::string key = identifier();
        if (key.empty()) error("expected a field name");
        if (!eat('=')) error("expected '=' after " + key);
        v.fields.emplace_back(std::move(key), value());
        if (eat('}')) return v;
        if (!eat(',')) error("expected ',' or '}'");
      }
    }
    if (c == '"') {
      const std::size_t end = s_.find('"', pos_ + 1);
      if (end == std::string_view::npos) error("unterminated string");
      v.kind = Value::Kind::kWord;
      v.word = std::string(s_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      const std::string rest(s_.substr(pos_));
      char* end = nullptr;
      const double x = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) error("malformed number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      v.number = x;
      return v;
    }
    std::string word = identifier();
    if (word.empty()) error(std::string("unexpected '") + c + "'");
    if (word == "deg" && eat('(')) {
      Value inner = value();
      if (inner.kind != Value::Kind::kNumber || !eat(')')) error("deg() takes one number");
      v.number = deg2rad(inner.number);
      return v;
    }
    if (word == "inf") {
      v.number = std::numeric_limits<double>::infinity();
      return v;
    }
    v.kind = Value::Kind::kWord;
    v.word = std::move(word);
    return v;
  }

  std::string_view s_;
  std::string where_;
  std::size_t pos_ = 0;
};

struct Entry {
  std::string section;
  std::string key;
  std::string text;
  std::string where;  // "origin:line" or "override"
  bool used = false;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

int bracket_depth(std::string_view s) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
  }
  return depth;
}

bool is_identifier(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string path_of(const std::string& section, const std::string& key) { return "[" + section + "]." + key; }

class Document {
 public:
  void parse(std::string_view text, std::string_view origin) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      const std::string where = std::string(origin) + ":" + std::to_string(line_no);
      if (line.front() == '[' && line.back() == ']' && is_identifier(line.substr(1, line.size() - 2))) {
        section = line.substr(1, line.size() - 2);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value' or '[section]'");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (!is_identifier(key)) throw ConfigError(where + ": malformed key '" + key + "'");
      if (section.empty()) throw ConfigError(where + ": key '" + key + "' appears before any [section]");
      while (bracket_depth(value) > 0 && std::getline(in, raw)) {
        ++line_no;
        value += " " + trim(strip_comment(raw));
      }
      if (bracket_depth(value) != 0) throw ConfigError(where + ": unbalanced brackets in " + path_of(section, key));
      if (find(section, key)) throw ConfigError(where + ": duplicate key " + path_of(section, key));
      entries_.push_back({section, key, value, where});
    }
  }

  void override_with(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    const std::size_t dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("override '" + assignment + "': expected section.key=value");
    }
    const std::string section = trim(std::string_view(assignment).substr(0, dot));
    const std::string key = trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1));
    const std::string value = trim(std::string_view(assignment).substr(eq + 1));
    if (!is_identifier(section) || !is_identifier(key)) {
      throw ConfigError("override '" + assignment + "': malformed key path");
    }
    if (Entry* e = find(section, key)) {
      e->text = value;
      e->where = "override " + path_of(section, key);
    } else {
      entries_.push_back({section, key, value, "override " + path_of(section, key)});
    }
  }

  Entry* find(const std::string& section, const std::string& key) {
    for (auto& e : entries_) {
      if (e.section == section && e.key == key) return &e;
    }
    return nullptr;
  }

  std::vector<Entry>& entries() { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// --- value conversion -------------------------------------------------------

[[noreturn]] void bad(const Entry& e, const std::string& what) {
  throw ConfigError(e.where + ": " + path_of(e.section, e.key) + ": " + what);
}

Value parse_value(const Entry& e) { return ValueParser(e.text, e.where + ": " + path_of(e.section, e.key)).parse(); }

double as_number(const Entry& e, const Value& v) {
  if (v.kind != Value::Kind::kNumber) bad(e, "expected a number");
  return v.number;
}

int as_int(const Entry& e, const Value& v) {
  const double x = as_number(e, v);
  if (x != std::floor(x) || std::abs(x) > 1e9) bad(e, "expected an integer");
  return static_cast<int>(x);
}

bool as_bool(const Entry& e, const Value& v) {
  if (v.kind == Value::Kind::kWord && v.word == "true") return true;
  if (v.kind == Value::Kind::kWord && v.word == "false") return false;
  bad(e, "expected true or false");
}

std::string as_word(const Entry& e, const Value& v) {
  if (v.kind != Value::Kind::kWord) bad(e, "expected a word or quoted string");
  return v.word;
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const Entry& e, const Value& v, bool broadcast = false) {
  Eigen::Matrix<double, N, 1> out;
  if (broadcast && v.kind == Value::Kind::kNumber) {
    out.setConstant(v.number);
    return out;
  }
  if (v.kind != Value::Kind::kTuple || static_cast<int>(v.items.size()) != N) {
    bad(e, "expected a tuple of " + std::to_string(N) + " numbers" + (broadcast ? " or one number" : ""));
  }
  for (int i = 0; i < N; ++i) out(i) = as_number(e, v.items[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Vec3> as_points(const Entry& e, const Value& v) {
  if (v.kind != Value::Kind::kList) bad(e, "expected a list of (x, y, z) tuples");
  std::vector<Vec3> out;
  for (const auto& item : v.items) out.push_back(as_vector<3>(e, item));
  return out;
}

FaultSchedule as_faults(const Entry& e, const Value& v) {
  if (v.kind != Value::Kind::kList) bad(e, "expected a list of {start, end, rotor, loe} records");
  std::vector<FaultEvent> events;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::kRecord) bad(e, "expected a {start, end, rotor, loe} record");
    FaultEvent ev;
    bool has_start = false;
    for (const auto& [name, field] : item.fields) {
      if (name == "start") {
        ev.t_start = as_number(e, field);
        has_start = true;
      } else if (name == "end") {
        ev.t_end = as_number(e, field);
      } else if (name == "rotor") {
        ev.rotor = as_int(e, field);
      } else if (name == "loe") {
        ev.loe = as_number(e, field);
      } else {
        bad(e, "unknown fault field '" + name + "'");
      }
    }
    if (!has_start) bad(e, "fault record needs start");
    events.push_back(ev);
  }
  try {
    return FaultSchedule(std::move(events));
  } catch (const std::exception& ex) {
    bad(e, ex.what());
  }
}

Mat3 as_inertia(const Entry& e, const Value& v) {
  if (v.kind == Value::Kind::kTuple && v.items.size() == 3) return as_vector<3>(e, v).asDiagonal();
  if (v.kind == Value::Kind::kTuple && v.items.size() == 9) {
    const auto flat = as_vector<9>(e, v);
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = flat(3 * r + c);
    }
    return m;
  }
  bad(e, "expected a diagonal (a, b, c) or a row-major 3x3 tuple");
}

template <typename Enum>
Enum as_enum(const Entry& e, const Value& v, std::initializer_list<std::pair<const char*, Enum>> options) {
  const std::string w = as_word(e, v);
  std::string names;
  for (const auto& [name, value] : options) {
    if (w == name) return value;
    names += names.empty() ? name : std::string(" | ") + name;
  }
  bad(e, "expected one of " + names);
}

// --- key tables ---------------------------------------------------------------

using Handler = std::function<void(const Entry&, const Value&, RunConfig&)>;

#define NUM(field) [](const Entry& e, const Value& v, RunConfig& c) { c.field = as_number(e, v); }
#define INT(field) [](const Entry& e, const Value& v, RunConfig& c) { c.field = as_int(e, v); }
#define BOOL(field) [](const Entry& e, const Value& v, RunConfig& c) { c.field = as_bool(e, v); }
#define VEC(n, field) [](const Entry& e, const Value& v, RunConfig& c) { c.field = as_vector<n>(e, v); }
#define VEC_B(n, field) [](const Entry& e, const Value& v, RunConfig& c) { c.field = as_vector<n>(e, v, true); }

const std::map<std::string, std::map<std::string, Handler>>& key_table() {
  static const std::map<std::string, std::map<std::string, Handler>> table = {
      {"robot",
       {
           {"m_b", NUM(scenario.robot.m_b)},
           {"m_l", NUM(scenario.robot.m_l)},
           {"I_b", [](const Entry& e, const Value& v, RunConfig& c) { c.scenario.robot.I_b = as_inertia(e, v); }},
           {"hip_offsets",
            [](const Entry& e, const Value& v, RunConfig& c) {
              const auto pts = as_points(e, v);
              if (pts.size() != kNumRotors) bad(e, "expected 4 hip offsets (FL, FR, RL, RR)");
              std::copy(pts.begin(), pts.end(), c.scenario.robot.hip_offsets.begin());
            }},
           {"L_leg", NUM(scenario.robot.L_leg)},
           {"q_nominal", NUM(scenario.robot.q_nominal)},
           {"c_m", NUM(scenario.robot.c_m)},
           {"spin_dirs", VEC(4, scenario.robot.spin_dirs)},
           {"drag_lin", VEC_B(3, scenario.robot.drag_lin)},
           {"drag_ang", VEC_B(3, scenario.robot.drag_ang)},
           {"g", NUM(scenario.robot.g)},
           {"point_fractions",
            [](const Entry& e, const Value& v, RunConfig& c) {
              const Vec3 f = as_vector<3>(e, v);
              for (int i = 0; i < 3; ++i) c.scenario.robot.point_fractions[static_cast<std::size_t>(i)] = f(i);
            }},
           {"point_shares",
            [](const Entry& e, const Value& v, RunConfig& c) {
              const Vec3 f = as_vector<3>(e, v);
              for (int i = 0; i < 3; ++i) c.scenario.robot.point_shares[static_cast<std::size_t>(i)] = f(i);
            }},
       }},
      {"nmpc",
       {
           {"horizon", INT(scenario.nmpc.horizon)},
           {"dt", NUM(scenario.nmpc.dt)},
           {"q_position", NUM(scenario.nmpc.weights.position)},
           {"q_roll_pitch", NUM(scenario.nmpc.weights.roll_pitch)},
           {"q_yaw", NUM(scenario.nmpc.weights.yaw)},
           {"q_joint", NUM(scenario.nmpc.weights.joint)},
           {"q_velocity", NUM(scenario.nmpc.weights.velocity)},
           {"q_roll_pitch_rate", NUM(scenario.nmpc.weights.roll_pitch_rate)},
           {"q_yaw_rate", NUM(scenario.nmpc.weights.yaw_rate)},
           {"q_joint_rate", NUM(scenario.nmpc.weights.joint_rate)},
           {"r_thrust", NUM(scenario.nmpc.weights.thrust)},
           {"r_joint_acc", NUM(scenario.nmpc.weights.joint_acc)},
           {"thrust_min", VEC_B(4, scenario.nmpc.bounds.thrust_min)},
           {"thrust_max", VEC_B(4, scenario.nmpc.bounds.thrust_max)},
           {"joint_acc_min", VEC_B(4, scenario.nmpc.bounds.joint_acc_min)},
           {"joint_acc_max", VEC_B(4, scenario.nmpc.bounds.joint_acc_max)},
           {"roll_pitch_max", NUM(scenario.nmpc.state_bounds.roll_pitch_max)},
           {"joint_min", NUM(scenario.nmpc.state_bounds.joint_min)},
           {"joint_max", NUM(scenario.nmpc.state_bounds.joint_max)},
           {"side_sum_max", NUM(scenario.nmpc.state_bounds.side_sum_max)},
           {"penalty_weight", NUM(scenario.nmpc.penalty_weight)},
           {"max_iters", INT(scenario.nmpc.max_iters)},
           {"grad_tol", NUM(scenario.nmpc.grad_tol)},
           {"armijo", NUM(scenario.nmpc.armijo)},
           {"backtrack", NUM(scenario.nmpc.backtrack)},
           {"max_backtracks", INT(scenario.nmpc.max_backtracks)},
       }},
      {"scenario",
       {
           {"name", [](const Entry& e, const Value& v, RunConfig& c) { c.scenario.name = as_word(e, v); }},
           {"plant",
            [](const Entry& e, const Value& v, RunConfig& c) {
              c.scenario.plant = as_enum<PlantKind>(e, v, {{"hf", PlantKind::kHf}, {"rom", PlantKind::kRom}});
            }},
           {"controller",
            [](const Entry& e, const Value& v, RunConfig& c) {
              c.scenario.controller =
                  as_enum<ControllerKind>(e, v, {{"nmpc", ControllerKind::kNmpc}, {"zero", ControllerKind::kZero}});
            }},
           {"duration", NUM(scenario.duration)},
           {"reference",
            [](const Entry& e, const Value& v, RunConfig& c) {
              c.scenario.reference.kind = as_enum<ReferenceKind>(
                  e, v,
                  {{"hover", ReferenceKind::kHover}, {"cruise", ReferenceKind::kCruise},
                   {"waypoints", ReferenceKind::kWaypoints}});
            }},
           {"hover_point", VEC(3, scenario.reference.hover_point)},
           {"cruise_velocity", VEC(3, scenario.reference.cruise_velocity)},
           {"cruise_accel", NUM(scenario.reference.cruise_accel)},
           {"cruise_start", NUM(scenario.reference.cruise_start)},
           {"hold_on_fault", BOOL(scenario.reference.hold_on_fault)},
           {"free_yaw_rate", BOOL(scenario.reference.free_yaw_rate)},
           {"waypoints",
            [](const Entry& e, const Value& v, RunConfig& c) { c.scenario.reference.waypoints = as_points(e, v); }},
           {"speed", NUM(scenario.reference.speed)},
           {"hold", NUM(scenario.reference.hold)},
           {"land", BOOL(scenario.reference.land)},
           {"descent_rate", NUM(scenario.reference.descent_rate)},
           {"touchdown_altitude", NUM(scenario.reference.touchdown_altitude)},
           {"ground_z", NUM(scenario.reference.ground_z)},
           {"faults", [](const Entry& e, const Value& v, RunConfig& c) { c.scenario.faults = as_faults(e, v); }},
           {"initial_position", VEC(3, scenario.initial.p_b)},
           {"initial_euler", VEC(3, scenario.initial.theta_b)},
           {"initial_joints", VEC_B(4, scenario.initial.q_a)},
           {"initial_velocity", VEC(3, scenario.initial.v_b)},
           {"initial_omega", VEC(3, scenario.initial.omega_b)},
           {"initial_joint_rates", VEC_B(4, scenario.initial.qd_a)},
           {"rom_leg_inertia", BOOL(scenario.rom_leg_inertia)},
           {"detection_delay", NUM(scenario.detection_delay)},
           {"loe_normalization",
            [](const Entry& e, const Value& v, RunConfig& c) {
              c.scenario.loe_normalization = as_enum<LoeNormalization>(
                  e, v, {{"ceiling", LoeNormalization::kCeiling}, {"hover", LoeNormalization::kHover}});
            }},
           {"plant_ceiling", NUM(scenario.plant_ceiling)},
           {"crash_altitude", NUM(scenario.crash_altitude)},
           {"drag", BOOL(scenario.drag)},
       }},
      {"sim",
       {
           {"substeps", INT(scenario.substeps)},
           {"seed",
            [](const Entry& e, const Value& v, RunConfig& c) {
              const int s = as_int(e, v);
              if (s < 0) bad(e, "seed must be non-negative");
              c.sim.seed = static_cast<unsigned>(s);
            }},
           {"out", [](const Entry& e, const Value& v, RunConfig& c) { c.sim.out_dir = as_word(e, v); }},
       }},
  };
  return table;
}

#undef NUM
#undef INT
#undef BOOL
#undef VEC
#undef VEC_B

constexpr std::pair<const char*, const char*> kRequired[] = {{"robot", "m_b"}, {"robot", "m_l"}};

RunConfig build(Document& doc, std::string_view origin) {
  for (const auto& [section, key] : kRequired) {
    if (!doc.find(section, key)) {
      throw ConfigError(std::string(origin) + ": missing required key " + path_of(section, key));
    }
  }
  const auto& table = key_table();
  for (auto& e : doc.entries()) {
    const auto sec = table.find(e.section);
    if (sec == table.end()) throw ConfigError(e.where + ": unknown section [" + e.section + "]");
    if (!sec->second.contains(e.key)) throw ConfigError(e.where + ": unknown key " + path_of(e.section, e.key));
  }

  RunConfig cfg;
  cfg.scenario.name = "scenario";
  // Sections are applied in a fixed order so defaults that depend on the robot
  // (nominal joints) see the configured geometry.
  for (const char* section : {"robot", "nmpc", "scenario", "sim"}) {
    for (auto& e : doc.entries()) {
      if (e.section != section) continue;
      table.at(e.section).at(e.key)(e, parse_value(e), cfg);
      e.used = true;
    }
    if (std::string_view(section) == "robot") {
      cfg.scenario.initial.q_a = cfg.scenario.robot.nominal_posture();
      cfg.scenario.initial.p_b = cfg.scenario.reference.hover_point;
    }
    if (std::string_view(section) == "scenario" && !doc.find("scenario", "initial_position")) {
      cfg.scenario.initial.p_b = cfg.scenario.reference.hover_point;
    }
  }

  try {
    cfg.scenario.validate();
  } catch (const ConfigError& ex) {
    throw ConfigError(std::string(origin) + ": " + ex.what());
  }
  return cfg;
}

// --- serialization ------------------------------------------------------------

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename Derived>
std::string tuple(const Eigen::MatrixBase<Derived>& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + ")";
}

std::string points(const std::vector<Vec3>& pts) {
  std::string s = "[";
  for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? ", " : "") + tuple(pts[i]);
  return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view origin, const std::vector<std::string>& overrides) {
  Document doc;
  doc.parse(text, origin);
  for (const auto& o : overrides) doc.override_with(o);
  return build(doc, origin);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

std::string serialize_config(const RunConfig& config) {
  const Scenario& s = config.scenario;
  const HfParams& r = s.robot;
  const NmpcConfig& n = s.nmpc;
  const ReferenceSpec& ref = s.reference;
  std::ostringstream o;
  auto kv = [&o](const char* key, const std::string& value) { o << key << " = " << value << "\n"; };

  o << "[robot]\n";
  kv("m_b", num(r.m_b));
  kv("m_l", num(r.m_l));
  Eigen::Matrix<double, 9, 1> inertia;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) inertia(3 * i + j) = r.I_b(i, j);
  }
  kv("I_b", tuple(inertia));
  kv("hip_offsets", points({r.hip_offsets.begin(), r.hip_offsets.end()}));
  kv("L_leg", num(r.L_leg));
  kv("q_nominal", num(r.q_nominal));
  kv("c_m", num(r.c_m));
  kv("spin_dirs", tuple(r.spin_dirs));
  kv("drag_lin", tuple(r.drag_lin));
  kv("drag_ang", tuple(r.drag_ang));
  kv("g", num(r.g));
  kv("point_fractions", tuple(Vec3(r.point_fractions[0], r.point_fractions[1], r.point_fractions[2])));
  kv("point_shares", tuple(Vec3(r.point_shares[0], r.point_shares[1], r.point_shares[2])));

  o << "\n[nmpc]\n";
  kv("horizon", std::to_string(n.horizon));
  kv("dt", num(n.dt));
  kv("q_position", num(n.weights.position));
  kv("q_roll_pitch", num(n.weights.roll_pitch));
  kv("q_yaw", num(n.weights.yaw));
  kv("q_joint", num(n.weights.joint));
  kv("q_velocity", num(n.weights.velocity));
  kv("q_roll_pitch_rate", num(n.weights.roll_pitch_rate));
  kv("q_yaw_rate", num(n.weights.yaw_rate));
  kv("q_joint_rate", num(n.weights.joint_rate));
  kv("r_thrust", num(n.weights.thrust));
  kv("r_joint_acc", num(n.weights.joint_acc));
  kv("thrust_min", tuple(n.bounds.thrust_min));
  kv("thrust_max", tuple(n.bounds.thrust_max));
  kv("joint_acc_min", tuple(n.bounds.joint_acc_min));
  kv("joint_acc_max", tuple(n.bounds.joint_acc_max));
  kv("roll_pitch_max", num(n.state_bounds.roll_pitch_max));
  kv("joint_min", num(n.state_bounds.joint_min));
  kv("joint_max", num(n.state_bounds.joint_max));
  kv("side_sum_max", num(n.state_bounds.side_sum_max));
  kv("penalty_weight", num(n.penalty_weight));
  kv("max_iters", std::to_string(n.max_iters));
  kv("grad_tol", num(n.grad_tol));
  kv("armijo", num(n.armijo));
  kv("backtrack", num(n.backtrack));
  kv("max_backtracks", std::to_string(n.max_backtracks));

  o << "\n[scenario]\n";
  kv("name", quoted(s.name));
  kv("plant", s.plant == PlantKind::kHf ? "hf" : "rom");
  kv("controller", s.controller == ControllerKind::kNmpc ? "nmpc" : "zero");
  kv("duration", num(s.duration));
  kv("reference", ref.kind == ReferenceKind::kHover    ? "hover"
                  : ref.kind == ReferenceKind::kCruise ? "cruise"
                                                       : "waypoints");
  kv("hover_point", tuple(ref.hover_point));
  kv("cruise_velocity", tuple(ref.cruise_velocity));
  kv("cruise_accel", num(ref.cruise_accel));
  kv("cruise_start", num(ref.cruise_start));
  kv("hold_on_fault", ref.hold_on_fault ? "true" : "false");
  kv("free_yaw_rate", ref.free_yaw_rate ? "true" : "false");
  kv("waypoints", points(ref.waypoints));
  kv("speed", num(ref.speed));
  kv("hold", num(ref.hold));
  kv("land", ref.land ? "true" : "false");
  kv("descent_rate", num(ref.descent_rate));
  kv("touchdown_altitude", num(ref.touchdown_altitude));
  kv("ground_z", num(ref.ground_z));
  std::string faults = "[";
  for (std::size_t i = 0; i < s.faults.events().size(); ++i) {
    const FaultEvent& e = s.faults.events()[i];
    faults += (i ? ", " : "") + std::string("{start=") + num(e.t_start) + ", end=" + num(e.t_end) +
              ", rotor=" + std::to_string(e.rotor) + ", loe=" + num(e.loe) + "}";
  }
  kv("faults", faults + "]");
  kv("initial_position", tuple(s.initial.p_b));
  kv("initial_euler", tuple(s.initial.theta_b));
  kv("initial_joints", tuple(s.initial.q_a));
  kv("initial_velocity", tuple(s.initial.v_b));
  kv("initial_omega", tuple(s.initial.omega_b));
  kv("initial_joint_rates", tuple(s.initial.qd_a));
  kv("rom_leg_inertia", s.rom_leg_inertia ? "true" : "false");
  kv("detection_delay", num(s.detection_delay));
  kv("loe_normalization", s.loe_normalization == LoeNormalization::kCeiling ? "ceiling" : "hover");
  kv("plant_ceiling", num(s.plant_ceiling));
  kv("crash_altitude", num(s.crash_altitude));
  kv("drag", s.drag ? "true" : "false");

  o << "\n[sim]\n";
  kv("substeps", std::to_string(s.substeps));
  kv("seed", std::to_string(config.sim.seed));
  kv("out", quoted(config.sim.out_dir));
  return o.str();
}

}  // namespace morphnmpc
