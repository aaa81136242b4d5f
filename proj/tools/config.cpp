#include "config.hpp"

#include <attctl/errors.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace attctl::cli {

namespace {

// Shortest decimal that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename Vec> std::string seq(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v(i));
  return out + "]";
}

enum class Kind { Number, Integer, Bool, Text, Vec3, Vec4, Vec6 };

using Setter = std::function<void(ScenarioConfig&, const YAML::Node&)>;
using Getter = std::function<std::optional<std::string>(const ScenarioConfig&)>;

struct Field {
  std::string key;
  Kind kind;
  Setter set;
  Getter get;
};

template <int N> Eigen::Matrix<double, N, 1> as_vec(const YAML::Node& n) {
  if (!n.IsSequence() || n.size() != static_cast<std::size_t>(N))
    throw ConfigError("expected a sequence of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = n[i].as<double>();
  return v;
}

NoiseConfig& noise(ScenarioConfig& c) {
  if (!c.scenario.noise) c.scenario.noise = NoiseConfig{};
  return *c.scenario.noise;
}

Field number(std::string key, std::function<double&(ScenarioConfig&)> ref) {
  return {std::move(key), Kind::Number,
          [ref](ScenarioConfig& c, const YAML::Node& n) { ref(c) = n.as<double>(); },
          [ref](const ScenarioConfig& c) -> std::optional<std::string> {
            return num(ref(const_cast<ScenarioConfig&>(c)));
          }};
}

Field gain(std::string key, double ControllerGains::* member) {
  return number("gains." + key, [member](ScenarioConfig& c) -> double& {
    return c.scenario.gains.*member;
  });
}

Field drem_gain(std::string key, double DremGains::* member) {
  return number("gains." + key, [member](ScenarioConfig& c) -> double& {
    return c.scenario.gains.drem.*member;
  });
}

Field vec6(std::string key, Vector6 Scenario::* member) {
  return {std::move(key), Kind::Vec6,
          [member](ScenarioConfig& c, const YAML::Node& n) { c.scenario.*member = as_vec<6>(n); },
          [member](const ScenarioConfig& c) -> std::optional<std::string> {
            return seq(c.scenario.*member);
          }};
}

Field flag(std::string key, bool Scenario::* member) {
  return {std::move(key), Kind::Bool,
          [member](ScenarioConfig& c, const YAML::Node& n) { c.scenario.*member = n.as<bool>(); },
          [member](const ScenarioConfig& c) -> std::optional<std::string> {
            return c.scenario.*member ? "true" : "false";
          }};
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"label", Kind::Text,
                 [](ScenarioConfig& c, const YAML::Node& n) { c.scenario.label = n.as<std::string>(); },
                 [](const ScenarioConfig& c) -> std::optional<std::string> { return c.scenario.label; }});
    f.push_back(number("duration", [](ScenarioConfig& c) -> double& { return c.scenario.duration; }));
    f.push_back(number("step", [](ScenarioConfig& c) -> double& { return c.scenario.step; }));
    f.push_back({"seed", Kind::Integer,
                 [](ScenarioConfig& c, const YAML::Node& n) { c.scenario.seed = n.as<std::uint64_t>(); },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return std::to_string(c.scenario.seed);
                 }});
    f.push_back({"variant", Kind::Text,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   c.scenario.variant = parse_variant(n.as<std::string>());
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return std::string(to_string(c.scenario.variant));
                 }});
    f.push_back({"initial.case", Kind::Integer,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   c.scenario.initial.q = case_attitude(n.as<int>());
                 },
                 [](const ScenarioConfig&) -> std::optional<std::string> { return std::nullopt; }});
    f.push_back({"initial.attitude", Kind::Vec4,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   c.scenario.initial.q = Quaternion::fromCoeffs(as_vec<4>(n));
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return seq(c.scenario.initial.q.coeffs());
                 }});
    f.push_back({"initial.omega", Kind::Vec3,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   c.scenario.initial.omega = as_vec<3>(n);
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return seq(c.scenario.initial.omega);
                 }});
    f.push_back({"theta_true", Kind::Vec6,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   c.scenario.theta_true.theta = as_vec<6>(n);
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return seq(c.scenario.theta_true.theta);
                 }});
    f.push_back(vec6("estimate0", &Scenario::estimate0));
    f.push_back(vec6("chi0", &Scenario::chi0));
    f.push_back(number("gains.alpha", [](ScenarioConfig& c) -> double& {
      return c.scenario.gains.aef.alpha;
    }));
    f.push_back(number("gains.beta", [](ScenarioConfig& c) -> double& {
      return c.scenario.gains.aef.beta;
    }));
    f.push_back(gain("kappa", &ControllerGains::kappa));
    f.push_back(gain("f_m", &ControllerGains::f_m));
    f.push_back(gain("gamma", &ControllerGains::gamma));
    f.push_back(gain("lambda", &ControllerGains::lambda));
    f.push_back(gain("lambda1", &ControllerGains::lambda1));
    f.push_back(gain("lambda2", &ControllerGains::lambda2));
    f.push_back(gain("iota1", &ControllerGains::iota1));
    f.push_back(gain("iota2", &ControllerGains::iota2));
    f.push_back(gain("gamma_ce", &ControllerGains::gamma_ce));
    f.push_back(drem_gain("a", &DremGains::a));
    f.push_back(drem_gain("b", &DremGains::b));
    f.push_back(drem_gain("k_I", &DremGains::k_I));
    f.push_back(drem_gain("k_N", &DremGains::k_N));
    f.push_back(flag("disturbance", &Scenario::disturbance));
    f.push_back({"noise.cone_half_angle_deg", Kind::Number,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   noise(c).cone_half_angle_deg = n.as<double>();
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   if (!c.scenario.noise) return std::nullopt;
                   return num(c.scenario.noise->cone_half_angle_deg);
                 }});
    f.push_back({"noise.gyro_std", Kind::Number,
                 [](ScenarioConfig& c, const YAML::Node& n) { noise(c).gyro_std = n.as<double>(); },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   if (!c.scenario.noise) return std::nullopt;
                   return num(c.scenario.noise->gyro_std);
                 }});
    f.push_back({"reference.freeze_time", Kind::Number,
                 [](ScenarioConfig& c, const YAML::Node& n) {
                   if (n.IsNull())
                     c.scenario.reference.freeze_time.reset();
                   else
                     c.scenario.reference.freeze_time = n.as<double>();
                 },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   const auto& ft = c.scenario.reference.freeze_time;
                   return ft ? num(*ft) : "null";
                 }});
    f.push_back(flag("exact_rate_substitution", &Scenario::exact_rate_substitution));
    f.push_back(number("metrics.t_start", [](ScenarioConfig& c) -> double& {
      return c.window.t_start;
    }));
    f.push_back({"metrics.t_end", Kind::Number,
                 [](ScenarioConfig& c, const YAML::Node& n) { c.window.t_end = n.as<double>(); },
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return num(c.window_end());
                 }});
    f.push_back(number("metrics.eps_pe", [](ScenarioConfig& c) -> double& {
      return c.window.eps_pe;
    }));
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : schema())
    if (f.key == key) return &f;
  return nullptr;
}

bool is_section(const std::string& prefix) {
  for (const auto& f : schema())
    if (f.key.rfind(prefix + ".", 0) == 0) return true;
  return false;
}

std::string location(const std::string& origin, const YAML::Mark& mark) {
  if (mark.is_null()) return origin;
  return origin + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

std::string flow(const YAML::Node& n) {
  YAML::Emitter out;
  out << YAML::Flow << n;
  return out.c_str();
}

}  // namespace

ConfigDocument ConfigDocument::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::stringstream text;
  text << in.rdbuf();
  return load_string(text.str(), path);
}

ConfigDocument ConfigDocument::load_string(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(location(origin, e.mark) + ": " + e.msg);
  }
  ConfigDocument doc;
  doc.origin_ = origin;
  if (root.IsNull()) return doc;
  if (!root.IsMap()) throw ConfigError(location(origin, root.Mark()) + ": top level must be a map");

  std::function<void(const YAML::Node&, const std::string&)> walk =
      [&](const YAML::Node& map, const std::string& prefix) {
        for (const auto& kv : map) {
          const std::string name = kv.first.as<std::string>();
          const std::string key = prefix.empty() ? name : prefix + "." + name;
          const std::string where = location(origin, kv.first.Mark());
          if (find_field(key)) {
            doc.put({key, flow(kv.second), where});
          } else if (is_section(key)) {
            if (kv.second.IsNull()) continue;
            if (!kv.second.IsMap()) throw ConfigError(where + ": '" + key + "' must be a map");
            walk(kv.second, key);
          } else {
            throw ConfigError(where + ": unknown key '" + key + "'");
          }
        }
      };
  walk(root, "");
  return doc;
}

void ConfigDocument::put(Entry e) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& x) { return x.key == e.key; });
  if (it != entries_.end())
    *it = std::move(e);
  else
    entries_.push_back(std::move(e));
}

void ConfigDocument::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set " + assignment + ": expected key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1), "--set " + assignment);
}

void ConfigDocument::set(const std::string& key, const std::string& value,
                         const std::string& origin) {
  if (!find_field(key)) throw ConfigError(origin + ": unknown key '" + key + "'");
  // an override of one attitude form replaces the other
  const std::string other = key == "initial.case"       ? "initial.attitude"
                            : key == "initial.attitude" ? "initial.case"
                                                        : "";
  std::erase_if(entries_, [&](const Entry& e) { return e.key == other; });
  put({key, value, origin});
}

ScenarioConfig ConfigDocument::resolve() const {
  ScenarioConfig cfg;
  cfg.source = origin_;
  std::set<std::string> present;
  for (const auto& e : entries_) present.insert(e.key);
  if (present.count("initial.case") && present.count("initial.attitude"))
    throw ConfigError(origin_ + ": give either initial.case or initial.attitude, not both");

  for (const auto& field : schema()) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Entry& e) { return e.key == field.key; });
    if (it == entries_.end()) continue;
    try {
      field.set(cfg, YAML::Load(it->yaml));
    } catch (const YAML::Exception& e) {
      throw ConfigError(it->where + ": bad value for '" + field.key + "': " + e.msg);
    } catch (const ConfigError& e) {
      throw ConfigError(it->where + ": '" + field.key + "': " + e.what());
    }
  }
  if (cfg.scenario.noise) cfg.scenario.noise->seed = cfg.scenario.seed;

  const std::string where = origin_.empty() ? "scenario" : origin_;
  try {
    cfg.scenario.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (cfg.window.t_start < 0.0 || cfg.window_end() <= cfg.window.t_start ||
      cfg.window_end() > cfg.scenario.duration + 1e-9) {
    if (cfg.scenario.duration > 0.0)
      throw ConfigError(where + ": metrics window must satisfy 0 <= t_start < t_end <= duration");
  }
  if (!(cfg.window.eps_pe > 0.0)) throw ConfigError(where + ": metrics.eps_pe must be positive");
  return cfg;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& f : schema()) keys.push_back(f.key);
  return keys;
}

bool is_numeric_key(const std::string& key) {
  const Field* f = find_field(key);
  return f && (f->kind == Kind::Number || f->kind == Kind::Integer);
}

std::vector<std::pair<std::string, std::string>> resolved_parameters(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : schema())
    if (auto v = f.get(cfg)) out.emplace_back(f.key, *v);
  return out;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [k, v] : resolved_parameters(cfg)) {
    for (const std::string& part : {k, std::string("="), v, std::string("\n")}) {
      for (unsigned char ch : part) {
        h ^= ch;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

}  // namespace attctl::cli
