#include "tdscf/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace tdscf::harness {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// A factor is a decimal literal, "pi", or a literal immediately followed by "pi".
double parse_factor(const std::string& raw, const std::string& whole) {
  std::string s = lower(trim(raw));
  double sign = 1.0;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (s.front() == '-') sign = -1.0;
    s.erase(0, 1);
  }
  if (s.empty()) throw ConfigError("malformed number '" + whole + "'");
  if (s == "pi") return sign * std::numbers::pi;
  std::string digits = s;
  double factor = 1.0;
  if (s.size() > 2 && s.ends_with("pi")) {
    digits = s.substr(0, s.size() - 2);
    if (!digits.empty() && digits.back() == '*') digits.pop_back();
    factor = std::numbers::pi;
  }
  double v = 0;
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || end != digits.data() + digits.size() || digits.empty()) {
    throw ConfigError("malformed number '" + whole + "'");
  }
  return sign * v * factor;
}

int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text) {
  const std::string s = lower(trim(text));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"solver", [](ExperimentConfig& c, const std::string& v) { c.solver = parse_solver(v); }},
      {"a", [](ExperimentConfig& c, const std::string& v) { c.a = parse_number(v); }},
      {"b", [](ExperimentConfig& c, const std::string& v) { c.b = parse_number(v); }},
      {"kx", [](ExperimentConfig& c, const std::string& v) { c.kx = parse_int(v); }},
      {"ky", [](ExperimentConfig& c, const std::string& v) { c.ky = parse_int(v); }},
      {"epsilon", [](ExperimentConfig& c, const std::string& v) { c.epsilon = parse_number(v); }},
      {"delta",
       [](ExperimentConfig& c, const std::string& v) {
         c.delta = parse_number(v);
         c.delta_tracks_epsilon = false;
       }},
      {"delta_tracks_epsilon",
       [](ExperimentConfig& c, const std::string& v) { c.delta_tracks_epsilon = parse_bool(v); }},
      {"dx_per_scale", [](ExperimentConfig& c, const std::string& v) { c.dx_per_scale = parse_number(v); }},
      {"tie_grids", [](ExperimentConfig& c, const std::string& v) { c.tie_grids = parse_bool(v); }},
      {"potential", [](ExperimentConfig& c, const std::string& v) { c.potential = trim(v); }},
      {"psi", [](ExperimentConfig& c, const std::string& v) { c.psi = trim(v); }},
      {"phi", [](ExperimentConfig& c, const std::string& v) { c.phi = trim(v); }},
      {"y0", [](ExperimentConfig& c, const std::string& v) { c.y0 = parse_number(v); }},
      {"eta0", [](ExperimentConfig& c, const std::string& v) { c.eta0 = parse_number(v); }},
      {"dt", [](ExperimentConfig& c, const std::string& v) { c.dt = parse_number(v); }},
      {"t_final", [](ExperimentConfig& c, const std::string& v) { c.t_final = parse_number(v); }},
      {"tfinal", [](ExperimentConfig& c, const std::string& v) { c.t_final = parse_number(v); }},
      {"record_every", [](ExperimentConfig& c, const std::string& v) { c.record_every = parse_int(v); }},
      {"include_theta", [](ExperimentConfig& c, const std::string& v) { c.include_theta = parse_bool(v); }},
      {"particle_refine",
       [](ExperimentConfig& c, const std::string& v) { c.particle_refine = parse_int(v); }},
      {"bandwidth_cells",
       [](ExperimentConfig& c, const std::string& v) { c.bandwidth_cells = parse_number(v); }},
      {"output", [](ExperimentConfig& c, const std::string& v) { c.output = trim(v); }},
      {"out", [](ExperimentConfig& c, const std::string& v) { c.output = trim(v); }},
  };
  return table;
}

int exponent_for(double length, double scale, double dx_per_scale, int k) {
  if (dx_per_scale <= 0) return k;
  const double target = dx_per_scale * scale;
  int needed = 2;
  while (needed < 20 && length / std::ldexp(1.0, needed) > target * (1 + 1e-12)) ++needed;
  return std::max(k, needed);
}

}  // namespace

std::string to_string(Solver s) {
  switch (s) {
    case Solver::tdscf: return "tdscf";
    case Solver::ehrenfest: return "ehrenfest";
    case Solver::classical: return "classical";
    case Solver::mixed: return "mixed";
  }
  return "tdscf";
}

Solver parse_solver(const std::string& text) {
  const std::string s = lower(trim(text));
  if (s == "tdscf") return Solver::tdscf;
  if (s == "ehrenfest") return Solver::ehrenfest;
  if (s == "classical") return Solver::classical;
  if (s == "mixed") return Solver::mixed;
  throw ConfigError("unknown solver '" + text + "'");
}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_factor(s, text);
  if (s.find('/', slash + 1) != std::string::npos) throw ConfigError("malformed number '" + text + "'");
  const double num = parse_factor(s.substr(0, slash), text);
  const double den = parse_factor(s.substr(slash + 1), text);
  if (den == 0) throw ConfigError("division by zero in '" + text + "'");
  return num / den;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"example1", "example2", "example3", "example4"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  constexpr double pi = std::numbers::pi;
  ExperimentConfig c;
  c.preset = name;
  if (name == "example1") {
    c.epsilon = 1.0 / 256;
    c.delta = 1.0;
    c.dx_per_scale = 2 * pi / 16;
    c.dt = 0.4 / 8;
    return c;
  }
  if (name == "example2") {
    c.a = 0.0;
    c.b = 1.0;
    c.kx = c.ky = 2;
    c.epsilon = 1.0 / 512;
    c.delta_tracks_epsilon = true;
    c.dx_per_scale = 1.0 / 8;
    c.tie_grids = true;
    c.potential = "constant:1";
    c.psi = "ex2_psi";
    c.phi = "ex2_phi";
    c.t_final = 0.54;
    c.dt = 0.54 / 64;
    return c;
  }
  if (name == "example3") {
    c.kx = c.ky = 2;
    c.epsilon = 1.0 / 256;
    c.delta_tracks_epsilon = true;
    c.dx_per_scale = 2 * pi / 16;
    c.tie_grids = true;
    c.psi = "ex3_psi";
    c.phi = "ex1_phi";
    c.dt = 0.4 / 64;
    return c;
  }
  if (name == "example4") {
    c.solver = Solver::ehrenfest;
    c.kx = c.ky = 2;
    c.epsilon = 1.0;
    c.delta = 1.0 / 256;
    c.dx_per_scale = 2 * pi / 16;
    c.psi = "ex3_psi";
    c.phi = "none";
    c.y0 = 0.0;
    c.eta0 = 0.1;
    c.dt = 0.4 / 64;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = lower(trim(key));
  if (k == "preset") {
    const std::string out = cfg.output;
    cfg = preset(trim(value));
    cfg.output = out;
    return;
  }
  const auto it = setters().find(k);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

void apply_overrides(ExperimentConfig& cfg, const std::map<std::string, std::string>& overrides) {
  if (const auto p = overrides.find("preset"); p != overrides.end()) apply_override(cfg, p->first, p->second);
  for (const auto& [k, v] : overrides) {
    if (k != "preset") apply_override(cfg, k, v);
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("JSON config must be an object");
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) {
        entries.emplace_back(k, v.get<std::string>());
      } else if (v.is_boolean()) {
        entries.emplace_back(k, v.get<bool>() ? "true" : "false");
      } else if (v.is_number_integer()) {
        entries.emplace_back(k, std::to_string(v.get<long long>()));
      } else if (v.is_number()) {
        entries.emplace_back(k, fmt(v.get<double>()));
      } else {
        throw ConfigError("key '" + k + "': unsupported JSON value type");
      }
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(number) + ": expected key = value");
      }
      entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  ExperimentConfig cfg;
  for (const auto& [k, v] : entries) {
    if (lower(k) == "preset") apply_override(cfg, k, v);
  }
  for (const auto& [k, v] : entries) {
    if (lower(k) != "preset") apply_override(cfg, k, v);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

double effective_delta(const ExperimentConfig& cfg) {
  return cfg.delta_tracks_epsilon ? cfg.epsilon : cfg.delta;
}

int effective_kx(const ExperimentConfig& cfg) {
  return exponent_for(cfg.b - cfg.a, effective_delta(cfg), cfg.dx_per_scale, cfg.kx);
}

int effective_ky(const ExperimentConfig& cfg) {
  return exponent_for(cfg.b - cfg.a, cfg.epsilon, cfg.dx_per_scale, cfg.ky);
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.b > cfg.a) || !std::isfinite(cfg.a) || !std::isfinite(cfg.b)) {
    throw ConfigError("domain requires finite a < b");
  }
  for (const int k : {effective_kx(cfg), effective_ky(cfg)}) {
    if (k < 2 || k > 20) throw ConfigError("grid exponent " + std::to_string(k) + " outside [2, 20]");
  }
  const auto in_unit = [](double s) { return s > 0 && s <= 1; };
  if (!in_unit(cfg.epsilon)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!in_unit(effective_delta(cfg))) throw ConfigError("delta must lie in (0, 1]");
  if (!(cfg.t_final > 0) || !std::isfinite(cfg.t_final)) throw ConfigError("T must be positive");
  if (!(cfg.dt > 0) || cfg.dt > cfg.t_final) throw ConfigError("dt must satisfy 0 < dt <= T");
  if (cfg.dx_per_scale < 0) throw ConfigError("dx_per_scale must be non-negative");
  if (cfg.record_every < 0) throw ConfigError("record_every must be non-negative");
  if (cfg.particle_refine < 1 || (cfg.particle_refine & (cfg.particle_refine - 1)) != 0) {
    throw ConfigError("particle_refine must be a power of two");
  }
  if (!(cfg.bandwidth_cells > 0)) throw ConfigError("bandwidth_cells must be positive");
  if (cfg.psi.empty()) throw ConfigError("psi initial data missing");
  if (cfg.solver != Solver::ehrenfest && (cfg.phi.empty() || cfg.phi == "none")) {
    throw ConfigError("phi initial data missing");
  }
}

std::string canonical_string(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << "solver=" << to_string(cfg.solver) << ";a=" << fmt(cfg.a) << ";b=" << fmt(cfg.b)
    << ";nx=" << effective_kx(cfg) << ";ny=" << effective_ky(cfg) << ";epsilon=" << fmt(cfg.epsilon)
    << ";delta=" << fmt(effective_delta(cfg)) << ";potential=" << cfg.potential << ";psi=" << cfg.psi
    << ";phi=" << cfg.phi << ";y0=" << fmt(cfg.y0) << ";eta0=" << fmt(cfg.eta0) << ";dt=" << fmt(cfg.dt)
    << ";T=" << fmt(cfg.t_final) << ";theta=" << cfg.include_theta << ";refine=" << cfg.particle_refine
    << ";bandwidth=" << fmt(cfg.bandwidth_cells);
  return s.str();
}

}  // namespace tdscf::harness
