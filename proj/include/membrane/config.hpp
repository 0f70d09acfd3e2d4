#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "membrane/flow.hpp"

namespace membrane {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key-value configuration with dotted sections (model.kappa = 1.0).
/// Lines are `key = value`, '#' starts a comment. CLI `--set key=value`
/// entries are applied on top of the file.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      c.parse_line(line, path.string() + ":" + std::to_string(lineno));
    }
    return c;
  }

  static Config from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) c.parse_line(line, "line " + std::to_string(++lineno));
    return c;
  }

  void apply_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override must look like key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: missing required key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(key, it->second);
  }

  double require_double(const std::string& key) const {
    return to_double(key, require_string(key));
  }

  long get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const long v = std::stol(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not an integer: " + it->second);
    }
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(to_double(key, trim(tok)));
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(std::string s) {
    const auto is_space = [](unsigned char ch) { return std::isspace(ch); };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not a number: " + v);
    }
  }

  void parse_line(std::string line, const std::string& where) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at " + where);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key at " + where);
    values_[key] = val;
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// typed run configuration

struct InitialSpec {
  enum class Kind { constant, tanh_cap, tanh_band, checkpoint, perturbed };
  Kind kind = Kind::constant;
  Kind base = Kind::constant;  // for perturbed
  double theta0 = 1.0;
  Pole pole = Pole::north;
  double theta1 = 1.0, theta2 = 2.0;
  std::string checkpoint_path;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  int max_degree = 0;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  int snapshot_every = 0;
  bool write_txt = true;
  bool write_vtk = false;
};

struct RunConfig {
  ModelParams model;
  bool alpha_explicit = false;
  int l_max = 64;
  double oversample = 2.0;
  FlowParams flow;
  InitialSpec initial;
  OutputSpec outputs;
  std::optional<double> cap_north;
  std::optional<double> cap_south;
  std::vector<double> eps_list;
  double axisym_dt = 1e-3;
  double axisym_t_end = 1.0;
  int axisym_l_series = 512;
  std::string axisym_mode = "two_cap";  // two_cap | compare | jump
  Config raw;
};

inline InitialSpec::Kind parse_initial_kind(const std::string& s) {
  if (s == "constant") return InitialSpec::Kind::constant;
  if (s == "tanh_cap") return InitialSpec::Kind::tanh_cap;
  if (s == "tanh_band") return InitialSpec::Kind::tanh_band;
  if (s == "checkpoint") return InitialSpec::Kind::checkpoint;
  if (s == "perturbed") return InitialSpec::Kind::perturbed;
  throw ConfigError("config: unknown initial.type '" + s + "'");
}

inline RunConfig make_run_config(const Config& c) {
  RunConfig rc;
  rc.raw = c;
  rc.model.kappa = c.get_double("model.kappa", 1.0);
  rc.model.sigma = c.get_double("model.sigma", 0.0);
  rc.model.Lambda = c.get_double("model.Lambda", 1.0);
  rc.model.b = c.get_double("model.b", 1.0);
  rc.model.epsilon = c.get_double("model.epsilon", 0.1);
  rc.model.beta = c.get_double("model.beta", 1.0);
  rc.model.alpha = c.get_double("model.alpha", 0.0);
  rc.model.R = c.get_double("model.R", 1.0);
  rc.alpha_explicit = c.has("model.alpha");

  rc.l_max = static_cast<int>(c.get_long("grid.l_max", 64));
  rc.oversample = c.get_double("grid.oversample", 2.0);

  rc.flow.dt = c.get_double("flow.dt", 1e-4);
  rc.flow.dt_min = c.get_double("flow.dt_min", 1e-11);
  rc.flow.dt_max = c.get_double("flow.dt_max", 1e-2);
  rc.flow.t_end = c.get_double("flow.t_end", 1.0);
  rc.flow.energy_tol = c.get_double("flow.energy_tol", 0.0);
  rc.flow.stop_tol = c.get_double("flow.stop_tol", 1e-7);
  rc.flow.max_steps = c.get_long("flow.max_steps", 0);

  const std::string kind = c.get_string("initial.type", "constant");
  rc.initial.kind = parse_initial_kind(kind);
  if (rc.initial.kind == InitialSpec::Kind::perturbed)
    rc.initial.base = parse_initial_kind(c.get_string("initial.base", "tanh_band"));
  rc.initial.theta0 = c.get_double("initial.theta0", 1.0);
  rc.initial.pole =
      c.get_string("initial.pole", "north") == "south" ? Pole::south : Pole::north;
  rc.initial.theta1 = c.get_double("initial.theta1", 1.0);
  rc.initial.theta2 = c.get_double("initial.theta2", 2.0);
  rc.initial.checkpoint_path = c.get_string("initial.path", "");
  rc.initial.amplitude = c.get_double("initial.amplitude", 0.0);
  rc.initial.max_degree = static_cast<int>(c.get_long("initial.max_degree", rc.l_max / 4));
  if (rc.initial.amplitude > 0.0) {
    if (!c.has("initial.seed"))
      throw ConfigError("config: initial.seed is required when initial.amplitude > 0");
    rc.initial.seed = static_cast<std::uint64_t>(c.get_long("initial.seed", 0));
  }

  rc.outputs.dir = c.get_string("outputs.dir", "out");
  rc.outputs.snapshot_every = static_cast<int>(c.get_long("outputs.snapshot_every", 0));
  rc.flow.snapshot_every = rc.outputs.snapshot_every;
  const std::string formats = c.get_string("outputs.formats", "csv,txt");
  rc.outputs.write_txt = formats.find("txt") != std::string::npos;
  rc.outputs.write_vtk = formats.find("vtk") != std::string::npos;

  if (c.has("caps.north")) rc.cap_north = c.require_double("caps.north");
  if (c.has("caps.south")) rc.cap_south = c.require_double("caps.south");
  rc.eps_list = c.get_double_list("study.eps_list");

  rc.axisym_dt = c.get_double("axisym.dt", 1e-3);
  rc.axisym_t_end = c.get_double("axisym.t_end", 1.0);
  rc.axisym_l_series = static_cast<int>(c.get_long("axisym.l_series", 512));
  rc.axisym_mode = c.get_string("axisym.mode", "two_cap");

  rc.model.validate();
  if (rc.l_max < 2) throw ConfigError("config: grid.l_max must be >= 2");
  if (rc.oversample < 1.0) throw ConfigError("config: grid.oversample must be >= 1");
  return rc;
}

inline CapSet capset_from_config(const RunConfig& rc) {
  CapSet cs;
  if (rc.cap_north) cs.caps.push_back(Cap{Pole::north, *rc.cap_north});
  if (rc.cap_south) cs.caps.push_back(Cap{Pole::south, *rc.cap_south});
  if (cs.caps.empty()) cs.caps.push_back(Cap{Pole::north, 0.5 * std::numbers::pi});
  cs.validate();
  return cs;
}

inline int env_thread_cap() {
  const char* env = std::getenv("MEMBRANE_THREADS");
  if (env == nullptr) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 1;
}

}  // namespace membrane
