#pragma once

// Sectioned INI run configuration. Every key has a default; unknown sections
// and keys are rejected. The resolved configuration is echoed as a manifest.

#include "sonicctl/models.hpp"
#include "sonicctl/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace sonicctl {

struct RunConfig {
  std::string model = "saint_venant";
  ModelParams params = SaintVenant{};
  Equilibrium equilibrium = Equilibrium::sonic_right;
  Anchor anchor;
  double length = 1.0;

  ControlOptions control;
  bool epsilon_auto = true;

  std::string output_dir = "out";
  std::string phi;
  std::string psi;
  std::string data;
  std::string left_trace;
  std::string right_trace;
  double t_end = 1.0;
  int wave_family = 0;  ///< 0: first non-sonic family
  double wave_amplitude = 0.05;
  bool plan_csv = false;

  Model build() const { return build_model(params, equilibrium, anchor); }
};

namespace config_detail {

inline const std::map<std::string, std::set<std::string>>& model_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"saint_venant", {"g"}},
      {"isentropic", {"K", "gamma"}},
      {"euler", {"k", "c_v", "R", "gamma", "entropy"}},
      {"ar", {"gamma"}},
      {"mar", {"gamma", "rho0"}},
  };
  return keys;
}

inline const std::map<std::string, std::set<std::string>>& section_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"system", {"model", "equilibrium", "density", "length"}},
      {"control", {"epsilon", "eta_ramp", "eta_plan", "bracket_depth", "delta_target", "nu_max", "final_tol", "k_max"}},
      {"grid", {"nx", "cfl", "window_margin", "output_dt"}},
      {"tolerances", {"ode_tol", "root_tol"}},
      {"run", {"output_dir", "phi", "psi", "data", "left_trace", "right_trace", "t_end", "wave_family",
               "wave_amplitude", "plan_csv"}},
  };
  return keys;
}

inline std::string valid_models() {
  std::string out;
  for (const auto& [name, keys] : model_keys()) out += (out.empty() ? "" : ", ") + name;
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (s.empty() || used != s.size()) throw Error(ErrorKind::Validation, "key " + key + ": '" + s + "' is not a number");
  return v;
}

inline int to_int(const std::string& s, const std::string& key) {
  const double v = to_double(s, key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw Error(ErrorKind::Validation, "key " + key + ": '" + s + "' is not an integer");
  return static_cast<int>(v);
}

inline bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw Error(ErrorKind::Validation, "key " + key + ": '" + s + "' is not a boolean");
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace config_detail

inline RunConfig parse_config(const boost::property_tree::ptree& tree) {
  using namespace config_detail;
  RunConfig c;
  auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
    const auto s = tree.get_child_optional(sec);
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  };
  auto num = [&](const std::string& sec, const std::string& key, double def) {
    const auto v = get(sec, key);
    return v ? to_double(*v, sec + "." + key) : def;
  };
  auto integer = [&](const std::string& sec, const std::string& key, int def) {
    const auto v = get(sec, key);
    return v ? to_int(*v, sec + "." + key) : def;
  };
  auto text = [&](const std::string& sec, const std::string& key, const std::string& def) {
    return get(sec, key).value_or(def);
  };

  c.model = text("system", "model", "saint_venant");
  if (!model_keys().count(c.model)) {
    throw Error(ErrorKind::Validation, "unknown model '" + c.model + "'; valid models: " + valid_models());
  }
  for (const auto& [sec, body] : tree) {
    const auto known = section_keys().find(sec);
    if (known == section_keys().end()) throw Error(ErrorKind::Validation, "unknown section [" + sec + "]");
    for (const auto& [key, value] : body) {
      const bool ok = known->second.count(key) || (sec == "system" && model_keys().at(c.model).count(key));
      if (!ok) throw Error(ErrorKind::Validation, "unknown key " + sec + "." + key + " for model " + c.model);
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  if (c.model == "saint_venant") {
    c.params = SaintVenant{num("system", "g", 1.0)};
  } else if (c.model == "isentropic") {
    c.params = Isentropic{num("system", "K", 1.0), num("system", "gamma", 1.4)};
  } else if (c.model == "euler") {
    c.params = Euler{num("system", "k", 1.0), num("system", "c_v", 1.0), num("system", "R", 1.0),
                     num("system", "gamma", 2.0)};
  } else if (c.model == "ar") {
    c.params = Traffic{num("system", "gamma", 2.0), inf};
  } else {
    c.params = Traffic{num("system", "gamma", 2.0), num("system", "rho0", 4.0)};
  }
  const std::string eq = text("system", "equilibrium", c.model == "euler" ? "rest" : "sonic_right");
  if (eq == "sonic_right") {
    c.equilibrium = Equilibrium::sonic_right;
  } else if (eq == "sonic_left") {
    c.equilibrium = Equilibrium::sonic_left;
  } else if (eq == "rest") {
    c.equilibrium = Equilibrium::rest;
  } else {
    throw Error(ErrorKind::Validation, "equilibrium '" + eq + "' is not one of sonic_right, sonic_left, rest");
  }
  c.anchor.density = num("system", "density", 1.0);
  c.anchor.entropy = num("system", "entropy", 0.0);
  c.length = num("system", "length", 1.0);

  auto& o = c.control;
  const std::string eps = text("control", "epsilon", "auto");
  c.epsilon_auto = eps == "auto";
  o.epsilon = c.epsilon_auto ? 0.0 : to_double(eps, "control.epsilon");
  o.eta_ramp = num("control", "eta_ramp", o.eta_ramp);
  o.eta_plan = num("control", "eta_plan", o.eta_plan);
  o.bracket_depth = integer("control", "bracket_depth", o.bracket_depth);
  o.delta_target = num("control", "delta_target", o.delta_target);
  o.nu_max = num("control", "nu_max", o.nu_max);
  o.final_tol = num("control", "final_tol", o.final_tol);
  o.k_max = integer("control", "k_max", o.k_max);
  o.nx = integer("grid", "nx", o.nx);
  o.cfl = num("grid", "cfl", o.cfl);
  o.window_margin = num("grid", "window_margin", o.window_margin);
  o.output_dt = num("grid", "output_dt", o.output_dt);
  o.tol.ode_tol = num("tolerances", "ode_tol", o.tol.ode_tol);
  o.tol.root_tol = num("tolerances", "root_tol", o.tol.root_tol);

  c.output_dir = text("run", "output_dir", c.output_dir);
  c.phi = text("run", "phi", "");
  c.psi = text("run", "psi", "");
  c.data = text("run", "data", "");
  c.left_trace = text("run", "left_trace", "");
  c.right_trace = text("run", "right_trace", "");
  c.t_end = num("run", "t_end", c.t_end);
  c.wave_family = integer("run", "wave_family", c.wave_family);
  c.wave_amplitude = num("run", "wave_amplitude", c.wave_amplitude);
  if (const auto v = get("run", "plan_csv")) c.plan_csv = to_bool(*v, "run.plan_csv");

  // the Courant number is left to the solvers, which report violations
  auto positive = [](double v, const char* key) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorKind::Validation, std::string(key) + " must be positive");
  };
  positive(c.length, "system.length");
  positive(o.eta_ramp, "control.eta_ramp");
  positive(o.eta_plan, "control.eta_plan");
  positive(o.delta_target, "control.delta_target");
  positive(o.nu_max, "control.nu_max");
  positive(o.final_tol, "control.final_tol");
  positive(o.cfl, "grid.cfl");
  positive(o.output_dt, "grid.output_dt");
  positive(o.tol.ode_tol, "tolerances.ode_tol");
  positive(o.tol.root_tol, "tolerances.root_tol");
  positive(c.t_end, "run.t_end");
  if (o.epsilon < 0) throw Error(ErrorKind::Validation, "control.epsilon must be auto or non-negative");
  if (o.window_margin < 0) throw Error(ErrorKind::Validation, "grid.window_margin must be non-negative");
  if (o.bracket_depth < 2 || o.bracket_depth > 6) throw Error(ErrorKind::Validation, "control.bracket_depth must be in 2..6");
  if (o.k_max < 1) throw Error(ErrorKind::Validation, "control.k_max must be positive");
  if (o.nx < 8) throw Error(ErrorKind::Validation, "grid.nx must be at least 8");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot open config " + path);
    try {
      boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(ErrorKind::Validation, path + ": " + e.message() + " at line " + std::to_string(e.line()));
    }
  }
  return parse_config(tree);
}

/// Fully resolved configuration, defaults included.
inline boost::property_tree::ptree manifest(const RunConfig& c) {
  using config_detail::fmt;
  boost::property_tree::ptree t;
  t.put("system.model", c.model);
  std::visit(
      [&t](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SaintVenant>) {
          t.put("system.g", fmt(p.g));
        } else if constexpr (std::is_same_v<P, Isentropic>) {
          t.put("system.K", fmt(p.K));
          t.put("system.gamma", fmt(p.gamma));
        } else if constexpr (std::is_same_v<P, Euler>) {
          t.put("system.k", fmt(p.k));
          t.put("system.c_v", fmt(p.c_v));
          t.put("system.R", fmt(p.R));
          t.put("system.gamma", fmt(p.gamma));
        } else {
          t.put("system.gamma", fmt(p.gamma));
          if (!p.is_ar()) t.put("system.rho0", fmt(p.rho0));
        }
      },
      c.params);
  t.put("system.equilibrium", to_string(c.equilibrium));
  t.put("system.density", fmt(c.anchor.density));
  if (c.model == "euler") t.put("system.entropy", fmt(c.anchor.entropy));
  t.put("system.length", fmt(c.length));
  const auto& o = c.control;
  t.put("control.epsilon", c.epsilon_auto ? std::string("auto") : fmt(o.epsilon));
  t.put("control.eta_ramp", fmt(o.eta_ramp));
  t.put("control.eta_plan", fmt(o.eta_plan));
  t.put("control.bracket_depth", o.bracket_depth);
  t.put("control.delta_target", fmt(o.delta_target));
  t.put("control.nu_max", fmt(o.nu_max));
  t.put("control.final_tol", fmt(o.final_tol));
  t.put("control.k_max", o.k_max);
  t.put("grid.nx", o.nx);
  t.put("grid.cfl", fmt(o.cfl));
  t.put("grid.window_margin", fmt(o.window_margin));
  t.put("grid.output_dt", fmt(o.output_dt));
  t.put("tolerances.ode_tol", fmt(o.tol.ode_tol));
  t.put("tolerances.root_tol", fmt(o.tol.root_tol));
  t.put("run.output_dir", c.output_dir);
  t.put("run.phi", c.phi);
  t.put("run.psi", c.psi);
  t.put("run.data", c.data);
  t.put("run.left_trace", c.left_trace);
  t.put("run.right_trace", c.right_trace);
  t.put("run.t_end", fmt(c.t_end));
  t.put("run.wave_family", c.wave_family);
  t.put("run.wave_amplitude", fmt(c.wave_amplitude));
  t.put("run.plan_csv", c.plan_csv ? "true" : "false");
  return t;
}

inline void write_manifest(std::ostream& os, const RunConfig& c) { boost::property_tree::write_ini(os, manifest(c)); }

}  // namespace sonicctl
