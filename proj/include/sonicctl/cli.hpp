#pragma once

// Commands behind the sonicctl executable. Each writes manifest.ini and
// summary.txt into the output directory and returns a process exit code.

#include "sonicctl/config.hpp"
#include "sonicctl/csvio.hpp"
#include "sonicctl/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sonicctl {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitNotCertified = 3, kExitTolerance = 4 };

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::InvalidParams:
    case ErrorKind::EquilibriumNotSonic:
    case ErrorKind::Unsupported:
    case ErrorKind::OutOfDomain:
    case ErrorKind::SonicFamilyForbidden:
      return kExitValidation;
    case ErrorKind::HypothesisNotCertified: return kExitNotCertified;
    case ErrorKind::ToleranceNotMet: return kExitTolerance;
    default: return kExitNumerical;
  }
}

struct CliArgs {
  std::string command;
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<int> nx;
  std::optional<std::string> epsilon;
  std::vector<std::string> files;
};

/// Ordered key: value report.
class Summary {
 public:
  void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void add(const std::string& key, double v, const char* format = "%.9g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    add(key, std::string(buf));
  }
  void add(const std::string& key, int v) { add(key, std::to_string(v)); }
  void add(const std::string& key, long v) { add(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { add(key, std::string(v ? "yes" : "no")); }
  void add(const std::string& key, const char* v) { add(key, std::string(v)); }
  void add(const std::string& key, const Vec& v, const char* format = "%.9g") {
    std::string s;
    char buf[64];
    for (int k = 0; k < v.size(); ++k) {
      std::snprintf(buf, sizeof buf, format, v(k));
      s += (k ? " " : "") + std::string(buf);
    }
    add(key, s);
  }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : rows_) os << k << ": " << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

namespace cli_detail {

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
  return std::filesystem::path(c.output_dir) / name;
}

inline std::ofstream open_out(const RunConfig& c, const std::string& name) {
  std::ofstream os(out_path(c, name));
  if (!os) throw Error(ErrorKind::Validation, "cannot write " + out_path(c, name).string());
  return os;
}

inline void finish(const RunConfig& c, const Summary& s, std::ostream& out) {
  auto os = open_out(c, "summary.txt");
  s.write(os);
  s.write(out);
}

inline void describe_system(Summary& s, const RunConfig& c, const SystemDef& sys) {
  s.add("model", c.model);
  s.add("equilibrium", to_string(c.equilibrium));
  s.add("length", c.length);
  s.add("u_star", sys.u_star(), "%.17g");
  s.add("lambda_star", sys.lambdas(sys.u_star()));
  s.add("sonic_family", sys.sonic_family());
}

struct Certification {
  double epsilon = 0.0;
  std::optional<bool> rule_met;
  HypothesisReport report;
};

inline Certification certify(const RunConfig& c, const SystemDef& sys) {
  const auto& o = c.control;
  Certification out;
  if (c.epsilon_auto) {
    auto choice = select_epsilon(sys, o.bracket_depth, o.tol);
    out.epsilon = choice.epsilon;
    out.rule_met = choice.rule_met;
    out.report = std::move(choice.report);
    return out;
  }
  out.epsilon = o.epsilon;
  out.report = certify_H(sys, o.epsilon, o.bracket_depth, o.tol);
  return out;
}

inline void describe_report(Summary& s, const RunConfig& c, const Certification& cert) {
  const auto& r = cert.report;
  s.add("epsilon", cert.epsilon);
  if (cert.rule_met) s.add("epsilon_rule_met", *cert.rule_met);
  s.add("bracket_depth", r.bracket_depth);
  s.add("threshold", r.tolerance);
  for (const auto& e : r.h1) {
    const std::string j = "[j=" + std::to_string(e.family) + "]";
    s.add("H1" + j, e.paper_value.value_or(e.value), "%.6f");
    s.add("H1_numeric" + j, e.numeric_paper_value.value_or(e.numeric_value), "%.6f");
    s.add("H1_unit" + j, e.value, "%.6f");
  }
  try {
    const auto closed = analytic_h1_value(c.params, c.equilibrium, c.anchor);
    s.add("H1_closed_form[j=" + std::to_string(closed.family) + "]", closed.value, "%.6f");
  } catch (const Error&) {
  }
  s.add("H1", r.h1_holds);
  for (const auto& e : r.h2) s.add("H2[" + std::to_string(e.j) + "," + std::to_string(e.k) + "]", e.value, "%.6f");
  s.add("H2", r.h2_holds);
  for (const auto& w : r.h3) s.add("H3[" + w.text() + "]", w.value, "%.6f");
  s.add("H3", r.h3_holds);
  s.add("H4_rank", r.h4_rank);
  s.add("H4", r.h4_holds);
  s.add("candidates_tried", r.candidates_tried);
  s.add("certified", r.certified);
  if (r.best) {
    s.add("candidate", r.best->label);
    s.add("candidate_level", r.best->level);
    s.add("lambda_m", r.best->lambda_m);
  }
}

inline void require_certified(const Certification& cert, const SystemDef& sys) {
  if (cert.report.certified) return;
  std::ostringstream os;
  os << "no candidate control moves lambda_" << sys.sonic_family() << " off zero at epsilon = " << cert.epsilon;
  throw Error(ErrorKind::HypothesisNotCertified, os.str());
}

inline void describe_plan(Summary& s, const ZigzagPlan& plan) {
  s.add("chop_level", plan.chop_level);
  s.add("plan_error", plan.error);
  s.add("amplitude_sum", plan.amplitude_sum);
  s.add("legs", plan.size());
  for (int l = 0; l < plan.size(); ++l) {
    const auto& leg = plan.legs[static_cast<std::size_t>(l)];
    char buf[96];
    std::snprintf(buf, sizeof buf, "family %d amplitude %.17g", leg.family, leg.amplitude);
    s.add("leg[" + std::to_string(l + 1) + "]", std::string(buf));
  }
}

inline void describe_timeline(Summary& s, const ReturnTrajectory& traj) {
  s.add("u_bar_star", traj.u_bar_star(), "%.17g");
  s.add("phases", traj.phases());
  for (int l = 1; l <= traj.phases(); ++l) {
    const PhaseInfo ph = traj.phase(l);
    char buf[160];
    if (ph.kind == PhaseInfo::Kind::middle) {
      std::snprintf(buf, sizeof buf, "middle [%.9g, %.9g]", ph.t0, ph.t1);
    } else {
      const auto& leg = traj.legs()[static_cast<std::size_t>(ph.wave)];
      std::snprintf(buf, sizeof buf, "%s family %d amplitude %.9g [%.9g, %.9g]", to_string(ph.kind).c_str(),
                    leg.family, leg.amplitude, ph.t0, ph.t1);
    }
    s.add("phase[" + std::to_string(l) + "]", std::string(buf));
  }
  s.add("T", traj.T(), "%.17g");
  s.add("middle_duration", traj.middle_duration());
}

inline std::vector<double> output_times(double t0, double t1, double dt) {
  std::vector<double> t{t0};
  const int steps = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9));
  for (int k = 1; k < steps; ++k) t.push_back(t0 + dt * k);
  if (t1 > t0) t.push_back(t1);
  return t;
}

inline std::vector<double> nodes(double L, int nx) {
  std::vector<double> x;
  for (int i = 0; i <= nx; ++i) x.push_back(i == nx ? L : L * i / nx);
  return x;
}

inline Profile load_profile(const std::string& path, const RunConfig& c, const SystemDef& sys) {
  if (path.empty()) {
    const Vec us = sys.u_star();
    return [us](double) { return us; };
  }
  return make_profile(read_data_file(path, sys.n()), c.length, path);
}

}  // namespace cli_detail

inline int cmd_check(const RunConfig& c, std::ostream& out) {
  using namespace cli_detail;
  const Model m = c.build();
  Summary s;
  s.add("command", "check");
  describe_system(s, c, m.sys);
  const auto cert = certify(c, m.sys);
  describe_report(s, c, cert);
  finish(c, s, out);
  return cert.report.certified ? kExitOk : kExitNotCertified;
}

inline int cmd_plan(const RunConfig& c, std::ostream& out) {
  using namespace cli_detail;
  const Model m = c.build();
  const auto& sys = m.sys;
  const auto& o = c.control;
  const auto cert = certify(c, sys);
  require_certified(cert, sys);
  const auto plan = plan_zigzag(sys, cert.report.best->control, o.eta_plan, o.k_max, o.tol);
  ReturnOptions ro;
  ro.eta_ramp = o.eta_ramp * c.length;
  ro.tol = o.tol;
  const auto traj = build_return(sys, plan, c.length, ro);
  const auto cone = bridge_cone(sys, plan.achieved, c.length);

  Summary s;
  s.add("command", "plan");
  describe_system(s, c, sys);
  s.add("epsilon", cert.epsilon);
  s.add("candidate", cert.report.best->label);
  s.add("lambda_m", cert.report.best->lambda_m);
  describe_plan(s, plan);
  describe_timeline(s, traj);
  s.add("lambda_bar_star", sys.lambdas(traj.u_bar_star()));
  s.add("slowest_crossing", slowest_crossing(sys, traj.u_bar_star(), c.length));
  s.add("cone_below", cone.below);
  s.add("cone_above", cone.above);
  s.add("middle_for_match", std::max(traj.middle_duration(), (cone.below + cone.above + 0.1) / 0.9));
  if (c.plan_csv) {
    GridSolution g(sys.n(), {}, nodes(c.length, o.nx), "trajectory");
    for (double t : output_times(0.0, traj.T(), o.output_dt)) {
      std::vector<Vec> row;
      for (double x : g.x) row.push_back(traj.value(t, x));
      g.push_row(t, row);
    }
    auto os = open_out(c, "trajectory.csv");
    write_csv(os, g);
    s.add("trajectory_csv", out_path(c, "trajectory.csv").string());
  }
  finish(c, s, out);
  return kExitOk;
}

inline int cmd_wave(const RunConfig& c, std::ostream& out) {
  using namespace cli_detail;
  const Model m = c.build();
  const auto& sys = m.sys;
  const auto& o = c.control;
  const int family = c.wave_family > 0 ? c.wave_family : sys.control_families().front();
  WaveSpec spec;
  spec.family = family;
  spec.u_minus = sys.u_star();
  spec.u_plus = flow_map(sys, family, c.wave_amplitude, sys.u_star(), o.tol);
  spec.s_bar = c.wave_amplitude;
  spec.eta_ramp = o.eta_ramp * c.length;
  const double lam = sys.lambdas(sys.u_star())(family - 1);
  spec.orientation = lam < 0 ? Orientation::left_moving : Orientation::right_moving;
  spec.duration = 0.0;
  const SimpleWave sizing(sys, spec, c.length, o.tol);
  spec.duration = sizing.crossing_time();
  const SimpleWave wave(sys, spec, c.length, o.tol);

  GridSolution g(sys.n(), {}, nodes(c.length, o.nx), "wave");
  for (double t : output_times(0.0, wave.duration(), o.output_dt)) {
    std::vector<Vec> row;
    for (double x : g.x) row.push_back(wave.value(t, x));
    g.push_row(t, row);
  }
  g.residual = residual(sys, g);
  {
    auto os = open_out(c, "wave.csv");
    write_csv(os, g);
  }
  Summary s;
  s.add("command", "wave");
  describe_system(s, c, sys);
  s.add("family", family);
  s.add("amplitude", c.wave_amplitude);
  s.add("orientation", to_string(spec.orientation));
  s.add("u_minus", spec.u_minus, "%.17g");
  s.add("u_plus", spec.u_plus, "%.17g");
  s.add("min_speed", wave.min_speed());
  s.add("max_speed", wave.max_speed());
  s.add("crossing_time", wave.crossing_time());
  s.add("duration", wave.duration());
  s.add("start_gap", row_distance(g.row(0), std::vector<Vec>(g.x.size(), spec.u_minus)));
  s.add("end_gap", row_distance(g.row(g.nt() - 1), std::vector<Vec>(g.x.size(), spec.u_plus)));
  s.add("residual_max", g.residual.max);
  s.add("residual_l2", g.residual.l2);
  finish(c, s, out);
  return kExitOk;
}

inline int cmd_run(const RunConfig& c, std::ostream& out) {
  using namespace cli_detail;
  const Model m = c.build();
  const auto& sys = m.sys;
  const std::string& phi_file = c.phi;
  const std::string& psi_file = c.psi;
  ControlProblem pb{sys, load_profile(phi_file, c, sys), load_profile(psi_file, c, sys), c.length, c.control};
  if (!c.epsilon_auto && c.control.epsilon == 0.0) {
    throw Error(ErrorKind::HypothesisNotCertified, "epsilon = 0 leaves lambda_m at zero");
  }
  const auto r = control(pb);
  const auto& d = r.diag;
  {
    auto os = open_out(c, "solution.csv");
    write_csv(os, r.solution);
  }
  {
    auto os = open_out(c, "traces_left.csv");
    write_trace_csv(os, "left", r.traces.t, r.traces.left);
  }
  {
    auto os = open_out(c, "traces_right.csv");
    write_trace_csv(os, "right", r.traces.t, r.traces.right);
  }
  const auto& o = c.control;
  Summary s;
  s.add("command", "run");
  describe_system(s, c, sys);
  s.add("phi", phi_file.empty() ? std::string("u_star") : phi_file);
  s.add("psi", psi_file.empty() ? std::string("u_star") : psi_file);
  s.add("nx", o.nx);
  s.add("epsilon", r.epsilon);
  s.add("epsilon_rule_met", r.epsilon_rule_met);
  s.add("candidate", r.report.best->label);
  s.add("lambda_m", r.report.best->lambda_m);
  describe_plan(s, r.plan);
  describe_timeline(s, *r.trajectory);
  s.add("middle_default", d.middle_default);
  s.add("middle_extended", d.middle_extended);
  s.add("bridge_center", d.bridge_center);
  s.add("bridge_half_width", d.bridge_half_width);
  s.add("cone_below", d.cone.below);
  s.add("cone_above", d.cone.above);
  s.add("nu_max", o.nu_max);
  s.add("nu_phi", d.nu_phi);
  s.add("nu_psi", d.nu_psi);
  s.add("initial_error", d.initial_error);
  s.add("final_error", d.final_error);
  s.add("final_tol", o.final_tol);
  s.add("sup_deviation", d.sup_deviation);
  s.add("delta_target", o.delta_target);
  s.add("reference_deviation", d.reference_deviation);
  s.add("reference_gap", d.reference_gap);
  s.add("c_eps", d.c_eps);
  s.add("c_nu", d.c_nu);
  s.add("match_bottom_error", d.bottom_error);
  s.add("match_top_error", d.top_error);
  s.add("junction_jump", d.junction_jump);
  s.add("residual_max", d.residual.max);
  s.add("residual_l2", d.residual.l2);
  s.add("rows", r.solution.nt());
  s.add("trace_samples", static_cast<int>(r.traces.t.size()));
  s.add("steps", d.steps);
  s.add("runtime_s", d.runtime_s, "%.3f");
  const bool met = tolerances_met(r, o);
  s.add("tolerances_met", met);
  finish(c, s, out);
  if (!met) require_tolerances(r, o);
  return kExitOk;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  using namespace cli_detail;
  const Model m = c.build();
  const auto& sys = m.sys;
  const auto& o = c.control;
  const std::string& data_file = c.data;
  if (data_file.empty()) throw Error(ErrorKind::Validation, "simulate needs a data file (argument or run.data)");
  const Profile data = make_profile(read_data_file(data_file, sys.n()), c.length, data_file);
  const auto xs = nodes(c.length, o.nx);
  std::vector<Vec> initial;
  for (double x : xs) initial.push_back(data(x));
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (!sys.domain().contains(initial[i])) {
      std::ostringstream os;
      os << data_file << ": value at x = " << xs[i] << " is outside the admissible box";
      throw Error(ErrorKind::Validation, os.str());
    }
  }
  if (c.left_trace.empty() != c.right_trace.empty()) {
    throw Error(ErrorKind::Validation, "run.left_trace and run.right_trace go together");
  }
  EdgeData left, right;
  std::string boundary = "frozen";
  if (!c.left_trace.empty()) {
    const auto lt = read_trace_file(c.left_trace, sys.n());
    const auto rt = read_trace_file(c.right_trace, sys.n());
    if (lt.side != "left" || rt.side != "right") throw Error(ErrorKind::Validation, "trace files have the wrong sides");
    if (c.t_end > std::min(lt.t.back(), rt.t.back()) * (1 + 1e-12)) {
      throw Error(ErrorKind::Validation, "run.t_end lies beyond the recorded traces");
    }
    left = LinearSeries(lt.t, lt.u);
    right = LinearSeries(rt.t, rt.u);
    boundary = "replay";
  } else {
    const Vec a = initial.front(), b = initial.back();
    left = [a](double) { return a; };
    right = [b](double) { return b; };
  }
  IbvpOptions io;
  io.cfl = o.cfl;
  const auto sol = simulate_ibvp(sys, c.length, initial, output_times(0.0, c.t_end, o.output_dt), left, right, io);
  {
    auto os = open_out(c, "simulation.csv");
    write_csv(os, sol);
  }
  double change = 0.0;
  for (int k = 1; k < sol.nt(); ++k) change = std::max(change, row_distance(sol.row(k), sol.row(0)));
  Summary s;
  s.add("command", "simulate");
  describe_system(s, c, sys);
  s.add("data", data_file);
  s.add("boundary", boundary);
  s.add("nx", o.nx);
  s.add("t_end", c.t_end);
  s.add("rows", sol.nt());
  s.add("max_change", change);
  s.add("residual_max", sol.residual.max);
  s.add("residual_l2", sol.residual.l2);
  finish(c, s, out);
  return kExitOk;
}

/// Loads the configuration, applies flag overrides, runs the command and maps
/// failures onto exit codes.
inline int dispatch(const CliArgs& a, std::ostream& out, std::ostream& err) {
  try {
    RunConfig c = load_config(a.config);
    if (a.output_dir) c.output_dir = *a.output_dir;
    if (a.nx) {
      if (*a.nx < 8) throw Error(ErrorKind::Validation, "--nx must be at least 8");
      c.control.nx = *a.nx;
    }
    if (a.epsilon) {
      c.epsilon_auto = *a.epsilon == "auto";
      c.control.epsilon = c.epsilon_auto ? 0.0 : config_detail::to_double(*a.epsilon, "--epsilon");
      if (c.control.epsilon < 0) throw Error(ErrorKind::Validation, "--epsilon must be auto or non-negative");
    }
    const std::size_t max_files = a.command == "run" ? 2 : a.command == "simulate" ? 1 : 0;
    if (a.files.size() > max_files) throw Error(ErrorKind::Validation, a.command + ": too many file arguments");
    if (a.command == "run") {
      if (a.files.size() > 0) c.phi = a.files[0];
      if (a.files.size() > 1) c.psi = a.files[1];
    }
    if (a.command == "simulate" && !a.files.empty()) c.data = a.files[0];
    std::filesystem::create_directories(c.output_dir);
    {
      auto os = cli_detail::open_out(c, "manifest.ini");
      write_manifest(os, c);
    }
    if (a.command == "check") return cmd_check(c, out);
    if (a.command == "plan") return cmd_plan(c, out);
    if (a.command == "wave") return cmd_wave(c, out);
    if (a.command == "run") return cmd_run(c, out);
    if (a.command == "simulate") return cmd_simulate(c, out);
    throw Error(ErrorKind::Validation, "unknown command " + a.command);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace sonicctl
