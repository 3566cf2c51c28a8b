#pragma once

// End-to-end controller: data phi at t = 0 is carried along the return
// trajectory, joined in the middle to the backward solve from psi, and the
// realized boundary values are returned as the controls.

#include "sonicctl/core.hpp"
#include "sonicctl/grid.hpp"
#include "sonicctl/interp.hpp"
#include "sonicctl/reachability.hpp"
#include "sonicctl/solver.hpp"
#include "sonicctl/waves.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <memory>
#include <sstream>
#include <vector>

namespace sonicctl {

using Profile = std::function<Vec(double)>;

struct ControlOptions {
  double epsilon = 0.0;  ///< 0 selects from {0.025, 0.05, 0.1}
  double eta_ramp = 0.5;  ///< ramp width, multiple of L
  double eta_plan = 1e-3;
  int k_max = 1024;  ///< largest chop level
  int bracket_depth = 3;
  double delta_target = 0.25;
  double nu_max = 0.02;
  double final_tol = 5e-3;
  int nx = 400;
  double cfl = 0.45;
  double window_margin = 0.5;  ///< multiple of L beyond the blend strips
  double strip = 0.25;         ///< blend strip, multiple of L
  double output_dt = 0.02;     ///< spacing of stored rows
  double match_tol = 5e-4;
  Tolerances tol;
};

/// sup |f - u*| + sup |f'| over the nodes of [0, L].
inline double c1_distance(const Profile& f, const Vec& u_star, double L, int nx) {
  const double h = L / nx;
  std::vector<Vec> v;
  for (int i = 0; i <= nx; ++i) v.push_back(f(i == nx ? L : h * i) - u_star);
  double val = 0.0, slope = 0.0;
  for (int i = 0; i <= nx; ++i) {
    val = std::max(val, v[static_cast<std::size_t>(i)].cwiseAbs().maxCoeff());
    const int a = std::max(0, i - 1), b = std::min(nx, i + 1);
    slope = std::max(slope, (v[static_cast<std::size_t>(b)] - v[static_cast<std::size_t>(a)]).cwiseAbs().maxCoeff() /
                                (h * (b - a)));
  }
  return val + slope;
}

struct ControlProblem {
  SystemDef sys;
  Profile phi;
  Profile psi;
  double length = 1.0;
  ControlOptions opts;

  /// Measured C^1 distances of phi and psi from u*; throws Validation when
  /// either exceeds nu_max or leaves the box.
  std::pair<double, double> validate() const {
    const auto& o = opts;
    if (!(length > 0) || o.nx < 8 || !(o.cfl > 0 && o.cfl < 1) || !(o.eta_ramp > 0) || !(o.output_dt > 0)) {
      throw Error(ErrorKind::Validation, "length, nx >= 8, cfl in (0, 1), eta_ramp and output_dt must be valid");
    }
    if (!phi || !psi) throw Error(ErrorKind::Validation, "phi and psi are required");
    const double h = length / o.nx;
    for (int i = 0; i <= o.nx; ++i) {
      for (const auto* f : {&phi, &psi}) {
        const Vec u = (*f)(h * i);
        if (u.size() != sys.n() || !u.allFinite() || !sys.domain().contains(u)) {
          std::ostringstream os;
          os << (f == &phi ? "phi" : "psi") << " at x = " << h * i << " is outside the admissible box";
          throw Error(ErrorKind::Validation, os.str());
        }
      }
    }
    const double a = c1_distance(phi, sys.u_star(), length, o.nx);
    const double b = c1_distance(psi, sys.u_star(), length, o.nx);
    if (a > o.nu_max || b > o.nu_max) {
      std::ostringstream os;
      os << "data too far from u*: |phi - u*|_C1 = " << a << ", |psi - u*|_C1 = " << b << ", nu_max = " << o.nu_max;
      throw Error(ErrorKind::Validation, os.str());
    }
    return {a, b};
  }
};

struct EpsilonChoice {
  double epsilon = 0.0;
  HypothesisReport report;
  bool rule_met = false;  ///< |lambda_m| >= 0.1 max |lambda(u*)|
};

/// Smallest epsilon in {0.025, 0.05, 0.1} whose certified endpoint clears a
/// tenth of the largest speed at u*; otherwise the certified one with the
/// largest clearance.
inline EpsilonChoice select_epsilon(const SystemDef& sys, int depth, const Tolerances& tol = {}) {
  const double target = 0.1 * max_speed(sys, sys.u_star());
  std::optional<EpsilonChoice> best;
  for (double eps : {0.025, 0.05, 0.1}) {
    EpsilonChoice c{eps, certify_H(sys, eps, depth, tol), false};
    if (!c.report.certified) continue;
    const double lam = std::abs(c.report.best->lambda_m);
    c.rule_met = lam >= target;
    if (c.rule_met) return c;
    if (!best || lam > std::abs(best->report.best->lambda_m)) best = std::move(c);
  }
  if (best) return *best;
  return {0.1, certify_H(sys, 0.1, depth, tol), false};
}

struct Segment {
  PhaseInfo phase;
  GridSolution grid;  ///< rows on the nodes of [0, L]
};

struct BoundaryTraces {
  std::vector<double> t;
  std::vector<Vec> left;   ///< u(t, 0)
  std::vector<Vec> right;  ///< u(t, L)
};

struct ControlDiagnostics {
  double nu_phi = 0.0;
  double nu_psi = 0.0;
  double initial_error = 0.0;
  double final_error = 0.0;
  double sup_deviation = 0.0;        ///< sup |u - u*|
  double reference_deviation = 0.0;  ///< sup |u_bar - u*|
  double reference_gap = 0.0;        ///< sup |u - u_bar|
  double c_eps = 0.0;                ///< reference_deviation / epsilon
  double c_nu = 0.0;                 ///< (sup_deviation - reference_deviation) / nu
  double bottom_error = 0.0;
  double top_error = 0.0;
  double junction_jump = 0.0;
  ResidualStats residual;
  double middle_default = 0.0;
  double middle_duration = 0.0;
  bool middle_extended = false;
  double bridge_center = 0.0;
  double bridge_half_width = 0.0;
  BridgeCone cone;
  long steps = 0;
  double runtime_s = 0.0;
};

struct ControlResult {
  double epsilon = 0.0;
  bool epsilon_rule_met = true;
  HypothesisReport report;
  ZigzagPlan plan;
  std::shared_ptr<const ReturnTrajectory> trajectory;
  std::vector<Segment> segments;
  GridSolution solution;
  BoundaryTraces traces;
  ControlDiagnostics diag;

  double T() const { return trajectory->T(); }
  const std::vector<double>& timeline() const { return trajectory->timeline(); }
};

inline bool tolerances_met(const ControlResult& r, const ControlOptions& o) {
  return r.diag.final_error <= o.final_tol && r.diag.sup_deviation <= o.delta_target;
}

inline void require_tolerances(const ControlResult& r, const ControlOptions& o) {
  if (tolerances_met(r, o)) return;
  std::ostringstream os;
  os << "final error " << r.diag.final_error << " (tolerance " << o.final_tol << "), sup deviation "
     << r.diag.sup_deviation << " (target " << o.delta_target << ")";
  throw Error(ErrorKind::ToleranceNotMet, os.str());
}

inline BoundaryTraces extract_traces(const ControlResult& r) { return r.traces; }

namespace detail {

inline std::vector<Vec> sample_interval(const Profile& f, double L, int nx) {
  std::vector<Vec> out;
  for (int i = 0; i <= nx; ++i) out.push_back(f(i == nx ? L : L * i / nx));
  return out;
}

inline std::vector<Vec> restrict_to(const Window& w, const std::vector<Vec>& row, int nx) {
  const auto j0 = static_cast<std::ptrdiff_t>(w.index_of(0.0));
  return {row.begin() + j0, row.begin() + j0 + nx + 1};
}

template <class F>
auto in_phase(int l, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "phase " + std::to_string(l) + ": " + e.what());
  }
}

struct BackwardRecord {
  std::vector<Vec> start_row;  ///< whole window at the phase start
  std::vector<double> step_t;
  std::vector<Vec> left_edge, right_edge;
  long steps = 0;
};

inline void append_traces(BoundaryTraces& tr, const std::vector<double>& t, const std::vector<Vec>& left,
                          const std::vector<Vec>& right) {
  const std::size_t from = tr.t.empty() ? 0 : 1;
  for (std::size_t k = from; k < t.size(); ++k) {
    tr.t.push_back(t[k]);
    tr.left.push_back(left[k]);
    tr.right.push_back(right[k]);
  }
}

}  // namespace detail

inline ControlResult control(const ControlProblem& pb) {
  const auto start = std::chrono::steady_clock::now();
  const auto [nu_phi, nu_psi] = pb.validate();
  const SystemDef& sys = pb.sys;
  const ControlOptions& o = pb.opts;
  const double L = pb.length;
  const int nx = o.nx;

  ControlResult res;
  res.diag.nu_phi = nu_phi;
  res.diag.nu_psi = nu_psi;
  if (o.epsilon > 0.0) {
    res.epsilon = o.epsilon;
    res.report = certify_H(sys, o.epsilon, o.bracket_depth, o.tol);
  } else {
    auto choice = select_epsilon(sys, o.bracket_depth, o.tol);
    res.epsilon = choice.epsilon;
    res.epsilon_rule_met = choice.rule_met;
    res.report = std::move(choice.report);
  }
  if (!res.report.certified) {
    std::ostringstream os;
    os << "no candidate control moves lambda_" << sys.sonic_family() << " off zero at epsilon = " << res.epsilon;
    throw Error(ErrorKind::HypothesisNotCertified, os.str());
  }
  res.plan = plan_zigzag(sys, res.report.best->control, o.eta_plan, o.k_max, o.tol);

  ReturnOptions ro;
  ro.eta_ramp = o.eta_ramp * L;
  ro.tol = o.tol;
  auto traj = std::make_shared<ReturnTrajectory>(build_return(sys, res.plan, L, ro));
  auto& d = res.diag;
  d.cone = bridge_cone(sys, res.plan.achieved, L);
  d.middle_default = traj->middle_duration();
  const double need = (d.cone.below + d.cone.above + 0.1) / 0.9;
  if (need > d.middle_default) {
    traj->set_middle_duration(need);
    d.middle_extended = true;
  }
  res.trajectory = traj;
  const int p = traj->p();
  const auto& tau = traj->timeline();
  const double t_p = tau[static_cast<std::size_t>(p)], t_q = tau[static_cast<std::size_t>(p) + 1];
  d.middle_duration = t_q - t_p;
  d.bridge_half_width = 0.05 * d.middle_duration;
  d.bridge_center = t_p + 0.5 * (d.middle_duration + d.cone.below - d.cone.above);

  const Window w = Window::around(L, nx, (o.strip + o.window_margin) * L);
  const int j0 = w.index_of(0.0), jL = w.index_of(L);
  auto edges_of = [&w, traj](int l, CauchyOptions& co) {
    const double lo = w.x_lo, hi = w.x_hi();
    co.far_left = [traj, l, lo](double t) { return traj->value_in_phase(l, t, lo); };
    co.far_right = [traj, l, hi](double t) { return traj->value_in_phase(l, t, hi); };
  };
  auto reference_row = [traj](int l, double t) { return [traj, l, t](double x) { return traj->value_in_phase(l, t, x); }; };

  // backward chain from psi, concurrently with the forward chain
  auto backward = std::async(std::launch::async, [&]() {
    std::vector<detail::BackwardRecord> recs(static_cast<std::size_t>(p));
    std::vector<Vec> cur = detail::sample_interval(pb.psi, L, nx);
    for (int l = 2 * p + 1; l >= p + 2; --l) {
      const PhaseInfo ph = traj->phase(l);
      CauchyOptions co;
      co.cfl = o.cfl;
      co.record_every = std::numeric_limits<int>::max();
      co.record_lo = 0.0;
      co.record_hi = L;
      co.record_edges = true;
      co.tag = "backward";
      edges_of(l, co);
      const auto r = detail::in_phase(l, [&] {
        return cauchy_solve(sys, w, blend_to_reference(w, cur, nx, L, o.strip, reference_row(l, ph.t1)), ph.t1, ph.t0,
                            co);
      });
      auto& rec = recs[static_cast<std::size_t>(l - p - 2)];
      rec.start_row = r.final_row;
      rec.step_t = r.step_t;
      rec.left_edge = r.left_edge;
      rec.right_edge = r.right_edge;
      rec.steps = r.steps;
      cur = detail::restrict_to(w, r.final_row, nx);
    }
    return std::make_pair(std::move(recs), std::move(cur));
  });

  // forward chain from phi
  std::vector<Vec> cur = detail::sample_interval(pb.phi, L, nx);
  try {
    for (int l = 1; l <= p; ++l) {
      const PhaseInfo ph = traj->phase(l);
      CauchyOptions co;
      co.cfl = o.cfl;
      co.record_dt = o.output_dt;
      co.record_lo = 0.0;
      co.record_hi = L;
      co.trace_nodes = {j0, jL};
      co.tag = "cauchy";
      edges_of(l, co);
      const auto r = detail::in_phase(l, [&] {
        return cauchy_solve(sys, w, blend_to_reference(w, cur, nx, L, o.strip, reference_row(l, ph.t0)), ph.t0, ph.t1,
                            co);
      });
      res.segments.push_back({ph, r.solution});
      detail::append_traces(res.traces, r.step_t, r.traces[0], r.traces[1]);
      d.steps += r.steps;
      cur = detail::restrict_to(w, r.final_row, nx);
    }
  } catch (...) {
    backward.wait();
    throw;
  }
  auto [recs, psi_tilde] = backward.get();
  for (const auto& rec : recs) d.steps += rec.steps;

  // middle
  MatchSpec ms;
  ms.bottom = cur;
  ms.top = psi_tilde;
  ms.t_bottom = t_p;
  ms.t_top = t_q;
  ms.t_mid = d.bridge_center;
  ms.half_width = d.bridge_half_width;
  ms.reference = res.plan.achieved;
  MatchOptions mo;
  mo.length = L;
  mo.nx = nx;
  mo.cfl = o.cfl;
  mo.strip = o.strip;
  mo.margin = o.window_margin;
  mo.sideways_dt = 8.0 * L / nx;
  mo.match_tol = o.match_tol;
  const auto mid = detail::in_phase(p + 1, [&] { return match_middle(sys, ms, mo); });
  d.bottom_error = mid.bottom_error;
  d.top_error = mid.top_error;
  d.steps += mid.forward_steps + mid.backward_steps;
  {
    const auto& g = mid.solution;
    std::vector<Vec> left, right;
    for (int k = 0; k < g.nt(); ++k) {
      left.push_back(g.at(k, 0));
      right.push_back(g.at(k, g.nx() - 1));
    }
    detail::append_traces(res.traces, g.t, left, right);
    res.segments.push_back({traj->phase(p + 1), g});
  }
  d.junction_jump = p > 0 ? row_distance(res.segments[static_cast<std::size_t>(p) - 1].grid.row(
                                             res.segments[static_cast<std::size_t>(p) - 1].grid.nt() - 1),
                                         mid.solution.row(0))
                          : 0.0;

  // backward phases, re-solved forward from the matched top row
  cur = mid.solution.row(mid.solution.nt() - 1);
  for (int l = p + 2; l <= 2 * p + 1; ++l) {
    const PhaseInfo ph = traj->phase(l);
    const auto& rec = recs[static_cast<std::size_t>(l - p - 2)];
    const SampledCurve around(rec.start_row, w.x_lo, w.dx);
    CauchyOptions co;
    co.cfl = o.cfl;
    co.record_dt = o.output_dt;
    co.record_lo = 0.0;
    co.record_hi = L;
    co.trace_nodes = {j0, jL};
    co.far_left = LinearSeries(rec.step_t, rec.left_edge);
    co.far_right = LinearSeries(rec.step_t, rec.right_edge);
    const auto r = detail::in_phase(l, [&] {
      return cauchy_solve(sys, w,
                          blend_to_reference(w, cur, nx, L, o.strip, [&around](double x) { return around.value(x); }),
                          ph.t0, ph.t1, co);
    });
    res.segments.push_back({ph, r.solution});
    detail::append_traces(res.traces, r.step_t, r.traces[0], r.traces[1]);
    d.steps += r.steps;
    cur = detail::restrict_to(w, r.final_row, nx);
  }

  // assembly and diagnostics
  const std::vector<Vec> psi_nodes = detail::sample_interval(pb.psi, L, nx);
  const std::vector<Vec> phi_nodes = detail::sample_interval(pb.phi, L, nx);
  d.final_error = row_distance(cur, psi_nodes);
  const auto& first = res.segments.front().grid;
  res.solution = GridSolution(sys.n(), {}, first.x, "control");
  double sq = 0.0;
  for (const auto& seg : res.segments) {
    const auto& g = seg.grid;
    for (int k = res.solution.nt() == 0 ? 0 : 1; k < g.nt(); ++k) res.solution.push_row(g.t[static_cast<std::size_t>(k)], g.row(k));
    d.residual.max = std::max(d.residual.max, g.residual.max);
    sq += g.residual.l2 * g.residual.l2 * static_cast<double>(g.residual.count);
    d.residual.count += g.residual.count;
  }
  d.residual.l2 = d.residual.count > 0 ? std::sqrt(sq / static_cast<double>(d.residual.count)) : 0.0;
  d.initial_error = row_distance(res.solution.row(0), phi_nodes);
  d.sup_deviation = res.solution.deviation_from(sys.u_star());
  const Vec& us = sys.u_star();
  for (int k = 0; k < res.solution.nt(); ++k) {
    const double t = res.solution.t[static_cast<std::size_t>(k)];
    for (int i = 0; i < res.solution.nx(); i += 4) {
      const Vec ref = traj->value(t, res.solution.x[static_cast<std::size_t>(i)]);
      d.reference_deviation = std::max(d.reference_deviation, (ref - us).cwiseAbs().maxCoeff());
      d.reference_gap = std::max(d.reference_gap, (res.solution.at(k, i) - ref).cwiseAbs().maxCoeff());
    }
  }
  d.c_eps = d.reference_deviation / res.epsilon;
  const double nu = std::max(nu_phi, nu_psi);
  d.c_nu = nu > 0 ? std::max(0.0, d.sup_deviation - d.reference_deviation) / nu : 0.0;
  d.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Runs the plain IBVP from the initial row with the recorded traces as
/// boundary data, on the same nodes and times as the result.
inline GridSolution replay_traces(const SystemDef& sys, const ControlResult& r, double L, double cfl = 0.45) {
  const LinearSeries left(r.traces.t, r.traces.left), right(r.traces.t, r.traces.right);
  IbvpOptions io;
  io.cfl = cfl;
  return simulate_ibvp(sys, L, r.solution.row(0), r.solution.t, left, right, io);
}

}  // namespace sonicctl
