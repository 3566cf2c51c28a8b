// One pass/fail line per acceptance criterion. Exit status is the number of
// failed criteria.

#include "sonicctl/models.hpp"
#include "sonicctl/pipeline.hpp"
#include "sonicctl/reachability.hpp"
#include "sonicctl/waves.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sonicctl;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kInf = std::numeric_limits<double>::infinity();
const Tolerances kTol{};
const double kChainTol = 10 * (kTol.ode_tol + kTol.root_tol);

Model sv() { return build_model(SaintVenant{1.0}, Equilibrium::sonic_right, Anchor{1.0}); }
Model isentropic() { return build_model(Isentropic{1.0, 1.4}, Equilibrium::sonic_right, Anchor{1.0}); }
Model ar() { return build_model(Traffic{2.0, kInf}, Equilibrium::sonic_right, Anchor{1.0}); }
Model euler() { return build_model(Euler{}, Equilibrium::rest, Anchor{1.0, 0.0}); }

std::vector<Model> end_to_end_models() { return {sv(), isentropic(), ar(), euler()}; }

const H1Entry* h1_for(const HypothesisReport& r, int family) {
  for (const auto& e : r.h1) {
    if (e.family == family) return &e;
  }
  return nullptr;
}

// --- 1: closed forms --------------------------------------------------------

void criterion_1(Outcome& o) {
  struct Case {
    const char* name;
    Model model;
    int family;
    double exact;
    bool numeric;
  };
  // p'(rho) = gamma rho^-2 (1/rho - 1/rho0)^-(gamma+1) for the modified traffic pressure
  const double mar_dp = 2.0 * std::pow(1.0 - 0.25, -3.0);
  const std::vector<Case> cases{
      {"isentropic", isentropic(), 2, (3.0 - 1.4) / 2.0, true},
      {"euler", euler(), 1, -std::sqrt(2.0), true},
      {"mar", build_model(Traffic{2.0, 4.0}, Equilibrium::rest, Anchor{1.0}), 1, -mar_dp, false},
  };
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto choice = select_epsilon(c.model.sys, 3, kTol);
    const double elapsed = seconds_since(t0);
    const H1Entry* e = h1_for(choice.report, c.family);
    o.require(e && e->paper_value, std::string(c.name) + " has no closed-form H1 entry");
    if (!e || !e->paper_value) continue;
    char buf[160];
    std::snprintf(buf, sizeof buf, " %s H1[j=%d] = %.6f (numeric %.6f, exact %.6f, %.3f s);", c.name, c.family,
                  *e->paper_value, e->numeric_paper_value.value_or(NAN), c.exact, elapsed);
    o.detail << buf;
    o.require(std::abs(*e->paper_value - c.exact) <= 1e-6, std::string(c.name) + " analytic value");
    if (c.numeric) {
      o.require(e->numeric_paper_value && std::abs(*e->numeric_paper_value - c.exact) <= 1e-4,
                std::string(c.name) + " numeric value");
    }
    o.require(choice.report.certified, std::string(c.name) + " certified");
    o.require(elapsed < 1.0, std::string(c.name) + " runtime");
  }
}

// --- 2: flow maps -------------------------------------------------------------

void criterion_2(Outcome& o) {
  const auto m = build_model(Isentropic{0.5, 2.0}, Equilibrium::sonic_right, Anchor{1.0});
  const Vec z = flow_map(m.sys, 2, 0.2, make_vec({1.0, 1.0}), kTol, Normalization::paper);
  const double closed = std::max(std::abs(z(0) - 1.21), std::abs(z(1) - 1.2));
  o.detail << " Phi_2(0.2,(1,1)) off by " << closed << ";";
  o.require(closed <= 1e-8, "closed form");

  double worst = 0.0;
  int models = 0;
  for (const auto& model : testing::bundled_models()) {
    const auto& sys = model.sys;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> param(-0.2, 0.2);
    int checked = 0;
    for (const Vec& u : testing::halton_points(sys.domain(), 200, 0.3)) {
      if (checked >= 50) break;
      const int j = sys.control_families()[static_cast<std::size_t>(checked) % sys.control_families().size()];
      const double s = param(rng), a = param(rng) / 2, b = param(rng) / 2;
      try {
        const Vec back = flow_map(sys, j, -s, flow_map(sys, j, s, u, kTol), kTol);
        const Vec ab = flow_map(sys, j, a + b, u, kTol);
        const Vec a_b = flow_map(sys, j, a, flow_map(sys, j, b, u, kTol), kTol);
        worst = std::max({worst, (back - u).norm(), (ab - a_b).norm()});
        ++checked;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::LeftDomain) throw;
      }
    }
    o.require(checked == 50, sys.name() + " sampled " + std::to_string(checked) + " points");
    ++models;
  }
  o.detail << " inverse/semigroup worst " << worst << " over " << models << " models x 50 points";
  o.require(worst <= 10 * kTol.ode_tol, "inverse and semigroup");
}

// --- 3: chop ------------------------------------------------------------------

void criterion_3(Outcome& o) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const std::vector<std::function<double(double)>> primitives{
      [](double s) { return -std::cos(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi); },
      [](double s) { return std::sin(3.0 * s) / 3.0; },
      [](double s) { return std::exp(s); },
      [](double s) { return s * s * s / 3.0; },
      [](double s) { return std::log1p(s); },
  };
  auto pairing = [&](const PiecewiseControl& c, const std::function<double(double)>& H) {
    Vec out = Vec::Zero(c.values.front().size());
    for (int q = 0; q < c.pieces(); ++q) {
      out += c.values[static_cast<std::size_t>(q)] *
             (H(c.breaks[static_cast<std::size_t>(q) + 1]) - H(c.breaks[static_cast<std::size_t>(q)]));
    }
    return out;
  };
  double integral_err = 0.0;
  bool weak_decreasing = true;
  for (int trial = 0; trial < 10; ++trial) {
    PiecewiseControl f;
    f.breaks = {0.0, 0.3, 0.55, 1.0};
    for (int q = 0; q < 3; ++q) f.values.push_back(make_vec({val(rng), val(rng), val(rng)}));
    std::vector<double> prev(primitives.size(), kInf);
    for (int k = 1; k <= 64; k *= 2) {
      const auto g = chop(f, k);
      integral_err = std::max(integral_err, (g.integral() - f.integral()).cwiseAbs().maxCoeff());
      for (std::size_t h = 0; h < primitives.size(); ++h) {
        const double e = (pairing(g, primitives[h]) - pairing(f, primitives[h])).cwiseAbs().sum();
        if (!(e < prev[h])) weak_decreasing = false;
        prev[h] = e;
      }
    }
  }
  o.detail << " integral error " << integral_err << ";";
  o.require(integral_err <= 1e-12, "integrals");
  o.detail << " weak-* pairing " << (weak_decreasing ? "decreases" : "does not decrease") << " under k-doubling;";
  o.require(weak_decreasing, "weak-* convergence");

  const auto m = euler();
  std::mt19937 rng2(5);
  std::uniform_real_distribution<double> small(-0.04, 0.04);
  std::uniform_int_distribution<int> pieces(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PiecewiseControl alpha;
    const int q = pieces(rng2);
    alpha.breaks = {0.0};
    for (int i = 1; i <= q; ++i) {
      alpha.breaks.push_back(static_cast<double>(i) / q);
      alpha.values.push_back(make_vec({small(rng2), small(rng2)}));
    }
    const auto plan = plan_zigzag(m.sys, alpha, 1e-3, 1024, kTol);
    worst = std::max(worst, plan.amplitude_sum / ((m.sys.n() - 1) * alpha.sup_norm()));
  }
  o.detail << " max sum|t_l| / ((n-1)|alpha|) = " << worst << " over 20 controls";
  o.require(worst <= 1.0 + 1e-9, "amplitude bound");
}

// --- 4: zigzag and certification -------------------------------------------------

void criterion_4(Outcome& o) {
  const auto m = euler();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(-0.25, 0.25);
  double worst_err = 0.0;
  int worst_k = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto plan = plan_zigzag(m.sys, constant_control(make_vec({val(rng), val(rng)})), 1e-3, 64, kTol);
    worst_err = std::max(worst_err, plan.error);
    worst_k = std::max(worst_k, plan.chop_level);
  }
  o.detail << " euler zigzag worst error " << worst_err << " at k <= " << worst_k << ";";
  o.require(worst_err <= 1e-3 && worst_k <= 64, "zigzag");
  std::vector<Model> models = end_to_end_models();
  models.push_back(build_model(Traffic{2.0, 4.0}, Equilibrium::rest, Anchor{1.0}));
  for (const auto& model : models) {
    const auto rep = certify_H(model.sys, 0.05, 3, kTol);
    const double lam = rep.best ? std::abs(rep.best->lambda_m) : 0.0;
    o.detail << " " << model.sys.name() << " |lambda_m| = " << lam << ";";
    o.require(rep.certified && lam >= 0.01, model.sys.name() + " certification");
  }
}

// --- 5: simple waves ---------------------------------------------------------------

double residual_at(const SystemDef& sys, const SimpleWave& w, double h) {
  double out = 0.0;
  for (int i = 1; i < 20; ++i) {
    for (int k = 0; k <= 40; ++k) {
      const double t = w.duration() * i / 20.0, x = -1.0 + 3.0 * k / 40.0;
      const Vec ut = (w.value(t + h, x) - w.value(t - h, x)) / (2 * h);
      const Vec ux = (w.value(t, x + h) - w.value(t, x - h)) / (2 * h);
      out = std::max(out, (ut + sys.A(w.value(t, x)) * ux).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

void criterion_5(Outcome& o) {
  // Saint-Venant about (1, -1): family 1 is non-sonic there and moves left
  const auto m = build_model(SaintVenant{1.0}, Equilibrium::sonic_left, Anchor{1.0});
  const auto& sys = m.sys;
  WaveSpec spec;
  spec.family = 1;
  spec.u_minus = sys.u_star();
  spec.s_bar = 0.05;
  spec.u_plus = flow_map(sys, 1, spec.s_bar, spec.u_minus, kTol);
  spec.orientation = Orientation::left_moving;
  const SimpleWave w(sys, spec, 1.0, kTol);

  const double r1 = residual_at(sys, w, 0.02), r2 = residual_at(sys, w, 0.01), r3 = residual_at(sys, w, 0.005);
  const double p1 = std::log2(r1 / r2), p2 = std::log2(r2 / r3);
  o.detail << " residual orders " << p1 << ", " << p2 << ";";
  o.require(p1 >= 1.9 && p2 >= 1.9, "residual order");

  double start = 0.0, end = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    start = std::max(start, (w.value(0.0, x) - spec.u_minus).cwiseAbs().maxCoeff());
    end = std::max(end, (w.value(w.duration(), x) - spec.u_plus).cwiseAbs().maxCoeff());
  }
  o.detail << " sweep gaps " << start << " / " << end << ";";
  o.require(start <= kChainTol && end <= kChainTol, "sweep endpoints");

  // mid-crossing, over the whole finite-volume domain; its error is estimated
  // from its own refinement, not from the wave
  const double T = 0.5 * w.duration();
  const auto init = [&](double x) { return w.profile(x); };
  const auto coarse = testing::sv_finite_volume(1.0, -3.0, 3.0, 600, init, T);
  const auto fine = testing::sv_finite_volume(1.0, -3.0, 3.0, 1200, init, T);
  double gap = 0.0, self = 0.0;
  for (std::size_t i = 0; i < coarse.x.size(); ++i) {
    gap = std::max(gap, (coarse.u[i] - w.value(T, coarse.x[i])).cwiseAbs().maxCoeff());
    const Vec pair = 0.5 * (fine.u[2 * i] + fine.u[2 * i + 1]);
    self = std::max(self, (coarse.u[i] - pair).cwiseAbs().maxCoeff());
  }
  o.detail << " finite-volume gap " << gap << " vs its error estimate " << self;
  o.require(gap <= 5 * self, "finite-volume agreement");
}

// --- 6: return trajectory ----------------------------------------------------------

void criterion_6(Outcome& o) {
  for (const auto& model : end_to_end_models()) {
    const auto& sys = model.sys;
    const auto rep = certify_H(sys, 0.05, 3, kTol);
    const auto plan = plan_zigzag(sys, rep.best->control, 1e-3, 1024, kTol);
    ReturnOptions ro;
    ro.tol = kTol;
    const auto traj = build_return(sys, plan, 1.0, ro);
    const auto& tau = traj.timeline();
    const int p = traj.p();
    bool ends = true, middle = true;
    double jump = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = i / 400.0;
      ends = ends && traj.value(0.0, x) == sys.u_star() && traj.value(traj.T(), x) == sys.u_star();
      for (int k = 0; k <= 10; ++k) {
        const double t = tau[static_cast<std::size_t>(p)] + traj.middle_duration() * k / 10.0;
        middle = middle && traj.value_in_phase(p + 1, t, x) == traj.u_bar_star();
      }
      for (int l = 1; l < traj.phases(); ++l) {
        const double t = tau[static_cast<std::size_t>(l)];
        jump = std::max(jump, (traj.value_in_phase(l, t, x) - traj.value_in_phase(l + 1, t, x)).cwiseAbs().maxCoeff());
      }
    }
    const double need = slowest_crossing(sys, traj.u_bar_star(), 1.0);
    o.detail << " " << sys.name() << ": ends " << (ends ? "exact" : "off") << ", junction " << jump << ", middle "
             << traj.middle_duration() << " >= " << need << ";";
    o.require(ends, sys.name() + " endpoints");
    o.require(middle, sys.name() + " constant middle");
    o.require(jump <= kChainTol, sys.name() + " junctions");
    o.require(traj.middle_duration() >= need, sys.name() + " middle duration");
  }
}

// --- 7-9: end to end ------------------------------------------------------------------

ControlProblem problem(const Model& m, double amp, int nx) {
  const Vec us = m.sys.u_star();
  ControlProblem pb{m.sys, {}, {}, 1.0, {}};
  pb.phi = [us, amp](double x) {
    Vec u = us;
    u(0) += amp * std::sin(std::numbers::pi * x);
    return u;
  };
  pb.psi = [us](double) { return us; };
  pb.opts.epsilon = 0.05;
  pb.opts.nx = nx;
  return pb;
}

double sup_gap(const GridSolution& a, const GridSolution& b) {
  double out = 0.0;
  for (int k = 0; k < std::min(a.nt(), b.nt()); ++k) out = std::max(out, row_distance(a.row(k), b.row(k)));
  return out;
}

void criterion_7(Outcome& o) {
  // perturbation size nu measured in C^1: |a sin(pi x)|_C1 = a (1 + pi)
  const auto m = ar();
  const auto base = control(problem(m, 0.0, 200));
  std::vector<double> dist;
  for (double nu : {1e-2, 5e-3, 2.5e-3}) {
    const auto r = control(problem(m, nu / (1.0 + std::numbers::pi), 200));
    dist.push_back(sup_gap(r.solution, base.solution));
  }
  const double q1 = dist[1] / dist[0], q2 = dist[2] / dist[1];
  o.detail << " ar distances " << dist[0] << ", " << dist[1] << ", " << dist[2] << "; ratios " << q1 << ", " << q2;
  o.require(std::abs(q1 - 0.5) <= 0.1 && std::abs(q2 - 0.5) <= 0.1, "halving");
}

struct EndToEnd {
  Model model;
  ControlProblem pb;
  ControlResult result;
};

void criterion_8(Outcome& o, std::vector<EndToEnd>& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& m : end_to_end_models()) {
    auto pb = problem(m, 1e-3, 400);
    auto r = control(pb);
    bool exact = true;
    for (int i = 0; i < r.solution.nx(); ++i) exact = exact && r.solution.at(0, i) == pb.phi(r.solution.x[static_cast<std::size_t>(i)]);
    char buf[200];
    std::snprintf(buf, sizeof buf, " %s T=%.1f final %.2e sup %.3f (%.1f s);", m.sys.name().c_str(), r.T(),
                  r.diag.final_error, r.diag.sup_deviation, r.diag.runtime_s);
    o.detail << buf;
    o.require(exact, m.sys.name() + " initial row");
    o.require(r.diag.final_error <= 5e-3, m.sys.name() + " final error");
    o.require(r.diag.sup_deviation <= 0.25, m.sys.name() + " sup deviation");
    runs.push_back({m, std::move(pb), std::move(r)});
  }
  const double total = seconds_since(t0);
  o.detail << " total " << total << " s";
  o.require(total <= 300.0, "runtime");
}

void criterion_9(Outcome& o, const std::vector<EndToEnd>& runs) {
  o.require(!runs.empty(), "no end-to-end runs");
  for (const auto& run : runs) {
    const auto& sys = run.model.sys;
    // scheme error: the unperturbed run's distance from the exact reference trajectory
    const double scheme = control(problem(run.model, 0.0, 400)).diag.reference_gap;
    const auto rep = replay_traces(sys, run.result, 1.0, run.pb.opts.cfl);
    const double gap = sup_gap(rep, run.result.solution);
    o.detail << " " << sys.name() << " replay " << gap << " vs scheme " << scheme << ";";
    o.require(gap <= 5 * scheme, sys.name() + " replay");
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> body;
  };
  std::vector<EndToEnd> runs;
  const std::vector<Criterion> criteria{
      {1, "closed-form H1 values", criterion_1},
      {2, "flow maps", criterion_2},
      {3, "chop", criterion_3},
      {4, "zigzag and certification", criterion_4},
      {5, "simple waves", criterion_5},
      {6, "return trajectory", criterion_6},
      {7, "linear dependence on the data", criterion_7},
      {8, "end-to-end control", [&runs](Outcome& o) { criterion_8(o, runs); }},
      {9, "trace replay", [&runs](Outcome& o) { criterion_9(o, runs); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ":" << o.detail.str() << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria pass"
            << std::endl;
  return failed;
}
