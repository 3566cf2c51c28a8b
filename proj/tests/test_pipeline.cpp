#include "sonicctl/models.hpp"
#include "sonicctl/pipeline.hpp"

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

using namespace sonicctl;
using Catch::Approx;

namespace {

Model sv() { return build_model(SaintVenant{1.0}, Equilibrium::sonic_right, Anchor{1.0}); }
Model ar() {
  return build_model(Traffic{2.0, std::numeric_limits<double>::infinity()}, Equilibrium::sonic_right, Anchor{1.0});
}

ControlProblem problem(const Model& m, double amp, int nx) {
  const Vec us = m.sys.u_star();
  ControlProblem pb{m.sys, {}, {}, 1.0, {}};
  pb.phi = [us, amp](double x) {
    Vec u = us;
    u(0) += amp * std::sin(M_PI * x);
    return u;
  };
  pb.psi = [us](double) { return us; };
  pb.opts.epsilon = 0.05;
  pb.opts.nx = nx;
  return pb;
}

double max_gap(const GridSolution& a, const GridSolution& b) {
  double out = 0.0;
  for (int k = 0; k < std::min(a.nt(), b.nt()); ++k) out = std::max(out, row_distance(a.row(k), b.row(k)));
  return out;
}

}  // namespace

TEST_CASE("C1 distance of simple profiles") {
  const Vec us = make_vec({1.0, 1.0});
  CHECK(c1_distance([&](double) { return us; }, us, 1.0, 100) == 0.0);
  const double d = c1_distance([&](double x) { return Vec(us + make_vec({0.01 * x, 0.0})); }, us, 1.0, 100);
  CHECK(d == Approx(0.02).margin(1e-12));
}

TEST_CASE("data beyond nu_max is rejected before any solve") {
  const auto m = sv();
  auto pb = problem(m, 0.0, 400);
  const Vec us = m.sys.u_star();
  pb.phi = [us](double x) {
    Vec u = us;
    u(0) += 0.2 * std::sin(M_PI * x);
    return u;
  };
  const auto start = std::chrono::steady_clock::now();
  REQUIRE_THROWS_MATCHES(control(pb), Error, testing::ErrorKindIs(ErrorKind::Validation));
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 0.5);
  pb.phi = [us](double) { return Vec(us + make_vec({5.0, 0.0})); };
  REQUIRE_THROWS_MATCHES(pb.validate(), Error, testing::ErrorKindIs(ErrorKind::Validation));
}

TEST_CASE("tiny epsilon cannot certify") {
  auto pb = problem(ar(), 0.0, 100);
  pb.opts.epsilon = 1e-12;
  REQUIRE_THROWS_MATCHES(control(pb), Error, testing::ErrorKindIs(ErrorKind::HypothesisNotCertified));
}

TEST_CASE("epsilon selection rule") {
  for (const auto& m : {sv(), ar()}) {
    const auto& sys = m.sys;
    const auto c = select_epsilon(sys, 3);
    const double target = 0.1 * max_speed(sys, sys.u_star());
    INFO(sys.name() << " picked " << c.epsilon);
    REQUIRE(c.report.certified);
    if (c.rule_met) {
      CHECK(std::abs(c.report.best->lambda_m) >= target);
      for (double smaller : {0.025, 0.05}) {
        if (smaller >= c.epsilon) break;
        const auto r = certify_H(sys, smaller, 3);
        CHECK(std::abs(r.best->lambda_m) < target);
      }
    } else {
      for (double e : {0.025, 0.05, 0.1}) CHECK(std::abs(certify_H(sys, e, 3).best->lambda_m) < target);
      CHECK(c.epsilon == 0.1);
    }
  }
  // Saint-Venant: |lambda_1| at epsilon 0.1 stays below a tenth of the fast speed
  CHECK_FALSE(select_epsilon(sv().sys, 3).rule_met);
  CHECK(select_epsilon(ar().sys, 3).rule_met);
}

TEST_CASE("unperturbed data follows the reference trajectory") {
  const auto m = ar();
  auto pb = problem(m, 0.0, 200);
  const auto r = control(pb);
  const auto& d = r.diag;
  INFO("gap " << d.reference_gap << " final " << d.final_error);
  CHECK(d.initial_error == 0.0);
  CHECK(d.final_error <= 5e-3);
  CHECK(d.reference_gap <= 1e-4);
  CHECK(tolerances_met(r, pb.opts));
  CHECK_NOTHROW(require_tolerances(r, pb.opts));
  CHECK(r.solution.t.front() == 0.0);
  CHECK(r.solution.t.back() == Approx(r.T()).margin(1e-12));
  CHECK(r.segments.size() == static_cast<std::size_t>(r.trajectory->phases()));
  for (std::size_t k = 1; k < r.solution.t.size(); ++k) CHECK(r.solution.t[k] > r.solution.t[k - 1]);
}

TEST_CASE("Saint-Venant run with a sine perturbation") {
  const auto m = sv();
  auto pb = problem(m, 1e-3, 200);
  const auto r = control(pb);
  const auto& d = r.diag;
  INFO("final " << d.final_error << " sup " << d.sup_deviation);
  CHECK(d.final_error <= 5e-3);
  CHECK(d.sup_deviation <= 0.25);
  CHECK(d.initial_error == 0.0);
  CHECK(r.trajectory->p() == 1);
  CHECK(r.timeline()[1] == Approx(1.5));
  // middle long enough for the bridge cone, and reported when extended
  const double lo = d.bridge_center - d.bridge_half_width, hi = d.bridge_center + d.bridge_half_width;
  const auto& tau = r.timeline();
  CHECK(lo - d.cone.below > tau[1]);
  CHECK(hi + d.cone.above < tau[2]);
  CHECK(d.middle_duration >= d.middle_default);
  CHECK(d.middle_extended == (d.middle_duration > d.middle_default));
  CHECK(d.c_eps > 0.0);
  // traces start at the data
  const auto tr = extract_traces(r);
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.left.front() == pb.phi(0.0));
  CHECK(tr.right.front() == pb.phi(1.0));
  for (std::size_t k = 1; k < tr.t.size(); ++k) CHECK(tr.t[k] > tr.t[k - 1]);
  for (int i = 0; i < r.solution.nx(); ++i) CHECK(r.solution.at(0, i) == pb.phi(r.solution.x[static_cast<std::size_t>(i)]));
}

TEST_CASE("trace replay reproduces the interior") {
  const auto m = ar();
  const auto exact = control(problem(m, 0.0, 200));
  const double scheme = exact.diag.reference_gap;
  const auto r = control(problem(m, 1e-3, 200));
  const auto rep = replay_traces(m.sys, r, 1.0);
  const double gap = max_gap(rep, r.solution);
  INFO("replay gap " << gap << " scheme " << scheme);
  CHECK(gap <= 5 * scheme);
  CHECK(r.diag.junction_jump <= 10 * scheme);
}

TEST_CASE("final error converges under refinement") {
  const auto m = ar();
  std::vector<double> e;
  for (int nx : {50, 100, 200}) e.push_back(control(problem(m, 1e-3, nx)).diag.final_error);
  INFO("final errors " << e[0] << " " << e[1] << " " << e[2]);
  CHECK(std::log2(e[0] / e[1]) >= 1.5);
  CHECK(std::log2(e[1] / e[2]) >= 1.5);
}

TEST_CASE("identical inputs give identical grids") {
  const auto m = ar();
  const auto a = control(problem(m, 1e-3, 100));
  const auto b = control(problem(m, 1e-3, 100));
  CHECK(a.solution.t == b.solution.t);
  CHECK(a.solution.data == b.solution.data);
  CHECK(a.traces.t == b.traces.t);
}

TEST_CASE("middle fits the bridge cone on every bundled model") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<Model> cases{
      build_model(SaintVenant{1.0}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Isentropic{1.0, 1.4}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Traffic{2.0, inf}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Euler{}, Equilibrium::rest, Anchor{1.0, 0.0}),
  };
  for (const auto& m : cases) {
    const auto rep = certify_H(m.sys, 0.05, 3);
    const auto plan = plan_zigzag(m.sys, rep.best->control, 1e-3);
    const auto traj = build_return(m.sys, plan, 1.0);
    const auto cone = bridge_cone(m.sys, plan.achieved, 1.0);
    const double D = traj.middle_duration();
    INFO(m.sys.name() << " default middle " << D << " cone " << cone.below << " + " << cone.above);
    // the default middle alone is too short once the bridge needs room on both sides
    const bool fits = 0.9 * D > cone.below + cone.above;
    const double need = (cone.below + cone.above + 0.1) / 0.9;
    CHECK(fits == (need <= D));
    CHECK(0.9 * std::max(D, need) - cone.below - cone.above > 0.0);
  }
}
