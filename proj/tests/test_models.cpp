#include "sonicctl/core.hpp"
#include "sonicctl/models.hpp"

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace sonicctl;
using Catch::Approx;

TEST_CASE("Saint-Venant sonic equilibrium") {
  const auto model = build_model(SaintVenant{1.0}, Equilibrium::sonic_right, Anchor{1.0});
  const auto& sys = model.sys;
  CHECK(sys.sonic_family() == 1);
  CHECK(sys.u_star()(0) == 1.0);
  CHECK(sys.u_star()(1) == Approx(1.0));
  // quadratic formula for [[V, H], [g, V]]: V -+ sqrt(g H)
  const Mat a = sys.A(sys.u_star());
  const double tr = a.trace(), det = a.determinant();
  const double root = std::sqrt(tr * tr / 4.0 - det);
  const Vec lam = sys.lambdas(sys.u_star());
  CHECK(lam(0) == Approx(tr / 2.0 - root).margin(1e-14));
  CHECK(lam(1) == Approx(tr / 2.0 + root));
  CHECK(lam(0) == Approx(0.0).margin(1e-14));
  CHECK(lam(1) == Approx(2.0));
}

TEST_CASE("Saint-Venant sonic_left uses the second family") {
  const auto model = build_model(SaintVenant{1.0}, Equilibrium::sonic_left, Anchor{1.0});
  CHECK(model.sys.sonic_family() == 2);
  CHECK(model.sys.u_star()(1) == Approx(-1.0));
  CHECK(model.sys.lambdas(model.sys.u_star())(1) == Approx(0.0).margin(1e-14));
}

TEST_CASE("isentropic sonic equilibrium, fast family speed") {
  const auto model = build_model(Isentropic{1.0, 1.4}, Equilibrium::sonic_right, Anchor{1.0});
  const Vec lam = model.sys.lambdas(model.sys.u_star());
  CHECK(lam(1) == Approx(2.0 * std::sqrt(1.4)));
  CHECK(std::abs(lam(0)) < 1e-14);
}

TEST_CASE("AR traffic sonic equilibrium") {
  const auto model = build_model(Traffic{2.0}, Equilibrium::sonic_right, Anchor{1.0});
  CHECK(model.sys.u_star()(0) == 1.0);
  CHECK(model.sys.u_star()(1) == Approx(2.0));
  const Vec lam = model.sys.lambdas(model.sys.u_star());
  CHECK(lam(0) == Approx(0.0).margin(1e-14));
  CHECK(lam(1) == Approx(2.0));
  CHECK(model_name(model.params) == "ar");
}

TEST_CASE("invalid parameters and equilibria") {
  REQUIRE_THROWS_MATCHES(build_model(SaintVenant{-1.0}, Equilibrium::sonic_right, Anchor{}), Error,
                         testing::ErrorKindIs(ErrorKind::InvalidParams));
  REQUIRE_THROWS_MATCHES(build_model(Isentropic{1.0, 3.5}, Equilibrium::sonic_right, Anchor{}), Error,
                         testing::ErrorKindIs(ErrorKind::InvalidParams));
  REQUIRE_THROWS_MATCHES(build_model(Isentropic{}, Equilibrium::rest, Anchor{}), Error,
                         testing::ErrorKindIs(ErrorKind::EquilibriumNotSonic));
  REQUIRE_THROWS_MATCHES(build_model(Traffic{2.0, 0.8}, Equilibrium::rest, Anchor{1.0}), Error,
                         testing::ErrorKindIs(ErrorKind::InvalidParams));
  REQUIRE_THROWS_MATCHES(build_model(Euler{}, Equilibrium::sonic_right, Anchor{}), Error,
                         testing::ErrorKindIs(ErrorKind::InvalidParams));
  REQUIRE_THROWS_MATCHES(build_model(Euler{}, Equilibrium::rest, Anchor{-1.0}), Error,
                         testing::ErrorKindIs(ErrorKind::InvalidParams));
  REQUIRE_THROWS_MATCHES(analytic_h1_value(Euler{}, Equilibrium::sonic_left, Anchor{}), Error,
                         testing::ErrorKindIs(ErrorKind::Unsupported));
}

TEST_CASE("closed-form H1 values") {
  const auto isen = analytic_h1_value(Isentropic{1.0, 1.4}, Equilibrium::sonic_right, Anchor{1.0});
  CHECK(isen.value == Approx(0.8).margin(1e-15));
  CHECK(isen.family == 2);

  const auto euler = analytic_h1_value(Euler{}, Equilibrium::rest, Anchor{1.0, 0.0});
  CHECK(euler.value == Approx(-1.41421356237).margin(1e-10));
  CHECK(euler.family == 1);

  // MAR, gamma = 2, rho0 = 4, rho* = 1: -2 (3/4)^-3
  const auto mar = analytic_h1_value(Traffic{2.0, 4.0}, Equilibrium::rest, Anchor{1.0});
  CHECK(mar.value == Approx(-2.0 / 0.421875).epsilon(1e-14));
  CHECK(mar.family == 1);
}

TEST_CASE("closed-form H1 values agree with the spectral gradients") {
  struct Case {
    ModelParams params;
    Equilibrium eq;
    Anchor anchor;
  };
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<Case> cases{
      {SaintVenant{1.0}, Equilibrium::sonic_right, {1.0}},  {SaintVenant{2.0}, Equilibrium::sonic_left, {1.5}},
      {Isentropic{1.0, 1.4}, Equilibrium::sonic_right, {1.0}}, {Isentropic{0.7, 1.8}, Equilibrium::sonic_left, {1.2}},
      {Euler{}, Equilibrium::rest, {1.0, 0.0}},             {Euler{1.3, 0.8, 1.0, 1.6}, Equilibrium::rest, {0.9, 0.2}},
      {Traffic{2.0, inf}, Equilibrium::sonic_right, {1.0}}, {Traffic{2.0, inf}, Equilibrium::rest, {1.0}},
      {Traffic{2.0, 4.0}, Equilibrium::sonic_right, {1.0}}, {Traffic{1.5, 3.0}, Equilibrium::rest, {1.2}},
  };
  for (const auto& c : cases) {
    const auto model = build_model(c.params, c.eq, c.anchor);
    const auto& sys = model.sys;
    const auto h1 = analytic_h1_value(c.params, c.eq, c.anchor);
    const Vec& us = sys.u_star();
    const int m = sys.sonic_family();
    // closed-form vectors and gradient
    const Vec r_paper = right_eigenvector(sys, h1.family, us, SpectralPath::automatic, Normalization::paper);
    const double analytic = grad_lambda(sys, m, us).dot(r_paper);
    INFO(sys.name() << " " << to_string(c.eq));
    CHECK(analytic == Approx(h1.value).margin(1e-6));
    // eigen-solver and differences, rescaled to the closed-form length
    DiffOptions num;
    num.path = SpectralPath::numeric;
    const Spectral s = eigendecompose(sys, us);
    const Vec r_num = eigendecompose(sys, us, SpectralPath::numeric).right.col(h1.family - 1);
    const double numeric = grad_lambda(sys, m, us, num).dot(r_num) * s.paper_scale(h1.family - 1);
    CHECK(numeric == Approx(h1.value).margin(1e-4));
  }
}

TEST_CASE("closed-form spectra agree with the numerical eigen-solver") {
  for (const auto& model : testing::bundled_models()) {
    const auto& sys = model.sys;
    for (const Vec& u : testing::halton_points(sys.domain(), 100)) {
      const auto a = eigendecompose(sys, u);
      const auto b = eigendecompose(sys, u, SpectralPath::numeric);
      INFO(sys.name() << " at " << u.transpose());
      CHECK((a.lambdas - b.lambdas).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((a.right - b.right).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((a.left - b.left).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("Saint-Venant is isentropic gas with p = g rho^2 / 2") {
  for (const double g : {1.0, 9.81}) {
    const auto sv = build_model(SaintVenant{g}, Equilibrium::sonic_right, Anchor{1.0});
    const auto gas = build_model(Isentropic{g / 2.0, 2.0}, Equilibrium::sonic_right, Anchor{1.0});
    CHECK((sv.sys.u_star() - gas.sys.u_star()).norm() < 1e-14);
    for (const Vec& u : testing::halton_points(sv.sys.domain(), 100)) {
      CHECK((sv.sys.A(u) - gas.sys.A(u)).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, g));
    }
  }
}

TEST_CASE("MAR domain stays below the maximal density") {
  const auto model = build_model(Traffic{2.0, 1.2}, Equilibrium::rest, Anchor{1.0});
  CHECK(model.sys.domain().hi(0) < 1.2);
  CHECK(model_name(model.params) == "mar");
}
