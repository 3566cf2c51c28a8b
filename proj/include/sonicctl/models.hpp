#pragma once

// The bundled systems: Saint-Venant, isentropic gas dynamics, full polytropic
// gas dynamics and the AR / MAR traffic models, each with closed-form
// eigenstructure and its sonic (or rest) equilibria.

#include "sonicctl/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <variant>

namespace sonicctl {

struct SaintVenant {
  double g = 1.0;
};

/// p = K rho^gamma.
struct Isentropic {
  double K = 1.0;
  double gamma = 1.4;
};

/// Polytropic gas, p = k exp(S / c_v) rho^gamma. R enters only the internal
/// energy and is carried for completeness.
struct Euler {
  double k = 1.0;
  double c_v = 1.0;
  double R = 1.0;
  double gamma = 2.0;
};

/// AR (rho0 infinite, p = rho^gamma) or MAR (p = (1/rho - 1/rho0)^-gamma).
struct Traffic {
  double gamma = 2.0;
  double rho0 = std::numeric_limits<double>::infinity();

  bool is_ar() const { return std::isinf(rho0); }
};

using ModelParams = std::variant<SaintVenant, Isentropic, Euler, Traffic>;

enum class Equilibrium { sonic_right, sonic_left, rest };

inline std::string to_string(Equilibrium eq) {
  switch (eq) {
    case Equilibrium::sonic_right: return "sonic_right";
    case Equilibrium::sonic_left: return "sonic_left";
    case Equilibrium::rest: return "rest";
  }
  return "unknown";
}

/// Density (or depth) of the equilibrium, plus its entropy for the full gas model.
struct Anchor {
  double density = 1.0;
  double entropy = 0.0;
};

inline std::string model_name(const ModelParams& params) {
  struct Visitor {
    std::string operator()(const SaintVenant&) const { return "saint_venant"; }
    std::string operator()(const Isentropic&) const { return "isentropic"; }
    std::string operator()(const Euler&) const { return "euler"; }
    std::string operator()(const Traffic& t) const { return t.is_ar() ? "ar" : "mar"; }
  };
  return std::visit(Visitor{}, params);
}

namespace models {

/// Barotropic pressure derivatives p'(rho), p''(rho).
struct PressureSlope {
  double dp = 0.0;
  double d2p = 0.0;
};

inline PressureSlope isentropic_pressure(double K, double gamma, double rho) {
  return {K * gamma * std::pow(rho, gamma - 1.0), K * gamma * (gamma - 1.0) * std::pow(rho, gamma - 2.0)};
}

inline PressureSlope traffic_pressure(const Traffic& t, double rho) {
  if (t.is_ar()) {
    return {t.gamma * std::pow(rho, t.gamma - 1.0),
            t.gamma * (t.gamma - 1.0) * std::pow(rho, t.gamma - 2.0)};
  }
  const double w = 1.0 / rho - 1.0 / t.rho0;
  const double dp = t.gamma * std::pow(rho, -2.0) * std::pow(w, -t.gamma - 1.0);
  const double d2p =
      t.gamma * std::pow(rho, -3.0) * std::pow(w, -t.gamma - 2.0) * ((t.gamma + 1.0) / rho - 2.0 * w);
  return {dp, d2p};
}

/// 2x2 gas-type system in (density, velocity) with p'(rho) and p''(rho).
template <class Slope>
SystemDef gas2(std::string name, int m, Vec u_star, DomainBox box, Slope slope) {
  auto a = [slope](const Vec& u) -> Mat {
    const double rho = u(0), vel = u(1);
    const PressureSlope p = slope(rho);
    Mat out(2, 2);
    out << vel, rho, p.dp / rho, vel;
    return out;
  };
  auto spectral = [slope](const Vec& u) -> AnalyticSpectral {
    const double rho = u(0), vel = u(1);
    const PressureSlope p = slope(rho);
    const double c = std::sqrt(p.dp);
    const double dc = p.d2p / (2.0 * c);
    const double ratio = rho / c;
    const double dratio = 1.0 / c - rho * dc / (c * c);
    AnalyticSpectral s;
    s.lambdas = make_vec({vel - c, vel + c});
    s.right.resize(2, 2);
    s.right << ratio, ratio, -1.0, 1.0;
    s.grad_lambda.resize(2, 2);
    s.grad_lambda << -dc, 1.0, dc, 1.0;
    Mat jac = Mat::Zero(2, 2);
    jac(0, 0) = dratio;
    s.right_jacobian = {jac, jac};
    return s;
  };
  return SystemDef(std::move(name), m, std::move(u_star), std::move(box), a, spectral);
}

inline void check_params(const SaintVenant& p) {
  if (!(p.g > 0)) throw Error(ErrorKind::InvalidParams, "saint_venant requires g > 0");
}

inline void check_params(const Isentropic& p) {
  if (!(p.K > 0)) throw Error(ErrorKind::InvalidParams, "isentropic requires K > 0");
  if (!(p.gamma > 1 && p.gamma < 3)) {
    throw Error(ErrorKind::InvalidParams, "isentropic requires 1 < gamma < 3");
  }
}

inline void check_params(const Euler& p) {
  if (!(p.k > 0 && p.c_v > 0 && p.R > 0)) {
    throw Error(ErrorKind::InvalidParams, "euler requires k, c_v, R > 0");
  }
  if (!(p.gamma > 1 && p.gamma < 3)) throw Error(ErrorKind::InvalidParams, "euler requires 1 < gamma < 3");
}

inline void check_params(const Traffic& p) {
  if (!(p.gamma > 0)) throw Error(ErrorKind::InvalidParams, "traffic requires gamma > 0");
  if (!(p.rho0 > 0)) throw Error(ErrorKind::InvalidParams, "mar requires rho0 > 0");
}

inline double euler_pressure(const Euler& e, double rho, double S) {
  return e.k * std::exp(S / e.c_v) * std::pow(rho, e.gamma);
}

inline double euler_sound_speed(const Euler& e, double rho, double S) {
  return std::sqrt(e.gamma * euler_pressure(e, rho, S) / rho);
}

}  // namespace models

/// A bundled model instance: its parameters, the chosen equilibrium and the
/// resulting system.
struct Model {
  ModelParams params;
  Equilibrium equilibrium;
  Anchor anchor;
  SystemDef sys;
};

namespace models {

inline Model build_saint_venant(const SaintVenant& p, Equilibrium eq, const Anchor& anchor) {
  check_params(p);
  if (eq == Equilibrium::rest) {
    throw Error(ErrorKind::EquilibriumNotSonic, "saint_venant at rest has no vanishing speed");
  }
  const double h = anchor.density;
  const double g = p.g;
  auto slope = [g](double depth) { return PressureSlope{g * depth, g}; };
  const double c = std::sqrt(g * h);
  const double c_min = std::sqrt(g * 0.5 * h);
  const double v = eq == Equilibrium::sonic_right ? c : -c;
  DomainBox box{make_vec({0.5 * h, v - 0.5 * c_min}), make_vec({1.5 * h, v + 0.5 * c_min})};
  const int m = eq == Equilibrium::sonic_right ? 1 : 2;
  return Model{p, eq, anchor, gas2("saint_venant", m, make_vec({h, v}), box, slope)};
}

inline Model build_isentropic(const Isentropic& p, Equilibrium eq, const Anchor& anchor) {
  check_params(p);
  if (eq == Equilibrium::rest) {
    throw Error(ErrorKind::EquilibriumNotSonic, "isentropic gas at rest has no vanishing speed");
  }
  const double rho = anchor.density;
  auto slope = [K = p.K, gamma = p.gamma](double r) { return isentropic_pressure(K, gamma, r); };
  const double c = std::sqrt(slope(rho).dp);
  const double c_min = std::sqrt(slope(0.5 * rho).dp);
  const double v = eq == Equilibrium::sonic_right ? c : -c;
  DomainBox box{make_vec({0.5 * rho, v - 0.5 * c_min}), make_vec({1.5 * rho, v + 0.5 * c_min})};
  const int m = eq == Equilibrium::sonic_right ? 1 : 2;
  return Model{p, eq, anchor, gas2("isentropic", m, make_vec({rho, v}), box, slope)};
}

inline Model build_euler(const Euler& p, Equilibrium eq, const Anchor& anchor) {
  check_params(p);
  if (eq != Equilibrium::rest) {
    throw Error(ErrorKind::InvalidParams, "euler supports equilibrium = rest only");
  }
  const double rho = anchor.density;
  const double S = anchor.entropy;
  auto a = [p](const Vec& u) -> Mat {
    const double r = u(0), vel = u(1), s = u(2);
    const double pr = euler_pressure(p, r, s);
    const double p_rho = p.gamma * pr / r;
    const double p_s = pr / p.c_v;
    Mat out(3, 3);
    out << vel, r, 0.0, p_rho / r, vel, p_s / r, 0.0, 0.0, vel;
    return out;
  };
  auto spectral = [p](const Vec& u) -> AnalyticSpectral {
    const double r = u(0), vel = u(1), s = u(2);
    const double pr = euler_pressure(p, r, s);
    const double p_rho = p.gamma * pr / r;
    const double p_s = pr / p.c_v;
    const double c = std::sqrt(p_rho);
    const double c_rho = p.gamma * (p.gamma - 1.0) * pr / (r * r) / (2.0 * c);
    const double c_s = p.gamma * pr / (r * p.c_v) / (2.0 * c);
    AnalyticSpectral out;
    out.lambdas = make_vec({vel - c, vel, vel + c});
    out.right.resize(3, 3);
    out.right << r, p_s, r, -c, 0.0, c, 0.0, -p_rho, 0.0;
    out.grad_lambda.resize(3, 3);
    out.grad_lambda << -c_rho, 1.0, -c_s, 0.0, 1.0, 0.0, c_rho, 1.0, c_s;
    Mat d1 = Mat::Zero(3, 3), d2 = Mat::Zero(3, 3), d3 = Mat::Zero(3, 3);
    d1(0, 0) = 1.0;
    d1(1, 0) = -c_rho;
    d1(1, 2) = -c_s;
    d3(0, 0) = 1.0;
    d3(1, 0) = c_rho;
    d3(1, 2) = c_s;
    d2(0, 0) = p.gamma * pr / (r * p.c_v);
    d2(0, 2) = pr / (p.c_v * p.c_v);
    d2(2, 0) = -p.gamma * (p.gamma - 1.0) * pr / (r * r);
    d2(2, 2) = -p.gamma * pr / (r * p.c_v);
    out.right_jacobian = {d1, d2, d3};
    return out;
  };
  const double c_min = euler_sound_speed(p, 0.5 * rho, S - 0.5 * p.c_v);
  DomainBox box{make_vec({0.5 * rho, -0.5 * c_min, S - 0.5 * p.c_v}),
                make_vec({1.5 * rho, 0.5 * c_min, S + 0.5 * p.c_v})};
  return Model{p, eq, anchor, SystemDef("euler", 2, make_vec({rho, 0.0, S}), box, a, spectral)};
}

inline Model build_traffic(const Traffic& p, Equilibrium eq, const Anchor& anchor) {
  check_params(p);
  const double rho = anchor.density;
  if (!(rho < p.rho0)) throw Error(ErrorKind::InvalidParams, "mar requires rho* < rho0");
  if (eq == Equilibrium::sonic_left) {
    throw Error(ErrorKind::InvalidParams, "traffic supports equilibrium = sonic_right or rest");
  }
  auto a = [p](const Vec& u) -> Mat {
    const double r = u(0), vel = u(1);
    const PressureSlope s = traffic_pressure(p, r);
    Mat out(2, 2);
    out << vel, r, 0.0, vel - r * s.dp;
    return out;
  };
  auto spectral = [p](const Vec& u) -> AnalyticSpectral {
    const double r = u(0), vel = u(1);
    const PressureSlope s = traffic_pressure(p, r);
    AnalyticSpectral out;
    out.lambdas = make_vec({vel - r * s.dp, vel});
    out.right.resize(2, 2);
    out.right << 1.0, 1.0, -s.dp, 0.0;
    out.grad_lambda.resize(2, 2);
    out.grad_lambda << -s.dp - r * s.d2p, 1.0, 0.0, 1.0;
    Mat d1 = Mat::Zero(2, 2);
    d1(1, 0) = -s.d2p;
    out.right_jacobian = {d1, Mat::Zero(2, 2)};
    return out;
  };
  const double lo = 0.5 * rho;
  const double hi = p.is_ar() ? 1.5 * rho : std::min(1.5 * rho, rho + 0.5 * (p.rho0 - rho));
  const std::string name = p.is_ar() ? "ar" : "mar";
  if (eq == Equilibrium::sonic_right) {
    const double v = rho * traffic_pressure(p, rho).dp;
    DomainBox box{make_vec({lo, 0.5 * v}), make_vec({hi, 1.5 * v})};
    return Model{p, eq, anchor, SystemDef(name, 1, make_vec({rho, v}), box, a, spectral)};
  }
  const double w = 0.5 * lo * traffic_pressure(p, lo).dp;
  DomainBox box{make_vec({lo, -w}), make_vec({hi, w})};
  return Model{p, eq, anchor, SystemDef(name, 2, make_vec({rho, 0.0}), box, a, spectral)};
}

}  // namespace models

/// Builds one of the bundled systems at the requested equilibrium.
///
/// Saint-Venant and isentropic gas: sonic_right (rho*, +sqrt(p'(rho*))), m = 1,
/// or sonic_left (rho*, -sqrt(p'(rho*))), m = 2. Full gas: rest (rho*, 0, S*),
/// m = 2. Traffic: sonic_right (rho*, rho* p'(rho*)), m = 1, or rest (rho*, 0),
/// m = 2. Density coordinates are confined to [0.5, 1.5] rho*.
inline Model build_model(const ModelParams& params, Equilibrium eq, const Anchor& anchor) {
  if (!(anchor.density > 0) || !std::isfinite(anchor.density)) {
    throw Error(ErrorKind::InvalidParams, "anchor density must be positive");
  }
  struct Visitor {
    Equilibrium eq;
    const Anchor& anchor;
    Model operator()(const SaintVenant& p) const { return models::build_saint_venant(p, eq, anchor); }
    Model operator()(const Isentropic& p) const { return models::build_isentropic(p, eq, anchor); }
    Model operator()(const Euler& p) const { return models::build_euler(p, eq, anchor); }
    Model operator()(const Traffic& p) const { return models::build_traffic(p, eq, anchor); }
  };
  return std::visit(Visitor{eq, anchor}, params);
}

/// Closed-form grad(lambda_m)(u*) . r_j(u*) in the model's own normalization.
struct H1Value {
  double value = 0.0;
  int family = 0;
};

inline H1Value analytic_h1_value(const ModelParams& params, Equilibrium eq, const Anchor& anchor) {
  struct Visitor {
    Equilibrium eq;
    const Anchor& anchor;
    H1Value operator()(const SaintVenant&) const { return gas(2.0); }
    H1Value operator()(const Isentropic& p) const { return gas(p.gamma); }
    H1Value gas(double gamma) const {
      if (eq == Equilibrium::sonic_right) return {(3.0 - gamma) / 2.0, 2};
      if (eq == Equilibrium::sonic_left) return {(gamma - 3.0) / 2.0, 1};
      throw Error(ErrorKind::Unsupported, "no closed-form H1 value at rest");
    }
    H1Value operator()(const Euler& p) const {
      if (eq != Equilibrium::rest) throw Error(ErrorKind::Unsupported, "euler: rest only");
      return {-models::euler_sound_speed(p, anchor.density, anchor.entropy), 1};
    }
    H1Value operator()(const Traffic& p) const {
      const auto s = models::traffic_pressure(p, anchor.density);
      if (eq == Equilibrium::sonic_right) return {-s.dp - anchor.density * s.d2p, 2};
      if (eq == Equilibrium::rest) return {-s.dp, 1};
      throw Error(ErrorKind::Unsupported, "traffic: sonic_right or rest only");
    }
  };
  return std::visit(Visitor{eq, anchor}, params);
}

}  // namespace sonicctl
