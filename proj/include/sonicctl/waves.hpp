#pragma once

#include "sonicctl/chebyshev.hpp"
#include "sonicctl/core.hpp"
#include "sonicctl/ode.hpp"
#include "sonicctl/reachability.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

namespace sonicctl {

/// C^2 bump 140 theta^3 (1 - theta)^3 on (0, 1) with unit mass.
inline double bump(double theta) {
  if (theta <= 0.0 || theta >= 1.0) return 0.0;
  const double a = theta * (1.0 - theta);
  return 140.0 * a * a * a;
}

/// Primitive of the bump from 0, clamped to [0, 1].
inline double bump_integral(double theta) {
  if (theta <= 0.0) return 0.0;
  if (theta >= 1.0) return 1.0;
  const double t4 = theta * theta * theta * theta;
  return 140.0 * t4 * (0.25 + theta * (-0.6 + theta * (0.5 - theta / 7.0)));
}

enum class Orientation { left_moving, right_moving };

inline std::string to_string(Orientation o) {
  return o == Orientation::left_moving ? "left_moving" : "right_moving";
}

struct WaveSpec {
  int family = 0;
  Vec u_minus;
  Vec u_plus;
  double s_bar = 0.0;
  double eta_ramp = 0.5;
  Orientation orientation = Orientation::left_moving;
  double duration = 0.0;
};

/// A simple wave of family j: the initial profile runs along the rarefaction
/// curve through a bump-shaped ramp, and characteristics are straight lines
/// x = xi + t lambda_j(phi(xi)).
class SimpleWave {
 public:
  static constexpr int kCurveNodes = 24;

  SimpleWave(const SystemDef& sys, WaveSpec spec, double L, const Tolerances& tol = {})
      : sys_(std::make_shared<const SystemDef>(sys)), spec_(std::move(spec)), L_(L), tol_(tol) {
    require_family(sys, spec_.family);
    if (spec_.family == sys.sonic_family()) {
      throw Error(ErrorKind::SonicFamilyForbidden, "simple waves use the non-sonic families");
    }
    if (!(spec_.eta_ramp > 0) || !(L > 0)) throw Error(ErrorKind::InvalidParams, "ramp width and L must be positive");
    require_in_domain(sys, spec_.u_minus);
    if (spec_.s_bar != 0.0) {
      const auto s = ChebyshevFit::nodes(0.0, spec_.s_bar, kCurveNodes);
      std::vector<Vec> pts{spec_.u_minus};
      Tolerances fine = tol_;
      fine.ode_tol = std::min(tol_.ode_tol, 1e-12);
      for (std::size_t k = 1; k < s.size(); ++k) {
        const VectorField f = [&](const Vec& z) -> Vec { return right_eigenvector(sys, spec_.family, z); };
        pts.push_back(integrate(f, pts.back(), s[k - 1], s[k], fine.ode_tol, sys.domain()));
      }
      curve_ = ChebyshevFit(0.0, spec_.s_bar, pts);
      const double gap = (pts.back() - spec_.u_plus).cwiseAbs().maxCoeff();
      if (gap > 10.0 * tol_.ode_tol) {
        std::ostringstream os;
        os << "u_plus is " << gap << " away from the rarefaction curve through u_minus";
        throw Error(ErrorKind::InvalidParams, os.str());
      }
    } else if ((spec_.u_plus - spec_.u_minus).cwiseAbs().maxCoeff() > 10.0 * tol_.ode_tol) {
      throw Error(ErrorKind::InvalidParams, "zero amplitude wave needs u_plus = u_minus");
    }
    // speed extremes along the profile
    min_speed_ = std::numeric_limits<double>::infinity();
    max_speed_ = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double lam = speed_on_curve(spec_.s_bar * i / 200.0);
      min_speed_ = std::min(min_speed_, std::abs(lam));
      max_speed_ = std::max(max_speed_, std::abs(lam));
      const bool ok = spec_.orientation == Orientation::left_moving ? lam < 0 : lam > 0;
      if (!ok) throw Error(ErrorKind::InvalidParams, "wave speed sign does not match its orientation");
    }
    if (spec_.duration <= 0.0) spec_.duration = crossing_time() * 1.02 + 0.1;
    check_sweep();
    check_focusing();
  }

  const WaveSpec& spec() const { return spec_; }
  double length() const { return L_; }
  double duration() const { return spec_.duration; }
  double min_speed() const { return min_speed_; }
  double max_speed() const { return max_speed_; }

  /// Time for the ramp to clear [0, L].
  double crossing_time() const { return (L_ + spec_.eta_ramp) / min_speed_; }

  /// Ramp interval in the initial coordinate xi.
  double ramp_lo() const { return spec_.orientation == Orientation::left_moving ? L_ : -spec_.eta_ramp; }
  double ramp_hi() const { return spec_.orientation == Orientation::left_moving ? L_ + spec_.eta_ramp : 0.0; }

  /// Flow parameter sigma reached at xi.
  double sigma(double xi) const {
    const double theta = spec_.orientation == Orientation::left_moving ? (xi - L_) / spec_.eta_ramp
                                                                        : -xi / spec_.eta_ramp;
    return spec_.s_bar * bump_integral(theta);
  }

  double dsigma(double xi) const {
    if (spec_.orientation == Orientation::left_moving) {
      return spec_.s_bar * bump((xi - L_) / spec_.eta_ramp) / spec_.eta_ramp;
    }
    return -spec_.s_bar * bump(-xi / spec_.eta_ramp) / spec_.eta_ramp;
  }

  Vec on_curve(double s) const {
    if (spec_.s_bar == 0.0 || s == 0.0) return spec_.u_minus;
    if (s == spec_.s_bar) return spec_.u_plus;
    return curve_.value(s);
  }

  /// Initial profile phi(xi).
  Vec profile(double xi) const {
    if (xi <= ramp_lo()) return spec_.orientation == Orientation::left_moving ? spec_.u_minus : spec_.u_plus;
    if (xi >= ramp_hi()) return spec_.orientation == Orientation::left_moving ? spec_.u_plus : spec_.u_minus;
    return on_curve(sigma(xi));
  }

  /// x-derivative of the initial profile.
  Vec profile_slope(double xi) const {
    if (spec_.s_bar == 0.0 || xi <= ramp_lo() || xi >= ramp_hi()) return Vec::Zero(sys_->n());
    return curve_.derivative(sigma(xi)) * dsigma(xi);
  }

  /// Solution value at local time t in [0, duration].
  Vec value(double t, double x) const {
    if (spec_.s_bar == 0.0) return spec_.u_minus;
    const double a = ramp_lo(), b = ramp_hi();
    const double ga = a + t * speed_at(a), gb = b + t * speed_at(b);
    if (x <= ga) return profile(a - 1.0);
    if (x >= gb) return profile(b + 1.0);
    auto g = [&](double xi) { return xi + t * speed_at(xi) - x; };
    const double fa = ga - x, fb = gb - x;
    std::uintmax_t iters = 200;
    const auto term = [this](double lo, double hi) { return std::abs(hi - lo) <= tol_.root_tol; };
    const auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, term, iters);
    if (iters >= 200) throw Error(ErrorKind::NoConvergence, "characteristic root did not converge");
    return on_curve(sigma(0.5 * (r.first + r.second)));
  }

  /// min over the ramp of d/dxi (xi + t lambda(phi(xi))) at t = duration.
  double min_stretch(double t) const {
    double out = 1.0;
    const double a = ramp_lo(), b = ramp_hi();
    for (int i = 0; i <= 2000; ++i) {
      const double xi = a + (b - a) * i / 2000.0;
      out = std::min(out, 1.0 + t * speed_slope(xi));
    }
    return out;
  }

  double speed_at(double xi) const { return speed_on_curve(sigma(xi)); }

  double speed_slope(double xi) const {
    if (spec_.s_bar == 0.0) return 0.0;
    const double s = sigma(xi);
    const Vec u = on_curve(s);
    return grad_lambda(*sys_, spec_.family, u).dot(curve_.derivative(s)) * dsigma(xi);
  }

 private:
  double speed_on_curve(double s) const { return sys_->lambdas(on_curve(s))(spec_.family - 1); }

  void check_sweep() const {
    if (spec_.duration < crossing_time()) {
      std::ostringstream os;
      os << "wave duration " << spec_.duration << " shorter than the crossing time " << crossing_time();
      throw Error(ErrorKind::InvalidParams, os.str());
    }
  }

  void check_focusing() const {
    if (spec_.s_bar == 0.0) return;
    const double s = min_stretch(spec_.duration);
    if (!(s > 0.0)) {
      std::ostringstream os;
      os << "characteristics of family " << spec_.family << " cross before t = " << spec_.duration
         << " (min stretch " << s << "); amplitude " << spec_.s_bar << " too large for ramp "
         << spec_.eta_ramp;
      throw Error(ErrorKind::Focusing, os.str());
    }
  }

  std::shared_ptr<const SystemDef> sys_;
  WaveSpec spec_;
  double L_;
  Tolerances tol_;
  ChebyshevFit curve_;
  double min_speed_ = 0.0;
  double max_speed_ = 0.0;
};

/// Phase l of the return trajectory on [tau_{l-1}, tau_l].
struct PhaseInfo {
  enum class Kind { forward_wave, middle, backward_wave };
  Kind kind = Kind::forward_wave;
  int index = 0;  ///< 1-based phase number
  int wave = -1;  ///< forward wave used (0-based), -1 for the middle
  double t0 = 0.0;
  double t1 = 0.0;
};

inline std::string to_string(PhaseInfo::Kind k) {
  switch (k) {
    case PhaseInfo::Kind::forward_wave: return "forward";
    case PhaseInfo::Kind::middle: return "middle";
    case PhaseInfo::Kind::backward_wave: return "backward";
  }
  return "?";
}

/// Piecewise trajectory from u* to u_bar_star, constant there, and back by
/// reflection in time and space.
class ReturnTrajectory {
 public:
  ReturnTrajectory(const SystemDef& sys, std::vector<SimpleWave> waves, std::vector<Leg> legs, Vec u_bar_star,
                   double L, double middle)
      : n_(sys.n()),
        u_star_(sys.u_star()),
        waves_(std::move(waves)),
        legs_(std::move(legs)),
        u_bar_star_(std::move(u_bar_star)),
        L_(L) {
    set_middle_duration(middle);
  }

  int p() const { return static_cast<int>(waves_.size()); }
  int phases() const { return 2 * p() + 1; }
  double length() const { return L_; }
  const Vec& u_bar_star() const { return u_bar_star_; }
  const Vec& u_star() const { return u_star_; }
  const std::vector<SimpleWave>& waves() const { return waves_; }
  const std::vector<Leg>& legs() const { return legs_; }
  const std::vector<double>& timeline() const { return tau_; }
  double T() const { return tau_.back(); }
  double middle_duration() const { return tau_[static_cast<std::size_t>(p()) + 1] - tau_[static_cast<std::size_t>(p())]; }

  void set_middle_duration(double d) {
    if (!(d > 0)) throw Error(ErrorKind::InvalidParams, "middle duration must be positive");
    tau_.assign(1, 0.0);
    for (const auto& w : waves_) tau_.push_back(tau_.back() + w.duration());
    tau_.push_back(tau_.back() + d);
    for (int b = p() + 2; b <= 2 * p() + 1; ++b) {
      tau_.push_back(tau_.back() + waves_[static_cast<std::size_t>(2 * p() + 1 - b)].duration());
    }
  }

  PhaseInfo phase(int l) const {
    if (l < 1 || l > phases()) throw Error(ErrorKind::InvalidParams, "phase index out of range");
    PhaseInfo ph;
    ph.index = l;
    ph.t0 = tau_[static_cast<std::size_t>(l - 1)];
    ph.t1 = tau_[static_cast<std::size_t>(l)];
    if (l <= p()) {
      ph.kind = PhaseInfo::Kind::forward_wave;
      ph.wave = l - 1;
    } else if (l == p() + 1) {
      ph.kind = PhaseInfo::Kind::middle;
    } else {
      ph.kind = PhaseInfo::Kind::backward_wave;
      ph.wave = 2 * p() + 1 - l;
    }
    return ph;
  }

  /// Phase containing t; ties go to the earlier phase.
  int phase_at(double t) const {
    for (int l = 1; l <= phases(); ++l) {
      if (t <= tau_[static_cast<std::size_t>(l)]) return l;
    }
    return phases();
  }

  /// Value of phase l's solution at global (t, x), any x in R.
  Vec value_in_phase(int l, double t, double x) const {
    const PhaseInfo ph = phase(l);
    const double tt = std::clamp(t, ph.t0, ph.t1);
    switch (ph.kind) {
      case PhaseInfo::Kind::forward_wave:
        return waves_[static_cast<std::size_t>(ph.wave)].value(tt - ph.t0, x);
      case PhaseInfo::Kind::middle:
        return u_bar_star_;
      case PhaseInfo::Kind::backward_wave:
        return waves_[static_cast<std::size_t>(ph.wave)].value(ph.t1 - tt, L_ - x);
    }
    return u_bar_star_;
  }

  Vec value(double t, double x) const { return value_in_phase(phase_at(t), t, x); }

 private:
  int n_;
  Vec u_star_;
  std::vector<SimpleWave> waves_;
  std::vector<Leg> legs_;
  Vec u_bar_star_;
  double L_;
  std::vector<double> tau_;
};

/// max_i L / |lambda_i(u)|.
inline double slowest_crossing(const SystemDef& sys, const Vec& u, double L) {
  return L / sys.lambdas(u).cwiseAbs().minCoeff();
}

struct ReturnOptions {
  double eta_ramp = 0.5;
  double sonic_floor = 1e-8;
  Tolerances tol;
};

inline ReturnTrajectory build_return(const SystemDef& sys, const ZigzagPlan& plan, double L,
                                     const ReturnOptions& opts = {}) {
  const Vec lam_bar = sys.lambdas(plan.achieved);
  const double floor = opts.sonic_floor * std::max(1.0, max_speed(sys, sys.u_star()));
  if (plan.legs.empty() || lam_bar.cwiseAbs().minCoeff() <= floor) {
    std::ostringstream os;
    os << "middle state " << plan.achieved.transpose() << " has speeds " << lam_bar.transpose();
    throw Error(ErrorKind::MiddleNotSonicFree, os.str());
  }
  std::vector<SimpleWave> waves;
  const Vec lam_star = sys.lambdas(sys.u_star());
  for (std::size_t l = 0; l < plan.legs.size(); ++l) {
    const Leg& leg = plan.legs[l];
    WaveSpec spec;
    spec.family = leg.family;
    spec.u_minus = plan.states[l];
    spec.u_plus = plan.states[l + 1];
    spec.s_bar = leg.amplitude;
    spec.eta_ramp = opts.eta_ramp;
    const double lam = lam_star(leg.family - 1);
    spec.orientation = lam < 0 ? Orientation::left_moving : Orientation::right_moving;
    // nominal duration; extended when the profile is slower than lambda(u*)
    spec.duration = L / std::abs(lam) + 1.0;
    try {
      WaveSpec trial = spec;
      trial.duration = 0.0;
      const SimpleWave sizing(sys, trial, L, opts.tol);
      if (spec.duration < sizing.crossing_time()) spec.duration = sizing.duration();
      waves.emplace_back(sys, spec, L, opts.tol);
    } catch (const Error& e) {
      throw Error(e.kind(), "leg " + std::to_string(l + 1) + ": " + e.what());
    }
  }
  return ReturnTrajectory(sys, std::move(waves), plan.legs, plan.achieved, L,
                          slowest_crossing(sys, plan.achieved, L) + 1.0);
}

}  // namespace sonicctl
