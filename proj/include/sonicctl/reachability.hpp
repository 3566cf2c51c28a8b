#pragma once

#include "sonicctl/core.hpp"
#include "sonicctl/ode.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sonicctl {

/// Flow of the eigenvector field r_j for parameter s starting at u0.
inline Vec flow_map(const SystemDef& sys, int j, double s, const Vec& u0, const Tolerances& tol = {},
                    Normalization norm = Normalization::unit) {
  require_family(sys, j);
  require_in_domain(sys, u0);
  const VectorField f = [&](const Vec& z) -> Vec {
    return right_eigenvector(sys, j, z, SpectralPath::automatic, norm);
  };
  return integrate(f, u0, 0.0, s, tol.ode_tol, sys.domain());
}

/// Piecewise constant control on [0, 1]. values[q](i) drives family
/// sys.control_families()[i] on (breaks[q], breaks[q+1]).
struct PiecewiseControl {
  std::vector<double> breaks{0.0, 1.0};
  std::vector<Vec> values;

  int pieces() const { return static_cast<int>(values.size()); }

  double duration(int q) const {
    return breaks[static_cast<std::size_t>(q) + 1] - breaks[static_cast<std::size_t>(q)];
  }

  double sup_norm() const {
    double out = 0.0;
    for (const auto& v : values) out = std::max(out, v.cwiseAbs().maxCoeff());
    return out;
  }

  /// Componentwise integral over [0, 1].
  Vec integral() const {
    Vec out = Vec::Zero(values.empty() ? 0 : values.front().size());
    for (int q = 0; q < pieces(); ++q) out += duration(q) * values[static_cast<std::size_t>(q)];
    return out;
  }

  bool single_component() const {
    for (const auto& v : values) {
      if ((v.array() != 0.0).count() > 1) return false;
    }
    return true;
  }

  void validate(int width) const {
    if (values.empty() || breaks.size() != values.size() + 1) {
      throw Error(ErrorKind::InvalidParams, "control needs one value per piece");
    }
    for (std::size_t q = 0; q + 1 < breaks.size(); ++q) {
      if (!(breaks[q] < breaks[q + 1])) {
        throw Error(ErrorKind::InvalidParams, "control breakpoints must increase strictly");
      }
    }
    for (const auto& v : values) {
      if (v.size() != width || !v.allFinite()) {
        throw Error(ErrorKind::InvalidParams, "control value has the wrong width or is not finite");
      }
    }
  }
};

inline PiecewiseControl constant_control(const Vec& value) {
  PiecewiseControl c;
  c.values.push_back(value);
  return c;
}

/// Index of family j among the control families, or -1 for the sonic one.
inline int control_slot(const SystemDef& sys, int j) {
  const auto fam = sys.control_families();
  const auto it = std::find(fam.begin(), fam.end(), j);
  return it == fam.end() ? -1 : static_cast<int>(it - fam.begin());
}

/// Solution of the control ODE, stored at the breakpoints; intermediate
/// parameters are re-integrated from the start of their piece.
class ControlPath {
 public:
  ControlPath(SystemDef sys, PiecewiseControl control, std::vector<Vec> states, Tolerances tol)
      : sys_(std::move(sys)), control_(std::move(control)), states_(std::move(states)), tol_(tol) {}

  const Vec& start() const { return states_.front(); }
  const Vec& end() const { return states_.back(); }
  const std::vector<Vec>& break_states() const { return states_; }
  const PiecewiseControl& control() const { return control_; }

  Vec at(double s) const {
    const auto& br = control_.breaks;
    if (s <= br.front()) return states_.front();
    if (s >= br.back()) return states_.back();
    const auto q = static_cast<std::size_t>(std::upper_bound(br.begin(), br.end(), s) - br.begin() - 1);
    return step(sys_, control_.values[q], states_[q], br[q], s, tol_);
  }

  static Vec step(const SystemDef& sys, const Vec& value, const Vec& z0, double s0, double s1,
                  const Tolerances& tol) {
    if (value.cwiseAbs().maxCoeff() == 0.0) return z0;
    const auto fam = sys.control_families();
    const VectorField f = [&](const Vec& z) -> Vec {
      const Mat r = eigendecompose(sys, z).right;
      Vec dz = Vec::Zero(sys.n());
      for (std::size_t i = 0; i < fam.size(); ++i) {
        const double a = value(static_cast<Eigen::Index>(i));
        if (a != 0.0) dz += a * r.col(fam[i] - 1);
      }
      return dz;
    };
    return integrate(f, z0, s0, s1, tol.ode_tol, sys.domain());
  }

 private:
  SystemDef sys_;
  PiecewiseControl control_;
  std::vector<Vec> states_;
  Tolerances tol_;
};

inline ControlPath control_flow(const SystemDef& sys, const PiecewiseControl& alpha, const Vec& u0,
                                const Tolerances& tol = {}) {
  alpha.validate(sys.n() - 1);
  require_in_domain(sys, u0);
  std::vector<Vec> states{u0};
  for (int q = 0; q < alpha.pieces(); ++q) {
    states.push_back(ControlPath::step(sys, alpha.values[static_cast<std::size_t>(q)], states.back(),
                                       alpha.breaks[static_cast<std::size_t>(q)],
                                       alpha.breaks[static_cast<std::size_t>(q) + 1], tol));
  }
  return ControlPath(sys, alpha, std::move(states), tol);
}

/// Single-component approximation: each mixed piece is cut into k periods of
/// N = width slots, slot i carrying N times the i-th component alone.
inline PiecewiseControl chop(const PiecewiseControl& f, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidParams, "chop level must be positive");
  PiecewiseControl out;
  out.breaks = {f.breaks.front()};
  for (int q = 0; q < f.pieces(); ++q) {
    const Vec& v = f.values[static_cast<std::size_t>(q)];
    const double a = f.breaks[static_cast<std::size_t>(q)];
    const double b = f.breaks[static_cast<std::size_t>(q) + 1];
    if ((v.array() != 0.0).count() <= 1) {
      out.values.push_back(v);
      out.breaks.push_back(b);
      continue;
    }
    const auto N = static_cast<int>(v.size());
    const int slots = k * N;
    for (int idx = 0; idx < slots; ++idx) {
      const int i = idx % N;
      Vec w = Vec::Zero(N);
      w(i) = N * v(i);
      out.values.push_back(w);
      out.breaks.push_back(idx + 1 == slots ? b : a + (b - a) * (idx + 1) / slots);
    }
  }
  return out;
}

struct Leg {
  int family = 0;
  double amplitude = 0.0;
};

/// Reads legs off a single-component control: a piece of value c e_i over
/// duration d becomes (family_i, c d). Zero legs vanish; neighbours on the same
/// family merge.
inline std::vector<Leg> legs_from(const SystemDef& sys, const PiecewiseControl& c) {
  const auto fam = sys.control_families();
  std::vector<Leg> legs;
  for (int q = 0; q < c.pieces(); ++q) {
    const Vec& v = c.values[static_cast<std::size_t>(q)];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v(i) == 0.0) continue;
      const Leg leg{fam[static_cast<std::size_t>(i)], v(i) * c.duration(q)};
      if (!legs.empty() && legs.back().family == leg.family) {
        legs.back().amplitude += leg.amplitude;
        if (legs.back().amplitude == 0.0) legs.pop_back();
      } else {
        legs.push_back(leg);
      }
    }
  }
  return legs;
}

struct ZigzagPlan {
  std::vector<Leg> legs;
  std::vector<Vec> states;  ///< u_0 = u*, u_l after leg l
  Vec target;
  Vec achieved;
  double error = 0.0;
  double amplitude_sum = 0.0;
  int chop_level = 0;

  int size() const { return static_cast<int>(legs.size()); }
};

/// Composes the legs from u0, returning u_0..u_p.
inline std::vector<Vec> compose_legs(const SystemDef& sys, const std::vector<Leg>& legs, const Vec& u0,
                                     const Tolerances& tol = {}) {
  std::vector<Vec> states{u0};
  for (const auto& leg : legs) states.push_back(flow_map(sys, leg.family, leg.amplitude, states.back(), tol));
  return states;
}

inline ZigzagPlan plan_from_legs(const SystemDef& sys, std::vector<Leg> legs, const Tolerances& tol = {}) {
  ZigzagPlan plan;
  plan.legs = std::move(legs);
  plan.states = compose_legs(sys, plan.legs, sys.u_star(), tol);
  plan.achieved = plan.states.back();
  plan.target = plan.achieved;
  for (const auto& leg : plan.legs) plan.amplitude_sum += std::abs(leg.amplitude);
  return plan;
}

inline ZigzagPlan plan_zigzag(const SystemDef& sys, const PiecewiseControl& alpha, double eta_plan,
                              int k_max = 1024, const Tolerances& tol = {}) {
  if (!(eta_plan > 0)) throw Error(ErrorKind::InvalidParams, "eta_plan must be positive");
  const Vec target = control_flow(sys, alpha, sys.u_star(), tol).end();
  double last = 0.0;
  for (int k = 1; k <= k_max; k *= 2) {
    ZigzagPlan plan = plan_from_legs(sys, legs_from(sys, chop(alpha, k)), tol);
    plan.target = target;
    plan.error = (target - plan.achieved).norm();
    plan.chop_level = k;
    last = plan.error;
    if (plan.error <= eta_plan) return plan;
  }
  std::ostringstream os;
  os << "zigzag error " << last << " still above " << eta_plan << " at chop level " << k_max;
  throw Error(ErrorKind::NoConvergence, os.str());
}

// --- hypothesis certification ---------------------------------------------

struct H1Entry {
  int family = 0;
  double value = 0.0;                 ///< grad lambda_m . r_j, unit vectors
  std::optional<double> paper_value;  ///< same with the closed-form vectors
  double numeric_value = 0.0;         ///< eigen-solver and finite differences only
  std::optional<double> numeric_paper_value;
};

struct H2Entry {
  int j = 0;
  int k = 0;
  double value = 0.0;  ///< grad lambda_m . [r_j, r_k]
};

/// Right-normed word [a_1, [a_2, [..., a_d]]].
struct BracketWord {
  std::vector<int> letters;
  double value = 0.0;

  std::string text() const {
    if (letters.size() == 1) return "r" + std::to_string(letters.front());
    std::string s = "r" + std::to_string(letters.back());
    for (auto it = letters.rbegin() + 1; it != letters.rend(); ++it) {
      s = "[r" + std::to_string(*it) + "," + s + "]";
    }
    return s;
  }
};

struct Candidate {
  std::string label;
  int level = 0;
  PiecewiseControl control;
  Vec endpoint;
  double lambda_m = 0.0;
};

struct HypothesisReport {
  double epsilon = 0.0;
  int bracket_depth = 0;
  double tolerance = 0.0;  ///< nonvanishing threshold for H1-H3
  std::vector<H1Entry> h1;
  bool h1_holds = false;
  std::vector<H2Entry> h2;
  bool h2_holds = false;
  std::vector<BracketWord> h3;  ///< words of depth >= 3
  bool h3_holds = false;
  int h4_rank = 0;
  bool h4_holds = false;
  bool certified = false;
  std::optional<Candidate> best;
  int candidates_tried = 0;

  std::optional<H1Entry> h1_witness() const {
    std::optional<H1Entry> w;
    for (const auto& e : h1) {
      if (std::abs(e.value) > tolerance && (!w || std::abs(e.value) > std::abs(w->value))) w = e;
    }
    return w;
  }
};

namespace detail {

/// Vector field of a right-normed word at u. Depth-two words use the exact
/// bracket; deeper ones difference the inner field with a step that grows per
/// level so nested truncation stays above roundoff.
inline Vec word_field(const SystemDef& sys, const std::vector<int>& w, std::size_t from, const Vec& u) {
  const std::size_t depth = w.size() - from;
  if (depth == 1) return right_eigenvector(sys, w[from], u);
  if (depth == 2) return lie_bracket(sys, w[from], w[from + 1], u);
  DiffOptions inner;
  inner.step = std::pow(10.0, -5.0 + static_cast<double>(depth - 2));
  const Mat d_inner = central_jacobian(sys, u, inner, [&](const Vec& x) -> Vec {
    return word_field(sys, w, from + 1, x);
  });
  const Vec ra = right_eigenvector(sys, w[from], u);
  const Vec inner_u = word_field(sys, w, from + 1, u);
  return d_inner * ra - eigvec_jacobian(sys, w[from], u) * inner_u;
}

/// Commutator motion: A B A^-1 B^-1 as signed letters.
inline std::vector<std::pair<int, int>> word_motion(const std::vector<int>& w, std::size_t from = 0) {
  if (w.size() - from == 1) return {{w[from], 1}};
  const std::vector<std::pair<int, int>> a{{w[from], 1}};
  const auto b = word_motion(w, from + 1);
  auto inv = [](std::vector<std::pair<int, int>> m) {
    std::reverse(m.begin(), m.end());
    for (auto& p : m) p.second = -p.second;
    return m;
  };
  std::vector<std::pair<int, int>> out = a;
  out.insert(out.end(), b.begin(), b.end());
  const auto ai = inv(a), bi = inv(b);
  out.insert(out.end(), ai.begin(), ai.end());
  out.insert(out.end(), bi.begin(), bi.end());
  return out;
}

inline PiecewiseControl motion_control(const SystemDef& sys, const std::vector<std::pair<int, int>>& motion,
                                       double eps) {
  PiecewiseControl c;
  c.breaks = {0.0};
  const auto q = static_cast<int>(motion.size());
  for (int i = 0; i < q; ++i) {
    Vec v = Vec::Zero(sys.n() - 1);
    v(control_slot(sys, motion[static_cast<std::size_t>(i)].first)) =
        eps * motion[static_cast<std::size_t>(i)].second;
    c.values.push_back(v);
    c.breaks.push_back(i + 1 == q ? 1.0 : static_cast<double>(i + 1) / q);
  }
  return c;
}

}  // namespace detail

/// Evaluates the bracket conditions at u* and certifies Hypothesis (H) by
/// simulating pulses and commutator zigzags of size eps.
inline HypothesisReport certify_H(const SystemDef& sys, double eps, int bracket_depth,
                                  const Tolerances& tol = {}) {
  const int m = sys.sonic_family();
  const Vec& us = sys.u_star();
  const auto fam = sys.control_families();
  const RowVec gm = grad_lambda(sys, m, us);
  const double scale = std::max(1.0, max_speed(sys, us));

  HypothesisReport rep;
  rep.epsilon = eps;
  rep.bracket_depth = bracket_depth;
  rep.tolerance = 1e-6 * scale;

  const Spectral sp = eigendecompose(sys, us);
  const Spectral sp_num = eigendecompose(sys, us, SpectralPath::numeric);
  DiffOptions numeric;
  numeric.path = SpectralPath::numeric;
  const RowVec gm_num = grad_lambda(sys, m, us, numeric);
  for (int j : fam) {
    H1Entry e;
    e.family = j;
    e.value = gm.dot(sp.right.col(j - 1));
    e.numeric_value = gm_num.dot(sp_num.right.col(j - 1));
    if (sp.has_paper()) {
      e.paper_value = e.value * sp.paper_scale(j - 1);
      e.numeric_paper_value = e.numeric_value * sp.paper_scale(j - 1);
    }
    rep.h1_holds = rep.h1_holds || std::abs(e.value) > rep.tolerance;
    rep.h1.push_back(e);
  }

  std::vector<std::vector<int>> words;
  std::vector<Vec> span;
  for (int j : fam) span.push_back(sp.right.col(j - 1));
  for (std::size_t a = 0; a < fam.size(); ++a) {
    for (std::size_t b = a + 1; b < fam.size(); ++b) {
      const Vec br = lie_bracket(sys, fam[a], fam[b], us);
      const double v = gm.dot(br);
      rep.h2.push_back({fam[a], fam[b], v});
      rep.h2_holds = rep.h2_holds || std::abs(v) > rep.tolerance;
      span.push_back(br);
      words.push_back({fam[a], fam[b]});
    }
  }

  std::vector<std::vector<int>> frontier = words;
  for (int d = 3; d <= bracket_depth; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& w : frontier) {
      for (int a : fam) {
        std::vector<int> nw{a};
        nw.insert(nw.end(), w.begin(), w.end());
        try {
          const Vec f = detail::word_field(sys, nw, 0, us);
          BracketWord bw{nw, gm.dot(f)};
          rep.h3_holds = rep.h3_holds || std::abs(bw.value) > rep.tolerance * 10.0;
          rep.h3.push_back(bw);
          span.push_back(f);
          next.push_back(nw);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::OutOfDomain) throw;
        }
      }
    }
    frontier = std::move(next);
  }

  Mat basis(sys.n(), static_cast<Eigen::Index>(span.size()));
  for (std::size_t i = 0; i < span.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = span[i];
  Eigen::MatrixXd dense = basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  svd.setThreshold(1e-6);
  rep.h4_rank = static_cast<int>(svd.rank());
  bool near_nonsonic = false;
  for (int k = 0; k < sys.n() && !near_nonsonic; ++k) {
    Vec up = us;
    up(k) += 1e-4 * (sys.domain().hi(k) - sys.domain().lo(k));
    near_nonsonic = sys.domain().contains(up) && std::abs(sys.lambdas(up)(m - 1)) > 1e-12;
  }
  rep.h4_holds = rep.h4_rank == sys.n() && near_nonsonic;

  // simulation: pulses, then commutators, then deeper words
  std::vector<std::vector<Candidate>> levels(1);
  for (int j : fam) {
    for (int sign : {1, -1}) {
      Vec v = Vec::Zero(sys.n() - 1);
      v(control_slot(sys, j)) = sign * eps;
      levels[0].push_back({"pulse " + std::string(sign > 0 ? "+" : "-") + "r" + std::to_string(j), 1,
                           constant_control(v), {}, 0.0});
    }
  }
  std::vector<std::vector<int>> all_words = words;
  for (const auto& bw : rep.h3) all_words.push_back(bw.letters);
  for (const auto& w : all_words) {
    const auto level = static_cast<std::size_t>(w.size());
    if (levels.size() < level) levels.resize(level);
    const BracketWord bw{w, 0.0};
    for (int sign : {1, -1}) {
      levels[level - 1].push_back({"commutator " + bw.text() + (sign > 0 ? "" : " reversed"),
                                   static_cast<int>(level),
                                   detail::motion_control(sys, detail::word_motion(w), sign * eps),
                                   {}, 0.0});
    }
  }

  const double cert_tol = 1e-8 * scale;
  for (auto& level : levels) {
    for (auto& c : level) {
      ++rep.candidates_tried;
      try {
        c.endpoint = control_flow(sys, c.control, us, tol).end();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::LeftDomain || e.kind() == ErrorKind::BlowUp ||
            e.kind() == ErrorKind::OutOfDomain || e.kind() == ErrorKind::ComplexOrRepeatedEigenvalues) {
          continue;
        }
        throw;
      }
      c.lambda_m = sys.lambdas(c.endpoint)(m - 1);
      if (!rep.best || std::abs(c.lambda_m) > std::abs(rep.best->lambda_m)) rep.best = c;
    }
    if (rep.best && std::abs(rep.best->lambda_m) > cert_tol) {
      rep.certified = true;
      break;
    }
  }
  return rep;
}

}  // namespace sonicctl
