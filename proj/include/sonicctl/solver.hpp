#pragma once

#include "sonicctl/core.hpp"
#include "sonicctl/grid.hpp"
#include "sonicctl/interp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace sonicctl {

using EdgeData = std::function<Vec(double)>;

/// Uniform nodes x_lo + j dx, j = 0..cells.
struct Window {
  double x_lo = 0.0;
  double dx = 0.01;
  int cells = 100;

  int nodes() const { return cells + 1; }
  double node(int j) const { return x_lo + dx * j; }
  double x_hi() const { return node(cells); }

  /// Window covering [-pad, L + pad] whose nodes include 0 and L exactly
  /// (L must be a multiple of dx).
  static Window around(double L, int nx, double pad) {
    Window w;
    w.dx = L / nx;
    const int extra = static_cast<int>(std::ceil(pad / w.dx - 1e-9));
    w.x_lo = -extra * w.dx;
    w.cells = nx + 2 * extra;
    return w;
  }

  /// Index of the node closest to x.
  int index_of(double x) const { return static_cast<int>(std::lround((x - x_lo) / dx)); }
};

namespace detail {

/// One MacCormack step for u_s + M(u) u_y = 0 on the interior nodes. `apply`
/// computes M(u) v. Alternating the predictor direction keeps the scheme
/// symmetric over step pairs.
template <class Apply>
void maccormack(const std::vector<Vec>& u, std::vector<Vec>& pred, std::vector<Vec>& out, double r,
                bool forward_first, Apply&& apply) {
  const std::size_t N = u.size() - 1;
  if (forward_first) {
    for (std::size_t j = 0; j < N; ++j) pred[j] = u[j] - r * apply(u[j], u[j + 1] - u[j]);
    pred[N] = u[N];
    for (std::size_t j = 1; j < N; ++j) out[j] = 0.5 * (u[j] + pred[j] - r * apply(pred[j], pred[j] - pred[j - 1]));
  } else {
    pred[0] = u[0];
    for (std::size_t j = 1; j <= N; ++j) pred[j] = u[j] - r * apply(u[j], u[j] - u[j - 1]);
    for (std::size_t j = 1; j < N; ++j) out[j] = 0.5 * (u[j] + pred[j] - r * apply(pred[j], pred[j + 1] - pred[j]));
  }
}

/// Boundary node from linear extrapolation of the interior, with the
/// characteristic components entering the domain replaced by those of `given`.
/// `sign` multiplies the speeds; `low` selects the edge at the small end.
inline Vec characteristic_edge(const SystemDef& sys, const Vec& extrap, const Vec& given, double sign, bool low) {
  const Vec& base = sys.domain().contains(given) ? given : extrap;
  const Spectral sp = eigendecompose(sys, base);
  Vec out = extrap;
  const Vec diff = given - extrap;
  for (int i = 0; i < sys.n(); ++i) {
    const double speed = sign * sp.lambdas(i);
    const bool incoming = low ? speed > 0 : speed < 0;
    if (incoming) out += sp.left.row(i).dot(diff) * sp.right.col(i);
  }
  return out;
}

inline double c1_norm(const std::vector<Vec>& u, double h) {
  double val = 0.0, slope = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    val = std::max(val, u[j].cwiseAbs().maxCoeff());
    if (j > 0) slope = std::max(slope, (u[j] - u[j - 1]).cwiseAbs().maxCoeff() / h);
  }
  return val + slope;
}

inline void check_inside(const SystemDef& sys, const std::vector<Vec>& u, double s, const char* var) {
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!u[j].allFinite() || !sys.domain().contains(u[j])) {
      std::ostringstream os;
      os << "solution left the domain at " << var << " = " << s << ", node " << j << ": " << u[j].transpose();
      throw Error(ErrorKind::LeftDomain, os.str());
    }
  }
}

inline double max_speed_over(const SystemDef& sys, const std::vector<Vec>& u) {
  double out = 0.0;
  for (const auto& v : u) out = std::max(out, max_speed(sys, v));
  return out;
}

}  // namespace detail

struct CauchyOptions {
  double cfl = 0.45;
  int record_every = 1;  ///< stored time stride; the last step is always stored
  double record_dt = 0.0;  ///< when positive, overrides record_every by a time spacing
  double record_lo = -std::numeric_limits<double>::infinity();
  double record_hi = std::numeric_limits<double>::infinity();
  EdgeData far_left;   ///< t -> state beyond the left edge; default: frozen data
  EdgeData far_right;
  std::vector<int> trace_nodes;  ///< window nodes sampled at every step
  bool record_edges = false;
  double gradient_factor = 100.0;
  int check_every = 16;
  std::string tag = "cauchy";
};

struct CauchyResult {
  GridSolution solution;
  std::vector<double> step_t;               ///< every step, ascending
  std::vector<std::vector<Vec>> traces;     ///< per trace node, aligned with step_t
  std::vector<Vec> left_edge, right_edge;   ///< when record_edges, aligned with step_t
  std::vector<Vec> final_row;               ///< whole window at the target time
  double dt = 0.0;
  int steps = 0;
};

namespace detail {

inline GridSolution reversed_in_time(const GridSolution& s) {
  GridSolution out(s.n, std::vector<double>(s.t.rbegin(), s.t.rend()), s.x, s.provenance);
  for (int it = 0; it < s.nt(); ++it) {
    for (int ix = 0; ix < s.nx(); ++ix) out.set(it, ix, s.at(s.nt() - 1 - it, ix));
  }
  return out;
}

}  // namespace detail

/// Solves u_t + A(u) u_x = 0 from data at t_data towards t_target on a finite
/// window. A target below t_data runs the time-reversed system
/// v_s - A(v) v_x = 0; rows are returned in ascending time either way.
inline CauchyResult cauchy_solve(const SystemDef& sys, const Window& w, std::vector<Vec> u, double t_data,
                                 double t_target, const CauchyOptions& opts = {}) {
  const int N = w.cells;
  if (static_cast<int>(u.size()) != N + 1) throw Error(ErrorKind::InvalidParams, "data size does not match the window");
  if (N < 2) throw Error(ErrorKind::InvalidParams, "window needs at least three nodes");
  if (!(opts.cfl > 0.0 && opts.cfl < 1.0)) {
    std::ostringstream os;
    os << "Courant number " << opts.cfl << " outside (0, 1)";
    throw Error(ErrorKind::CFLViolation, os.str());
  }
  detail::check_inside(sys, u, t_data, "t");
  const double dir = t_target >= t_data ? 1.0 : -1.0;
  const double span = std::abs(t_target - t_data);
  double speed = detail::max_speed_over(sys, u);
  if (!(speed > 0)) speed = 1.0;
  const int steps = std::max(1, static_cast<int>(std::ceil(span * 1.1 * speed / (opts.cfl * w.dx))));
  const double dt = span / steps;
  const double r = dt / w.dx;
  const int stride = opts.record_dt > 0.0 ? std::max(1, static_cast<int>(std::floor(opts.record_dt / dt + 1e-9)))
                                          : std::max(1, opts.record_every);

  const Vec left0 = u.front(), right0 = u.back();
  const EdgeData far_left = opts.far_left ? opts.far_left : EdgeData([left0](double) { return left0; });
  const EdgeData far_right = opts.far_right ? opts.far_right : EdgeData([right0](double) { return right0; });

  std::vector<double> xs;
  std::vector<int> cols;
  for (int j = 0; j <= N; ++j) {
    const double x = w.node(j);
    if (x >= opts.record_lo - 1e-9 * w.dx && x <= opts.record_hi + 1e-9 * w.dx) {
      xs.push_back(x);
      cols.push_back(j);
    }
  }
  CauchyResult res;
  res.dt = dt;
  res.steps = steps;
  res.solution = GridSolution(sys.n(), {}, xs, opts.tag);
  auto store = [&](double t) {
    std::vector<Vec> row;
    row.reserve(cols.size());
    for (int j : cols) row.push_back(u[static_cast<std::size_t>(j)]);
    res.solution.push_row(t, row);
  };
  auto sample = [&](double t) {
    res.step_t.push_back(t);
    for (std::size_t i = 0; i < opts.trace_nodes.size(); ++i) {
      res.traces[i].push_back(u[static_cast<std::size_t>(opts.trace_nodes[i])]);
    }
    if (opts.record_edges) {
      res.left_edge.push_back(u.front());
      res.right_edge.push_back(u.back());
    }
  };
  res.traces.resize(opts.trace_nodes.size());
  store(t_data);
  sample(t_data);

  const double c1_limit = opts.gradient_factor * std::max(detail::c1_norm(u, w.dx), 1e-300);
  const auto apply = [&sys, dir](const Vec& s, const Vec& v) -> Vec { return dir * (sys.A(s) * v); };
  std::vector<Vec> pred(u.size()), next(u);
  for (int k = 1; k <= steps; ++k) {
    const double t = k == steps ? t_target : t_data + dir * k * dt;
    detail::maccormack(u, pred, next, r, k % 2 == 1, apply);
    next[0] = detail::characteristic_edge(sys, 2.0 * next[1] - next[2], far_left(t), dir, true);
    next[static_cast<std::size_t>(N)] = detail::characteristic_edge(
        sys, 2.0 * next[static_cast<std::size_t>(N) - 1] - next[static_cast<std::size_t>(N) - 2], far_right(t), dir,
        false);
    std::swap(u, next);
    detail::check_inside(sys, u, t, "t");
    if (k % opts.check_every == 0 || k == steps) {
      const double courant = detail::max_speed_over(sys, u) * r;
      if (courant > 1.0) {
        std::ostringstream os;
        os << "Courant number reached " << courant << " at t = " << t;
        throw Error(ErrorKind::CFLViolation, os.str());
      }
      const double c1 = detail::c1_norm(u, w.dx);
      if (c1 > c1_limit) {
        std::ostringstream os;
        os << "C1 norm " << c1 << " exceeds " << c1_limit << " at t = " << t;
        throw Error(ErrorKind::GradientBlowup, os.str());
      }
    }
    sample(t);
    if (k % stride == 0 || k == steps) store(t);
  }
  res.final_row = u;
  if (dir < 0) {
    res.solution = detail::reversed_in_time(res.solution);
    std::reverse(res.step_t.begin(), res.step_t.end());
    for (auto& tr : res.traces) std::reverse(tr.begin(), tr.end());
    std::reverse(res.left_edge.begin(), res.left_edge.end());
    std::reverse(res.right_edge.begin(), res.right_edge.end());
  }
  if (res.solution.nt() >= 3 && res.solution.nx() >= 3) res.solution.residual = residual(sys, res.solution);
  return res;
}

inline std::vector<Vec> sample_on(const Window& w, const std::function<Vec(double)>& f) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(w.nodes()));
  for (int j = 0; j < w.nodes(); ++j) out.push_back(f(w.node(j)));
  return out;
}

inline CauchyResult cauchy_forward(const SystemDef& sys, const Window& w, const std::function<Vec(double)>& data,
                                   double t0, double t1, CauchyOptions opts = {}) {
  if (!(t1 > t0)) throw Error(ErrorKind::InvalidParams, "forward solve needs t1 > t0");
  return cauchy_solve(sys, w, sample_on(w, data), t0, t1, opts);
}

/// Data given at t1, solved down to t0.
inline CauchyResult cauchy_backward(const SystemDef& sys, const Window& w, const std::function<Vec(double)>& data,
                                    double t0, double t1, CauchyOptions opts = {}) {
  if (!(t1 > t0)) throw Error(ErrorKind::InvalidParams, "backward solve needs t1 > t0");
  if (opts.tag == "cauchy") opts.tag = "backward";
  return cauchy_solve(sys, w, sample_on(w, data), t1, t0, opts);
}

// --- initial-boundary value problem on [0, L] -----------------------------

struct IbvpOptions {
  double cfl = 0.45;
  int check_every = 16;
};

/// Solves on the nodes of [0, L] from `initial` at times.front(), imposing the
/// incoming characteristic components of left(t), right(t) at the ends, and
/// returns the solution at every requested time.
inline GridSolution simulate_ibvp(const SystemDef& sys, double L, std::vector<Vec> initial,
                                  const std::vector<double>& times, const EdgeData& left, const EdgeData& right,
                                  const IbvpOptions& opts = {}) {
  const int N = static_cast<int>(initial.size()) - 1;
  if (N < 2) throw Error(ErrorKind::InvalidParams, "IBVP needs at least three nodes");
  if (!(opts.cfl > 0.0 && opts.cfl < 1.0)) throw Error(ErrorKind::CFLViolation, "Courant number outside (0, 1)");
  const double dx = L / N;
  std::vector<double> xs(static_cast<std::size_t>(N) + 1);
  for (int j = 0; j <= N; ++j) xs[static_cast<std::size_t>(j)] = (j == N) ? L : dx * j;
  GridSolution sol(sys.n(), {}, xs, "ibvp");
  std::vector<Vec> u = std::move(initial), pred(u.size()), next(u.size());
  detail::check_inside(sys, u, times.front(), "t");
  sol.push_row(times.front(), u);
  double speed = detail::max_speed_over(sys, u);
  if (!(speed > 0)) speed = 1.0;
  const double dt_max = opts.cfl * dx / (1.1 * speed);
  const auto apply = [&sys](const Vec& s, const Vec& v) -> Vec { return sys.A(s) * v; };
  long step = 0;
  double t = times.front();
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double target = times[k];
    if (target < t) throw Error(ErrorKind::InvalidParams, "IBVP output times must not decrease");
    const int sub = target > t ? static_cast<int>(std::ceil((target - t) / dt_max - 1e-9)) : 0;
    const double t_start = t;
    for (int s = 1; s <= sub; ++s) {
      const double tn = s == sub ? target : t_start + (target - t_start) * s / sub;
      const double r = (tn - t) / dx;
      ++step;
      next = u;
      detail::maccormack(u, pred, next, r, step % 2 == 1, apply);
      next[0] = detail::characteristic_edge(sys, 2.0 * next[1] - next[2], left(tn), 1.0, true);
      next[static_cast<std::size_t>(N)] = detail::characteristic_edge(
          sys, 2.0 * next[static_cast<std::size_t>(N) - 1] - next[static_cast<std::size_t>(N) - 2], right(tn), 1.0,
          false);
      std::swap(u, next);
      t = tn;
      detail::check_inside(sys, u, t, "t");
      if (step % opts.check_every == 0) {
        const double courant = detail::max_speed_over(sys, u) * r;
        if (courant > 1.0) {
          std::ostringstream os;
          os << "Courant number reached " << courant << " at t = " << t;
          throw Error(ErrorKind::CFLViolation, os.str());
        }
      }
    }
    sol.push_row(target, u);
  }
  if (sol.nt() >= 3) sol.residual = residual(sys, sol);
  return sol;
}

// --- sideways (x-marching) solve ------------------------------------------

struct SidewaysProblem {
  std::vector<double> t;                 ///< uniform, ascending
  std::vector<Vec> left;                 ///< u(t_k, 0)
  std::function<Vec(double)> bottom;     ///< x -> u(t.front(), x)
  std::function<Vec(double)> top;        ///< x -> u(t.back(), x)
  double length = 1.0;
  int nx = 100;                          ///< output intervals on [0, L]
  double cfl = 0.45;
  double sonic_floor = 1e-6;
  int check_every = 8;
};

/// Marches u_x + A(u)^{-1} u_t = 0 across [0, L]. Families with positive
/// speed enter through the bottom edge and take their data there; negative
/// ones enter through the top.
inline GridSolution sideways_solve(const SystemDef& sys, const SidewaysProblem& pb) {
  const int K = static_cast<int>(pb.t.size()) - 1;
  if (K < 2 || static_cast<int>(pb.left.size()) != K + 1) {
    throw Error(ErrorKind::InvalidParams, "sideways solve needs matching time nodes and left data");
  }
  if (!(pb.cfl > 0.0 && pb.cfl < 1.0)) throw Error(ErrorKind::CFLViolation, "Courant number outside (0, 1)");
  const double dt = (pb.t.back() - pb.t.front()) / K;
  std::vector<Vec> u = pb.left;
  detail::check_inside(sys, u, 0.0, "x");
  auto slowest = [&](const std::vector<Vec>& col) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& v : col) m = std::min(m, sys.lambdas(v).cwiseAbs().minCoeff());
    return m;
  };
  const double lam0 = slowest(u);
  if (!(lam0 > pb.sonic_floor)) {
    std::ostringstream os;
    os << "speed " << lam0 << " below the floor on the left data";
    throw Error(ErrorKind::SonicInside, os.str());
  }
  const double h_out = pb.length / pb.nx;
  const double h_max = pb.cfl * dt * lam0 / 1.2;
  const int sub = std::max(1, static_cast<int>(std::ceil(h_out / h_max)));
  const double h = h_out / sub;
  const double r = h / dt;

  std::vector<double> xs(static_cast<std::size_t>(pb.nx) + 1);
  for (int i = 0; i <= pb.nx; ++i) xs[static_cast<std::size_t>(i)] = i == pb.nx ? pb.length : h_out * i;
  GridSolution sol(sys.n(), pb.t, xs, "sideways");
  for (int k = 0; k <= K; ++k) sol.set(k, 0, u[static_cast<std::size_t>(k)]);

  const auto apply = [&sys](const Vec& s, const Vec& v) -> Vec { return sys.A(s).partialPivLu().solve(v); };
  std::vector<Vec> pred(u.size()), next(u);
  long step = 0;
  for (int i = 1; i <= pb.nx; ++i) {
    for (int s = 1; s <= sub; ++s) {
      ++step;
      const double x = (i == pb.nx && s == sub) ? pb.length : h_out * (i - 1) + h * s;
      detail::maccormack(u, pred, next, r, step % 2 == 1, apply);
      next[0] = detail::characteristic_edge(sys, 2.0 * next[1] - next[2], pb.bottom(x), 1.0, true);
      next[static_cast<std::size_t>(K)] = detail::characteristic_edge(
          sys, 2.0 * next[static_cast<std::size_t>(K) - 1] - next[static_cast<std::size_t>(K) - 2], pb.top(x), 1.0,
          false);
      std::swap(u, next);
      detail::check_inside(sys, u, x, "x");
      if (step % pb.check_every == 0) {
        const double lam = slowest(u);
        if (!(lam > pb.sonic_floor)) {
          std::ostringstream os;
          os << "speed " << lam << " below the floor at x = " << x;
          throw Error(ErrorKind::SonicInside, os.str());
        }
        if (r / lam > 1.0) {
          std::ostringstream os;
          os << "sideways Courant number reached " << r / lam << " at x = " << x;
          throw Error(ErrorKind::CFLViolation, os.str());
        }
      }
    }
    for (int k = 0; k <= K; ++k) sol.set(k, i, u[static_cast<std::size_t>(k)]);
  }
  sol.residual = residual(sys, sol);
  return sol;
}

// --- middle matching ------------------------------------------------------

/// Time extent of the bridge's influence across [0, L]: `below` reaches back
/// along the slowest negative family, `above` forward along the slowest
/// positive one.
struct BridgeCone {
  double below = 0.0;
  double above = 0.0;
};

inline BridgeCone bridge_cone(const SystemDef& sys, const Vec& reference, double L, double safety = 1.1) {
  const Vec lam = sys.lambdas(reference);
  BridgeCone c;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < 0) c.below = std::max(c.below, safety * L / -lam(i));
    if (lam(i) > 0) c.above = std::max(c.above, safety * L / lam(i));
  }
  return c;
}

struct MatchSpec {
  std::vector<Vec> bottom;  ///< data at t_bottom on the nx+1 nodes of [0, L]
  std::vector<Vec> top;     ///< data at t_top
  double t_bottom = 0.0;
  double t_top = 1.0;
  double t_mid = 0.5;
  double half_width = 0.05;
  Vec reference;            ///< constant state the data is close to
};

struct MatchOptions {
  double length = 1.0;
  int nx = 400;
  double cfl = 0.45;
  double strip = 0.25;         ///< blend width, multiple of L
  double margin = 0.5;         ///< extra window beyond the strips, multiple of L
  double sideways_dt = 0.02;
  double match_tol = 5e-4;
};

struct MatchResult {
  GridSolution solution;
  double bottom_error = 0.0;
  double top_error = 0.0;
  BridgeCone cone;
  int forward_steps = 0;
  int backward_steps = 0;
};

/// Data on [0, L] continued to a window: a C^2 Taylor-bump blend from the data
/// at each end to the reference over `strip`, reference beyond.
inline std::vector<Vec> blend_to_reference(const Window& w, const std::vector<Vec>& data, int nx, double L,
                                           double strip, const std::function<Vec(double)>& reference) {
  const int j0 = w.index_of(0.0);
  const double h = L / nx;
  std::vector<Vec> delta(data.size());
  for (int i = 0; i <= nx; ++i) delta[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(i)] - reference(i == nx ? L : h * i);
  auto d = [&](int i) -> const Vec& { return delta[static_cast<std::size_t>(i)]; };
  // one-sided second order derivatives at both ends
  const Vec d1_lo = (-3.0 * d(0) + 4.0 * d(1) - d(2)) / (2.0 * h);
  const Vec d2_lo = (2.0 * d(0) - 5.0 * d(1) + 4.0 * d(2) - d(3)) / (h * h);
  const Vec d1_hi = (3.0 * d(nx) - 4.0 * d(nx - 1) + d(nx - 2)) / (2.0 * h);
  const Vec d2_hi = (2.0 * d(nx) - 5.0 * d(nx - 1) + 4.0 * d(nx - 2) - d(nx - 3)) / (h * h);
  auto fade = [](double s) {
    if (s >= 1.0) return 0.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  };
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(w.nodes()));
  for (int j = 0; j < w.nodes(); ++j) {
    const int i = j - j0;
    const double x = w.node(j);
    if (i >= 0 && i <= nx) {
      out.push_back(data[static_cast<std::size_t>(i)]);
    } else if (i > nx) {
      const double s = x - L;
      out.push_back(reference(x) + (d(nx) + d1_hi * s + 0.5 * d2_hi * s * s) * fade(s / (strip * L)));
    } else {
      const double s = x;
      out.push_back(reference(x) + (d(0) + d1_lo * s + 0.5 * d2_lo * s * s) * fade(-s / (strip * L)));
    }
  }
  return out;
}

/// Joins data near a constant reference at t_bottom and t_top through one
/// solution on [t_bottom, t_top] x [0, L]: forward and backward traces at x = 0
/// bridged by a quintic, then marched sideways.
inline MatchResult match_middle(const SystemDef& sys, const MatchSpec& spec, const MatchOptions& opts) {
  const double L = opts.length;
  const int nx = opts.nx;
  MatchResult res;
  res.cone = bridge_cone(sys, spec.reference, L);
  const double lo = spec.t_mid - spec.half_width, hi = spec.t_mid + spec.half_width;
  if (!(lo - res.cone.below > spec.t_bottom && hi + res.cone.above < spec.t_top)) {
    std::ostringstream os;
    os << "bridge influence [" << lo - res.cone.below << ", " << hi + res.cone.above << "] not inside ("
       << spec.t_bottom << ", " << spec.t_top << ")";
    throw Error(ErrorKind::MatchFailure, os.str());
  }
  const Window w = Window::around(L, nx, (opts.strip + opts.margin) * L);
  const Vec ref = spec.reference;
  const auto reference = [&ref](double) { return ref; };
  const int j0 = w.index_of(0.0);

  CauchyOptions co;
  co.cfl = opts.cfl;
  co.record_every = std::numeric_limits<int>::max();
  co.record_lo = 0.0;
  co.record_hi = L;
  co.far_left = reference;
  co.far_right = reference;
  co.trace_nodes = {j0};
  const double pad = std::min(0.5 * spec.half_width, 0.25 * (lo - spec.t_bottom));
  const auto fwd = cauchy_solve(sys, w, blend_to_reference(w, spec.bottom, nx, L, opts.strip, reference),
                                spec.t_bottom, lo + pad, co);
  co.tag = "backward";
  const auto bwd = cauchy_solve(sys, w, blend_to_reference(w, spec.top, nx, L, opts.strip, reference), spec.t_top,
                                hi - pad, co);
  res.forward_steps = fwd.steps;
  res.backward_steps = bwd.steps;

  const SampledCurve ftrace(fwd.traces[0], fwd.step_t.front(), fwd.dt);
  const SampledCurve btrace(bwd.traces[0], bwd.step_t.front(), bwd.dt);
  const QuinticBridge bridge(lo, hi, ftrace.value(lo), ftrace.prime(lo), ftrace.double_prime(lo), btrace.value(hi),
                             btrace.prime(hi), btrace.double_prime(hi));

  SidewaysProblem pb;
  const int K = std::max(3, static_cast<int>(std::ceil((spec.t_top - spec.t_bottom) / opts.sideways_dt)));
  pb.t.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    pb.t[static_cast<std::size_t>(k)] = k == K ? spec.t_top : spec.t_bottom + (spec.t_top - spec.t_bottom) * k / K;
  }
  for (double t : pb.t) {
    if (t <= lo) {
      pb.left.push_back(t == spec.t_bottom ? spec.bottom.front() : ftrace.value(t));
    } else if (t >= hi) {
      pb.left.push_back(t == spec.t_top ? spec.top.front() : btrace.value(t));
    } else {
      pb.left.push_back(bridge.value(t));
    }
  }
  const SampledCurve bottom(spec.bottom, 0.0, L / nx), top(spec.top, 0.0, L / nx);
  pb.bottom = [bottom](double x) { return bottom.value(x); };
  pb.top = [top](double x) { return top.value(x); };
  pb.length = L;
  pb.nx = nx;
  pb.cfl = opts.cfl;
  res.solution = sideways_solve(sys, pb);
  res.bottom_error = row_distance(res.solution.row(0), spec.bottom);
  res.top_error = row_distance(res.solution.row(K), spec.top);
  if (std::max(res.bottom_error, res.top_error) > 10.0 * opts.match_tol) {
    std::ostringstream os;
    os << "endpoint mismatch " << res.bottom_error << " (bottom), " << res.top_error << " (top) exceeds "
       << 10.0 * opts.match_tol;
    throw Error(ErrorKind::MatchFailure, os.str());
  }
  return res;
}

}  // namespace sonicctl
