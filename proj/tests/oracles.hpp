#pragma once

// Independent oracles shared by the unit tests and the acceptance binary:
// bundled model instances, low-discrepancy points, a cubic root finder and a
// finite-volume Saint-Venant solver.

#include "sonicctl/core.hpp"
#include "sonicctl/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace sonicctl::testing {

inline std::vector<Model> bundled_models() {
  const double inf = std::numeric_limits<double>::infinity();
  return {
      build_model(SaintVenant{1.0}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(SaintVenant{9.81}, Equilibrium::sonic_left, Anchor{2.0}),
      build_model(Isentropic{1.0, 1.4}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Isentropic{0.5, 2.0}, Equilibrium::sonic_left, Anchor{1.0}),
      build_model(Euler{}, Equilibrium::rest, Anchor{1.0, 0.0}),
      build_model(Euler{2.0, 1.5, 1.0, 1.4}, Equilibrium::rest, Anchor{0.7, 0.3}),
      build_model(Traffic{2.0, inf}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Traffic{2.0, inf}, Equilibrium::rest, Anchor{1.0}),
      build_model(Traffic{2.0, 4.0}, Equilibrium::sonic_right, Anchor{1.0}),
      build_model(Traffic{1.5, 3.0}, Equilibrium::rest, Anchor{1.0}),
  };
}

inline double radical_inverse(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

/// Halton points in the box, kept `margin` (relative) away from its faces.
inline std::vector<Vec> halton_points(const DomainBox& box, int count, double margin = 0.02) {
  static constexpr std::array<int, 6> primes{2, 3, 5, 7, 11, 13};
  std::vector<Vec> out;
  for (int i = 1; i <= count; ++i) {
    Vec f(box.dim());
    for (int k = 0; k < box.dim(); ++k) {
      f(k) = margin + (1.0 - 2.0 * margin) * radical_inverse(i, primes[static_cast<std::size_t>(k)]);
    }
    out.push_back(box.lerp(f));
  }
  return out;
}

/// Real roots of det(lambda I - a) for a 3x3 matrix with three real roots,
/// by bisection between the critical points of the cubic.
inline std::array<double, 3> char_poly_roots3(const Mat& a) {
  const double tr = a.trace();
  const double minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0) +
                        a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  auto p = [&](double l) { return ((l - tr) * l + minors) * l - det; };
  const double disc = std::sqrt(std::max(0.0, 4.0 * tr * tr - 12.0 * minors));
  const double c1 = (2.0 * tr - disc) / 6.0, c2 = (2.0 * tr + disc) / 6.0;
  const double big = 1.0 + std::abs(tr) + std::abs(minors) + std::abs(det);
  auto bisect = [&](double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((p(lo) < 0) == (p(mid) < 0)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  return {bisect(-big, c1), bisect(c1, c2), bisect(c2, big)};
}

/// Cell-centred finite-volume oracle for Saint-Venant in conservative form
/// (H, HV): minmod MUSCL reconstruction, Rusanov flux, SSP-RK2, transmissive
/// edges. Returns primitive (H, V) at the cell centres x_lo + (i + 1/2) dx.
struct FvResult {
  std::vector<double> x;
  std::vector<Vec> u;
};

template <class F>
FvResult sv_finite_volume(double g, double x_lo, double x_hi, int cells, F initial, double t_end, double cfl = 0.4) {
  const double dx = (x_hi - x_lo) / cells;
  std::vector<std::array<double, 2>> q(static_cast<std::size_t>(cells));
  FvResult out;
  for (int i = 0; i < cells; ++i) {
    const double xc = x_lo + (i + 0.5) * dx;
    out.x.push_back(xc);
    // cell average by 3-point Gauss
    std::array<double, 2> avg{0.0, 0.0};
    const double gp = 0.5 * dx * std::sqrt(0.6);
    const std::array<std::pair<double, double>, 3> pts{{{xc - gp, 5.0 / 18}, {xc, 8.0 / 18}, {xc + gp, 5.0 / 18}}};
    for (const auto& [xp, w] : pts) {
      const Vec u = initial(xp);
      avg[0] += w * u(0);
      avg[1] += w * u(0) * u(1);
    }
    q[static_cast<std::size_t>(i)] = avg;
  }
  auto minmod = [](double a, double b) { return a * b <= 0 ? 0.0 : (std::abs(a) < std::abs(b) ? a : b); };
  auto flux = [g](const std::array<double, 2>& c) {
    const double v = c[1] / c[0];
    return std::array<double, 2>{c[1], c[1] * v + 0.5 * g * c[0] * c[0]};
  };
  auto speed = [g](const std::array<double, 2>& c) { return std::abs(c[1] / c[0]) + std::sqrt(g * c[0]); };
  auto rhs = [&](const std::vector<std::array<double, 2>>& c) {
    const auto n = c.size();
    auto at = [&](long i) { return c[static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1))]; };
    std::vector<std::array<double, 2>> f(n + 1);
    for (long k = 0; k <= static_cast<long>(n); ++k) {
      std::array<double, 2> l{}, r{};
      for (int v = 0; v < 2; ++v) {
        const double sl = minmod(at(k - 1)[v] - at(k - 2)[v], at(k)[v] - at(k - 1)[v]);
        const double sr = minmod(at(k)[v] - at(k - 1)[v], at(k + 1)[v] - at(k)[v]);
        l[v] = at(k - 1)[v] + 0.5 * sl;
        r[v] = at(k)[v] - 0.5 * sr;
      }
      const auto fl = flux(l), fr = flux(r);
      const double a = std::max(speed(l), speed(r));
      for (int v = 0; v < 2; ++v) f[static_cast<std::size_t>(k)][v] = 0.5 * (fl[v] + fr[v]) - 0.5 * a * (r[v] - l[v]);
    }
    std::vector<std::array<double, 2>> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int v = 0; v < 2; ++v) d[i][v] = -(f[i + 1][v] - f[i][v]) / dx;
    }
    return d;
  };
  double t = 0.0;
  while (t < t_end) {
    double smax = 0.0;
    for (const auto& c : q) smax = std::max(smax, speed(c));
    const double dt = std::min(cfl * dx / smax, t_end - t);
    const auto k1 = rhs(q);
    auto q1 = q;
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (int v = 0; v < 2; ++v) q1[i][v] += dt * k1[i][v];
    }
    const auto k2 = rhs(q1);
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (int v = 0; v < 2; ++v) q[i][v] = 0.5 * (q[i][v] + q1[i][v] + dt * k2[i][v]);
    }
    t += dt;
  }
  for (const auto& c : q) out.u.push_back(make_vec({c[0], c[1] / c[0]}));
  return out;
}

}  // namespace sonicctl::testing
