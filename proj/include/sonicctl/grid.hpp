#pragma once

#include "sonicctl/core.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace sonicctl {

struct ResidualStats {
  double max = 0.0;
  double l2 = 0.0;  ///< root mean square over interior stencils
  long count = 0;
};

/// Samples of u on a tensor (t, x) grid, stored row-major by time.
struct GridSolution {
  int n = 0;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> data;
  std::string provenance;
  ResidualStats residual;

  GridSolution() = default;
  GridSolution(int dim, std::vector<double> times, std::vector<double> nodes, std::string tag)
      : n(dim), t(std::move(times)), x(std::move(nodes)), provenance(std::move(tag)) {
    data.assign(t.size() * x.size() * static_cast<std::size_t>(n), 0.0);
  }

  int nt() const { return static_cast<int>(t.size()); }
  int nx() const { return static_cast<int>(x.size()); }

  std::size_t offset(int it, int ix) const {
    return (static_cast<std::size_t>(it) * x.size() + static_cast<std::size_t>(ix)) * static_cast<std::size_t>(n);
  }

  Vec at(int it, int ix) const {
    Vec v(n);
    const std::size_t o = offset(it, ix);
    for (int k = 0; k < n; ++k) v(k) = data[o + static_cast<std::size_t>(k)];
    return v;
  }

  void set(int it, int ix, const Vec& v) {
    const std::size_t o = offset(it, ix);
    for (int k = 0; k < n; ++k) data[o + static_cast<std::size_t>(k)] = v(k);
  }

  std::vector<Vec> row(int it) const {
    std::vector<Vec> out;
    out.reserve(x.size());
    for (int ix = 0; ix < nx(); ++ix) out.push_back(at(it, ix));
    return out;
  }

  void push_row(double time, const std::vector<Vec>& values) {
    t.push_back(time);
    for (const auto& v : values) data.insert(data.end(), v.data(), v.data() + n);
  }

  /// sup over all samples of |u - ref|_inf.
  double deviation_from(const Vec& ref) const {
    double out = 0.0;
    for (int it = 0; it < nt(); ++it) {
      for (int ix = 0; ix < nx(); ++ix) out = std::max(out, (at(it, ix) - ref).cwiseAbs().maxCoeff());
    }
    return out;
  }
};

/// Max distance between two rows sampled on the same nodes.
inline double row_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    out = std::max(out, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return out;
}

/// Centered residual of u_t + A(u) u_x on the interior nodes.
inline ResidualStats residual(const SystemDef& sys, const GridSolution& sol) {
  ResidualStats st;
  double sum = 0.0;
  for (int it = 1; it + 1 < sol.nt(); ++it) {
    const double dt = sol.t[static_cast<std::size_t>(it) + 1] - sol.t[static_cast<std::size_t>(it) - 1];
    if (!(dt > 0)) continue;
    for (int ix = 1; ix + 1 < sol.nx(); ++ix) {
      const double dx = sol.x[static_cast<std::size_t>(ix) + 1] - sol.x[static_cast<std::size_t>(ix) - 1];
      const Vec u = sol.at(it, ix);
      const Vec ut = (sol.at(it + 1, ix) - sol.at(it - 1, ix)) / dt;
      const Vec ux = (sol.at(it, ix + 1) - sol.at(it, ix - 1)) / dx;
      const double r = (ut + sys.A(u) * ux).cwiseAbs().maxCoeff();
      st.max = std::max(st.max, r);
      sum += r * r;
      ++st.count;
    }
  }
  st.l2 = st.count > 0 ? std::sqrt(sum / static_cast<double>(st.count)) : 0.0;
  return st;
}

inline void write_csv(std::ostream& os, const GridSolution& sol) {
  os << "t,x";
  for (int k = 1; k <= sol.n; ++k) os << ",u" << k;
  os << '\n';
  char buf[64];
  for (int it = 0; it < sol.nt(); ++it) {
    for (int ix = 0; ix < sol.nx(); ++ix) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g", sol.t[static_cast<std::size_t>(it)],
                    sol.x[static_cast<std::size_t>(ix)]);
      os << buf;
      const std::size_t o = sol.offset(it, ix);
      for (int k = 0; k < sol.n; ++k) {
        std::snprintf(buf, sizeof buf, ",%.9g", sol.data[o + static_cast<std::size_t>(k)]);
        os << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace sonicctl
