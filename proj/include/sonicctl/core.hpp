#pragma once

// System definitions for 1-D quasilinear systems u_t + A(u) u_x = 0 and the
// spectral machinery built on them: sorted eigenvalues, oriented unit right
// eigenvectors, dual left covectors (l_i . r_j = delta_ij), eigenvalue
// gradients, eigenvector Jacobians and Lie brackets of eigenvector fields.

#include "sonicctl/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sonicctl {

/// Per-coordinate closed intervals.
struct DomainBox {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& u) const {
    if (u.size() != lo.size()) return false;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (!std::isfinite(u(k)) || u(k) < lo(k) || u(k) > hi(k)) return false;
    }
    return true;
  }

  bool strictly_contains(const Vec& u) const {
    if (u.size() != lo.size()) return false;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (!std::isfinite(u(k)) || u(k) <= lo(k) || u(k) >= hi(k)) return false;
    }
    return true;
  }

  /// Point of the box at fractional coordinates `frac` in [0,1]^n.
  Vec lerp(const Vec& frac) const { return lo + (hi - lo).cwiseProduct(frac); }
};

/// Closed-form spectral data, as published for a model. Right eigenvectors are
/// in the model's own normalization (not unit length); the library derives the
/// unit-length convention from them.
struct AnalyticSpectral {
  Vec lambdas;                      ///< ascending
  Mat right;                        ///< column i is r_i
  Mat grad_lambda;                  ///< row i is grad lambda_i
  std::vector<Mat> right_jacobian;  ///< entry i is D r_i; empty when not provided
};

using MatrixField = std::function<Mat(const Vec&)>;
using SpectralField = std::function<AnalyticSpectral(const Vec&)>;

/// Selects the closed-form route (when the system has one) or forces the
/// numerical eigen-solver and finite differences.
enum class SpectralPath { automatic, numeric };

/// Eigenvector scaling: unit length (library convention) or the closed-form
/// vectors exactly as the model publishes them.
enum class Normalization { unit, paper };

struct DiffOptions {
  SpectralPath path = SpectralPath::automatic;
  double step = 0.0;  ///< 0 selects h = max(1e-6, 1e-6 |u_k|)
  Normalization norm = Normalization::unit;
};

/// Spectral decomposition at one state.
///
/// `right` holds unit right eigenvectors as columns, oriented continuously
/// around the equilibrium; `left` holds the dual covectors as rows. When the
/// system carries closed-form data, `paper_right` keeps those vectors verbatim
/// and `paper_scale(i)` is the signed factor with paper_right.col(i) =
/// paper_scale(i) * right.col(i).
struct Spectral {
  Vec at;
  Vec lambdas;
  Mat right;
  Mat left;
  Mat paper_right;
  Vec paper_scale;

  bool has_paper() const { return paper_right.size() > 0; }
};

namespace detail {

inline constexpr double kMinSeparation = 1e-8;

inline void check_separation(const Vec& lambdas, const Vec& u) {
  for (Eigen::Index i = 1; i < lambdas.size(); ++i) {
    if (!(lambdas(i) - lambdas(i - 1) >= kMinSeparation)) {
      std::ostringstream os;
      os << "eigenvalues " << lambdas(i - 1) << " and " << lambdas(i)
         << " are not separated by " << kMinSeparation << " at u = " << u.transpose();
      throw Error(ErrorKind::ComplexOrRepeatedEigenvalues, os.str());
    }
  }
}

struct RawSpectral {
  Vec lambdas;
  Mat unit_right;
  Mat paper_right;  // empty if numeric
};

inline RawSpectral numeric_raw(const Mat& a, const Vec& u) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd dyn = a;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(dyn, true);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::ComplexOrRepeatedEigenvalues, "eigen-solver failed");
  }
  const auto& ev = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  double scale = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(ev(i)));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ev(i).imag()) > 1e-10 * scale) {
      std::ostringstream os;
      os << "complex eigenvalue " << ev(i) << " at u = " << u.transpose();
      throw Error(ErrorKind::ComplexOrRepeatedEigenvalues, os.str());
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return ev(x).real() < ev(y).real(); });
  RawSpectral raw;
  raw.lambdas.resize(n);
  raw.unit_right.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    raw.lambdas(i) = ev(src).real();
    Vec r = vecs.col(src).real();
    raw.unit_right.col(i) = r / r.norm();
  }
  check_separation(raw.lambdas, u);
  return raw;
}

}  // namespace detail

/// A quasilinear hyperbolic system with a distinguished sonic family m whose
/// speed vanishes at the equilibrium u_star. Immutable after construction.
class SystemDef {
 public:
  SystemDef(std::string name, int sonic_family, Vec u_star, DomainBox domain, MatrixField a,
            SpectralField analytic = {})
      : name_(std::move(name)),
        m_(sonic_family),
        u_star_(std::move(u_star)),
        domain_(std::move(domain)),
        a_(std::move(a)),
        analytic_(std::move(analytic)) {
    const int n = static_cast<int>(u_star_.size());
    if (n < 1 || n > kMaxDim) throw Error(ErrorKind::InvalidParams, "unsupported dimension");
    if (m_ < 1 || m_ > n) throw Error(ErrorKind::InvalidParams, "sonic family out of range");
    if (domain_.dim() != n) throw Error(ErrorKind::InvalidParams, "domain dimension mismatch");
    for (int k = 0; k < n; ++k) {
      if (!(domain_.lo(k) < domain_.hi(k))) {
        throw Error(ErrorKind::InvalidParams, "empty domain box");
      }
    }
    if (!domain_.strictly_contains(u_star_)) {
      throw Error(ErrorKind::InvalidParams, "equilibrium is not interior to the domain box");
    }
    const auto raw = raw_spectral(u_star_);
    reference_.resize(n, n);
    for (int i = 0; i < n; ++i) {
      Vec r = raw.unit_right.col(i);
      Eigen::Index big = 0;
      r.cwiseAbs().maxCoeff(&big);
      if (r(big) < 0) r = -r;
      reference_.col(i) = r;
    }
    const double scale = std::max(1.0, raw.lambdas.cwiseAbs().maxCoeff());
    if (std::abs(raw.lambdas(m_ - 1)) > 1e-9 * scale) {
      std::ostringstream os;
      os << "lambda_" << m_ << "(u*) = " << raw.lambdas(m_ - 1) << " is not zero";
      throw Error(ErrorKind::EquilibriumNotSonic, os.str());
    }
  }

  const std::string& name() const { return name_; }
  int n() const { return static_cast<int>(u_star_.size()); }
  int sonic_family() const { return m_; }
  const Vec& u_star() const { return u_star_; }
  const DomainBox& domain() const { return domain_; }
  bool has_analytic() const { return static_cast<bool>(analytic_); }

  Mat A(const Vec& u) const { return a_(u); }

  /// Oriented unit eigenvectors at u_star (column i for family i+1).
  const Mat& reference_right() const { return reference_; }

  AnalyticSpectral analytic(const Vec& u) const {
    if (!analytic_) throw Error(ErrorKind::Unsupported, "system has no closed-form spectral data");
    return analytic_(u);
  }

  /// Families other than the sonic one, ascending (1-based).
  std::vector<int> control_families() const {
    std::vector<int> out;
    for (int j = 1; j <= n(); ++j) {
      if (j != m_) out.push_back(j);
    }
    return out;
  }

  /// Eigenvalues only; uses the closed form when present.
  Vec lambdas(const Vec& u, SpectralPath path = SpectralPath::automatic) const {
    if (analytic_ && path == SpectralPath::automatic) return analytic_(u).lambdas;
    return raw_spectral(u, path).lambdas;
  }

  detail::RawSpectral raw_spectral(const Vec& u,
                                   SpectralPath path = SpectralPath::automatic) const {
    if (analytic_ && path == SpectralPath::automatic) {
      const AnalyticSpectral an = analytic_(u);
      detail::check_separation(an.lambdas, u);
      detail::RawSpectral raw;
      raw.lambdas = an.lambdas;
      raw.paper_right = an.right;
      raw.unit_right = an.right;
      for (Eigen::Index i = 0; i < an.right.cols(); ++i) {
        raw.unit_right.col(i) /= an.right.col(i).norm();
      }
      return raw;
    }
    return detail::numeric_raw(a_(u), u);
  }

 private:
  std::string name_;
  int m_;
  Vec u_star_;
  DomainBox domain_;
  MatrixField a_;
  SpectralField analytic_;
  Mat reference_;
};

inline void require_in_domain(const SystemDef& sys, const Vec& u) {
  if (!sys.domain().contains(u)) {
    std::ostringstream os;
    os << "state " << u.transpose() << " outside the domain of " << sys.name();
    throw Error(ErrorKind::OutOfDomain, os.str());
  }
}

inline void require_family(const SystemDef& sys, int j) {
  if (j < 1 || j > sys.n()) {
    throw Error(ErrorKind::InvalidParams, "family index " + std::to_string(j) + " out of range");
  }
}

/// Sorted eigenvalues with oriented unit right eigenvectors and dual left
/// covectors.
inline Spectral eigendecompose(const SystemDef& sys, const Vec& u,
                               SpectralPath path = SpectralPath::automatic) {
  require_in_domain(sys, u);
  const auto raw = sys.raw_spectral(u, path);
  const int n = sys.n();
  Spectral s;
  s.at = u;
  s.lambdas = raw.lambdas;
  s.right = raw.unit_right;
  for (int i = 0; i < n; ++i) {
    if (s.right.col(i).dot(sys.reference_right().col(i)) < 0) s.right.col(i) *= -1.0;
  }
  s.left = s.right.inverse();
  if (raw.paper_right.size() > 0) {
    s.paper_right = raw.paper_right;
    s.paper_scale.resize(n);
    for (int i = 0; i < n; ++i) {
      const double len = raw.paper_right.col(i).norm();
      s.paper_scale(i) = raw.paper_right.col(i).dot(s.right.col(i)) >= 0 ? len : -len;
    }
  }
  return s;
}

/// max_{i,j} |l_i r_j - delta_ij| together with the eigen-equation residuals.
struct SpectralResidual {
  double normalization = 0.0;
  double right_equation = 0.0;
  double left_equation = 0.0;
};

inline SpectralResidual spectral_residual(const SystemDef& sys, const Spectral& s) {
  const Mat a = sys.A(s.at);
  const int n = sys.n();
  SpectralResidual out;
  const Mat prod = s.left * s.right;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.normalization = std::max(out.normalization, std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)));
    }
    out.right_equation = std::max(
        out.right_equation, (a * s.right.col(i) - s.lambdas(i) * s.right.col(i)).cwiseAbs().maxCoeff());
    out.left_equation = std::max(
        out.left_equation, (s.left.row(i) * a - s.lambdas(i) * s.left.row(i)).cwiseAbs().maxCoeff());
  }
  return out;
}

inline double fd_step(const DiffOptions& opts, double coord) {
  return opts.step > 0 ? opts.step : std::max(1e-6, 1e-6 * std::abs(coord));
}

namespace detail {

template <class F>
Mat central_jacobian(const SystemDef& sys, const Vec& u, const DiffOptions& opts, F&& f) {
  const int n = sys.n();
  Mat jac(n, n);
  for (int k = 0; k < n; ++k) {
    const double h = fd_step(opts, u(k));
    Vec up = u, dn = u;
    up(k) += h;
    dn(k) -= h;
    if (!sys.domain().contains(up) || !sys.domain().contains(dn)) {
      std::ostringstream os;
      os << "finite-difference stencil at " << u.transpose() << " leaves the domain";
      throw Error(ErrorKind::OutOfDomain, os.str());
    }
    jac.col(k) = (f(up) - f(dn)) / (2.0 * h);
  }
  return jac;
}

}  // namespace detail

/// Right eigenvector of family j in the requested normalization.
inline Vec right_eigenvector(const SystemDef& sys, int j, const Vec& u,
                             SpectralPath path = SpectralPath::automatic,
                             Normalization norm = Normalization::unit) {
  require_family(sys, j);
  if (norm == Normalization::paper) {
    require_in_domain(sys, u);
    return sys.analytic(u).right.col(j - 1);
  }
  return eigendecompose(sys, u, path).right.col(j - 1);
}

/// Jacobian of u -> r_j(u). Exact when the closed form supplies D r_j,
/// otherwise central differences.
inline Mat eigvec_jacobian(const SystemDef& sys, int j, const Vec& u, const DiffOptions& opts = {}) {
  require_family(sys, j);
  require_in_domain(sys, u);
  if (opts.norm == Normalization::paper && !sys.has_analytic()) {
    throw Error(ErrorKind::Unsupported, "closed-form normalization needs closed-form spectral data");
  }
  if (sys.has_analytic() && opts.path == SpectralPath::automatic) {
    const AnalyticSpectral an = sys.analytic(u);
    if (!an.right_jacobian.empty()) {
      const Mat& jac = an.right_jacobian[static_cast<std::size_t>(j - 1)];
      if (opts.norm == Normalization::paper) return jac;
      const Vec r = an.right.col(j - 1);
      const double len = r.norm();
      const double sign = r.dot(sys.reference_right().col(j - 1)) >= 0 ? 1.0 : -1.0;
      const RowVec rt_j = r.transpose() * jac;
      return sign * (jac / len - r * rt_j / (len * len * len));
    }
  }
  return detail::central_jacobian(sys, u, opts, [&](const Vec& x) -> Vec {
    if (opts.norm == Normalization::paper) return sys.analytic(x).right.col(j - 1);
    return eigendecompose(sys, x, opts.path).right.col(j - 1);
  });
}

/// Gradient of lambda_i as a row covector.
inline RowVec grad_lambda(const SystemDef& sys, int i, const Vec& u, const DiffOptions& opts = {}) {
  require_family(sys, i);
  require_in_domain(sys, u);
  if (sys.has_analytic() && opts.path == SpectralPath::automatic) {
    return sys.analytic(u).grad_lambda.row(i - 1);
  }
  const int n = sys.n();
  RowVec g(n);
  for (int k = 0; k < n; ++k) {
    const double h = fd_step(opts, u(k));
    Vec up = u, dn = u;
    up(k) += h;
    dn(k) -= h;
    if (!sys.domain().contains(up) || !sys.domain().contains(dn)) {
      throw Error(ErrorKind::OutOfDomain, "finite-difference stencil leaves the domain");
    }
    g(k) = (sys.lambdas(up, opts.path)(i - 1) - sys.lambdas(dn, opts.path)(i - 1)) / (2.0 * h);
  }
  return g;
}

/// [r_j, r_k](u) = (D r_k) r_j - (D r_j) r_k. Both families must differ from
/// the sonic one.
inline Vec lie_bracket(const SystemDef& sys, int j, int k, const Vec& u, const DiffOptions& opts = {}) {
  require_family(sys, j);
  require_family(sys, k);
  if (j == sys.sonic_family() || k == sys.sonic_family()) {
    throw Error(ErrorKind::SonicFamilyForbidden,
                "Lie brackets are taken over the non-sonic families only");
  }
  const Vec rj = right_eigenvector(sys, j, u, opts.path, opts.norm);
  const Vec rk = right_eigenvector(sys, k, u, opts.path, opts.norm);
  return eigvec_jacobian(sys, k, u, opts) * rj - eigvec_jacobian(sys, j, u, opts) * rk;
}

inline double max_speed(const SystemDef& sys, const Vec& u) {
  return sys.lambdas(u).cwiseAbs().maxCoeff();
}

}  // namespace sonicctl
