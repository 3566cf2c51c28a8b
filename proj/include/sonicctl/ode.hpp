#pragma once

#include "sonicctl/core.hpp"

#include <boost/numeric/odeint.hpp>

#include <functional>
#include <sstream>
#include <vector>

namespace sonicctl {

using VectorField = std::function<Vec(const Vec&)>;

namespace detail {

struct LeftBox {
  double s;
  Vec z;
};

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline Vec from_std(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace detail

/// Integrates dz/ds = f(z) from s0 to s1 (either direction) with the
/// Dormand-Prince 5(4) pair. Every stage is checked against `box`; leaving it
/// raises LeftDomain with the parameter of the offending evaluation.
inline Vec integrate(const VectorField& f, const Vec& z0, double s0, double s1, double tol,
                     const DomainBox& box) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  if (s0 == s1) return z0;
  if (!box.contains(z0)) {
    std::ostringstream os;
    os << "initial state " << z0.transpose() << " is outside the domain";
    throw Error(ErrorKind::LeftDomain, os.str());
  }
  State x = detail::to_std(z0);
  auto rhs = [&](const State& z, State& dz, double s) {
    const Vec zv = detail::from_std(z);
    if (!zv.allFinite() || !box.contains(zv)) throw detail::LeftBox{s, zv};
    const Vec v = f(zv);
    dz.assign(v.data(), v.data() + v.size());
  };
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  const double span = s1 - s0;
  const double dt0 = std::copysign(std::min(1e-3, std::abs(span)), span);
  try {
    odeint::integrate_adaptive(stepper, rhs, x, s0, s1, dt0);
  } catch (const detail::LeftBox& e) {
    std::ostringstream os;
    os << "trajectory left the domain near s = " << e.s << " at " << e.z.transpose();
    throw Error(ErrorKind::LeftDomain, os.str());
  } catch (const odeint::step_adjustment_error& e) {
    throw Error(ErrorKind::BlowUp, std::string("step size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw Error(ErrorKind::BlowUp, std::string("integration stalled: ") + e.what());
  }
  return detail::from_std(x);
}

}  // namespace sonicctl
