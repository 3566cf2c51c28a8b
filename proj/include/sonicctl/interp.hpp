#pragma once

#include "sonicctl/types.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/quintic_hermite.hpp>

#include <algorithm>
#include <vector>

namespace sonicctl {

/// Cubic B-spline through uniformly spaced vector samples, one spline per
/// component.
class SampledCurve {
 public:
  SampledCurve() = default;

  SampledCurve(const std::vector<Vec>& samples, double x0, double h) : x0_(x0), h_(h) {
    n_ = static_cast<int>(samples.front().size());
    for (int k = 0; k < n_; ++k) {
      std::vector<double> comp(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) comp[i] = samples[i](k);
      splines_.emplace_back(comp.data(), comp.size(), x0, h);
    }
    x1_ = x0 + h * static_cast<double>(samples.size() - 1);
  }

  double lo() const { return x0_; }
  double hi() const { return x1_; }

  Vec value(double x) const {
    Vec v(n_);
    x = std::clamp(x, x0_, x1_);
    for (int k = 0; k < n_; ++k) v(k) = splines_[static_cast<std::size_t>(k)](x);
    return v;
  }

  Vec prime(double x) const {
    Vec v(n_);
    x = std::clamp(x, x0_, x1_);
    for (int k = 0; k < n_; ++k) v(k) = splines_[static_cast<std::size_t>(k)].prime(x);
    return v;
  }

  Vec double_prime(double x) const {
    Vec v(n_);
    x = std::clamp(x, x0_, x1_);
    for (int k = 0; k < n_; ++k) v(k) = splines_[static_cast<std::size_t>(k)].double_prime(x);
    return v;
  }

 private:
  int n_ = 0;
  double x0_ = 0.0;
  double x1_ = 0.0;
  double h_ = 1.0;
  std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>> splines_;
};

/// Quintic Hermite bridge on [a, b] matching value, slope and curvature at both
/// ends.
class QuinticBridge {
 public:
  QuinticBridge(double a, double b, const Vec& ya, const Vec& da, const Vec& sa, const Vec& yb, const Vec& db,
                const Vec& sb)
      : a_(a), b_(b), n_(static_cast<int>(ya.size())) {
    using boost::math::interpolators::quintic_hermite;
    for (int k = 0; k < n_; ++k) {
      parts_.emplace_back(std::vector<double>{a, b}, std::vector<double>{ya(k), yb(k)},
                          std::vector<double>{da(k), db(k)}, std::vector<double>{sa(k), sb(k)});
    }
  }

  Vec value(double t) const {
    Vec v(n_);
    t = std::clamp(t, a_, b_);
    for (int k = 0; k < n_; ++k) v(k) = parts_[static_cast<std::size_t>(k)](t);
    return v;
  }

 private:
  double a_, b_;
  int n_;
  std::vector<boost::math::interpolators::quintic_hermite<std::vector<double>>> parts_;
};

/// Piecewise linear interpolation of a time series with nondecreasing times.
class LinearSeries {
 public:
  LinearSeries() = default;
  LinearSeries(std::vector<double> t, std::vector<Vec> v) : t_(std::move(t)), v_(std::move(v)) {}

  Vec operator()(double t) const {
    if (t <= t_.front()) return v_.front();
    if (t >= t_.back()) return v_.back();
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto i = static_cast<std::size_t>(it - t_.begin());
    const double t0 = t_[i - 1], t1 = t_[i];
    if (t1 == t0) return v_[i];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * v_[i - 1] + w * v_[i];
  }

  const std::vector<double>& times() const { return t_; }
  const std::vector<Vec>& values() const { return v_; }

 private:
  std::vector<double> t_;
  std::vector<Vec> v_;
};

}  // namespace sonicctl
