#pragma once

#include "sonicctl/types.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace sonicctl {

/// Vector-valued Chebyshev interpolant on [a, b] through the N+1
/// Chebyshev-Lobatto points. Used to store rarefaction curves so that
/// repeated evaluation inside root finders is cheap and smooth.
class ChebyshevFit {
 public:
  ChebyshevFit() = default;

  /// `values[k]` is f at s_k = a + (1 - cos(pi k / N)) (b - a) / 2, i.e. in
  /// increasing order of s.
  ChebyshevFit(double a, double b, const std::vector<Vec>& values) : a_(a), b_(b) {
    const int N = static_cast<int>(values.size()) - 1;
    const Eigen::Index dim = values.front().size();
    coef_.assign(static_cast<std::size_t>(N + 1), Vec::Zero(dim));
    for (int j = 0; j <= N; ++j) {
      Vec c = Vec::Zero(dim);
      for (int k = 0; k <= N; ++k) {
        // node x_k = cos(pi k / N) sits at s index N - k
        const double w = (k == 0 || k == N) ? 0.5 : 1.0;
        c += w * std::cos(std::numbers::pi * j * k / N) * values[static_cast<std::size_t>(N - k)];
      }
      c *= 2.0 / N;
      if (j == 0 || j == N) c *= 0.5;
      coef_[static_cast<std::size_t>(j)] = c;
    }
    // derivative series, same convention (f' = sum d_j T_j)
    deriv_.assign(static_cast<std::size_t>(N + 1), Vec::Zero(dim));
    if (N >= 1) {
      std::vector<Vec> d(static_cast<std::size_t>(N + 2), Vec::Zero(dim));
      for (int j = N; j >= 1; --j) {
        d[static_cast<std::size_t>(j - 1)] =
            d[static_cast<std::size_t>(j + 1)] + 2.0 * j * coef_[static_cast<std::size_t>(j)];
      }
      d[0] *= 0.5;
      for (int j = 0; j <= N; ++j) deriv_[static_cast<std::size_t>(j)] = d[static_cast<std::size_t>(j)];
    }
  }

  static std::vector<double> nodes(double a, double b, int N) {
    std::vector<double> s(static_cast<std::size_t>(N + 1));
    for (int k = 0; k <= N; ++k) {
      s[static_cast<std::size_t>(k)] = a + (1.0 - std::cos(std::numbers::pi * k / N)) * (b - a) / 2.0;
    }
    s.back() = b;
    return s;
  }

  double lo() const { return a_; }
  double hi() const { return b_; }

  Vec value(double s) const { return clenshaw(coef_, to_unit(s)); }

  Vec derivative(double s) const { return clenshaw(deriv_, to_unit(s)) * (2.0 / (b_ - a_)); }

 private:
  double to_unit(double s) const { return (2.0 * s - a_ - b_) / (b_ - a_); }

  static Vec clenshaw(const std::vector<Vec>& c, double x) {
    const Eigen::Index dim = c.front().size();
    Vec b1 = Vec::Zero(dim), b2 = Vec::Zero(dim);
    for (std::size_t j = c.size() - 1; j >= 1; --j) {
      Vec b0 = 2.0 * x * b1 - b2 + c[j];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + c[0];
  }

  double a_ = 0.0;
  double b_ = 1.0;
  std::vector<Vec> coef_;
  std::vector<Vec> deriv_;
};

}  // namespace sonicctl
