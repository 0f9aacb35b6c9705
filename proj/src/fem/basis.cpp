#include "ceilopt/fem/basis.hpp"

#include <cmath>
#include <numbers>

#include "ceilopt/errors.hpp"

namespace ceilopt::fem {

double legendre(int n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * x * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return cur;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("quadrature rule needs at least one point");
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre(n, x);
      const double pm1 = legendre(n - 1, x);
      dp = n * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double p = legendre(n, x);
    const double pm1 = legendre(n - 1, x);
    dp = n * (x * p - pm1) / (x * x - 1.0);
    rule.points[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

IntegratedLegendre::IntegratedLegendre(int degree) : degree_(degree) {
  if (degree < 1) throw ConfigError("basis degree must be at least 1");
}

std::vector<double> IntegratedLegendre::values(double xi) const {
  std::vector<double> out(size());
  out[0] = 0.5 * (1.0 - xi);
  out[1] = 0.5 * (1.0 + xi);
  for (int i = 2; i <= degree_; ++i) {
    out[i] = (legendre(i, xi) - legendre(i - 2, xi)) / std::sqrt(2.0 * (2.0 * i - 1.0));
  }
  return out;
}

std::vector<double> IntegratedLegendre::derivatives(double xi) const {
  std::vector<double> out(size());
  out[0] = -0.5;
  out[1] = 0.5;
  for (int i = 2; i <= degree_; ++i) {
    out[i] = std::sqrt((2.0 * i - 1.0) / 2.0) * legendre(i - 1, xi);
  }
  return out;
}

}  // namespace ceilopt::fem
