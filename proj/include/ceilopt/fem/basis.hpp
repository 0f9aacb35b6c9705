#pragma once

#include <vector>

namespace ceilopt::fem {

struct QuadratureRule {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n);

// Legendre polynomial P_n(x).
double legendre(int n, double x);

/// 1-D hierarchical basis on [-1, 1]: two linear nodal hats followed by
/// integrated Legendre bubbles
///   phi_i = (P_i - P_{i-2}) / sqrt(2 (2i - 1)),   i >= 2,
/// which vanish at both end points.
class IntegratedLegendre {
 public:
  explicit IntegratedLegendre(int degree);

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }

  std::vector<double> values(double xi) const;
  std::vector<double> derivatives(double xi) const;

 private:
  int degree_;
};

}  // namespace ceilopt::fem
