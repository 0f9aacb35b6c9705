#include "ceilopt/fem/preintegration.hpp"

#include "ceilopt/errors.hpp"
#include "ceilopt/fem/basis.hpp"

namespace ceilopt::fem {

namespace {

struct Interval1d {
  Eigen::MatrixXd stiffness;  // int N_i' N_j' dx
  Eigen::MatrixXd mass;       // int N_i N_j dx
};

// 1-D matrices on sub-interval `s` of `n` equal pieces of an element of
// physical length h.
Interval1d integrate_interval(const IntegratedLegendre& basis, const QuadratureRule& rule, int s,
                              int n, double h) {
  const int size = basis.size();
  Interval1d out{Eigen::MatrixXd::Zero(size, size), Eigen::MatrixXd::Zero(size, size)};
  const double lo = -1.0 + 2.0 * s / n;
  const double hi = -1.0 + 2.0 * (s + 1) / n;
  const double half = 0.5 * (hi - lo);
  for (std::size_t g = 0; g < rule.points.size(); ++g) {
    const double xi = lo + half * (rule.points[g] + 1.0);
    const double w = rule.weights[g] * half;
    const auto v = basis.values(xi);
    const auto d = basis.derivatives(xi);
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        out.mass(i, j) += w * v[i] * v[j] * (h / 2.0);
        out.stiffness(i, j) += w * d[i] * d[j] * (2.0 / h);
      }
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd PreintegratedElement::total_stiffness() const {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(modes(), modes());
  for (const auto& k : stiffness) sum += k;
  return sum;
}

Eigen::MatrixXd PreintegratedElement::total_mass() const {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(modes(), modes());
  for (const auto& m : mass) sum += m;
  return sum;
}

PreintegratedElement preintegrate(int degree, int subvoxels, double hx, double hy) {
  if (degree < 1 || subvoxels < 1) throw ConfigError("preintegration needs q >= 1 and n_v >= 1");
  if (!(hx > 0.0) || !(hy > 0.0)) throw ConfigError("element size must be positive");

  const IntegratedLegendre basis(degree);
  const QuadratureRule rule = gauss_legendre(degree + 1);
  std::vector<Interval1d> along_x;
  std::vector<Interval1d> along_y;
  for (int s = 0; s < subvoxels; ++s) {
    along_x.push_back(integrate_interval(basis, rule, s, subvoxels, hx));
    along_y.push_back(integrate_interval(basis, rule, s, subvoxels, hy));
  }

  PreintegratedElement out;
  out.degree = degree;
  out.subvoxels = subvoxels;
  out.hx = hx;
  out.hy = hy;
  out.quadrature_points = degree + 1;
  const int n1 = degree + 1;
  const int modes = n1 * n1;
  for (int sy = 0; sy < subvoxels; ++sy) {
    for (int sx = 0; sx < subvoxels; ++sx) {
      const Interval1d& ix = along_x[sx];
      const Interval1d& iy = along_y[sy];
      Eigen::MatrixXd k(modes, modes);
      Eigen::MatrixXd m(modes, modes);
      // Tensor-product modes: grad.grad separates into two Kronecker terms.
      for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n1; ++i) {
          const int a = i + n1 * j;
          for (int l = 0; l < n1; ++l) {
            for (int kk = 0; kk < n1; ++kk) {
              const int b = kk + n1 * l;
              k(a, b) = ix.stiffness(i, kk) * iy.mass(j, l) + ix.mass(i, kk) * iy.stiffness(j, l);
              m(a, b) = ix.mass(i, kk) * iy.mass(j, l);
            }
          }
        }
      }
      out.stiffness.push_back(std::move(k));
      out.mass.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace ceilopt::fem
