#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ceilopt::fem {

/// Stiffness and mass contributions of every subvoxel of one reference
/// finite cell of size hx x hy. Blocks are indexed by the local subvoxel
/// index s = sx + n_v * sy and by local modes m = i + (q+1) * j.
struct PreintegratedElement {
  int degree = 0;
  int subvoxels = 0;
  double hx = 0.0;
  double hy = 0.0;
  int quadrature_points = 0;  // per direction per subvoxel
  std::vector<Eigen::MatrixXd> stiffness;
  std::vector<Eigen::MatrixXd> mass;

  int modes() const { return (degree + 1) * (degree + 1); }
  int subvoxel_count() const { return subvoxels * subvoxels; }
  Eigen::MatrixXd total_stiffness() const;
  Eigen::MatrixXd total_mass() const;
};

// Integrates grad(phi_i).grad(phi_j) and phi_i phi_j exactly over each
// subvoxel with (q+1)-point Gauss rules.
PreintegratedElement preintegrate(int degree, int subvoxels, double hx, double hy);

}  // namespace ceilopt::fem
