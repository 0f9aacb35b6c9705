#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "ceilopt/fem/preintegration.hpp"
#include "ceilopt/geometry.hpp"

namespace ceilopt::fem {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexSparse = Eigen::SparseMatrix<Complex, Eigen::ColMajor, long>;

// Air (1) and aluminium (2).
inline constexpr double kAirDensity = 1.204;
inline constexpr double kSolidDensity = 2643.0;
inline constexpr double kAirBulkModulus = 1.419e5;
inline constexpr double kSolidBulkModulus = 6.87e10;
// Standard 20 uPa reference sound pressure.
inline constexpr double kReferencePressure = 2e-5;  // Pa
inline constexpr double kDensityRatio = kAirDensity / kSolidDensity;
inline constexpr double kBulkRatio = kAirBulkModulus / kSolidBulkModulus;

double speed_of_sound();

struct MaterialValue {
  double inv_density;  // normalized 1/rho
  double inv_bulk;     // normalized 1/kappa
};

// Linear interpolation between air (0) and solid (1); throws outside [0,1].
MaterialValue material_interpolation(double indicator);

/// Per-voxel normalized inverse density and bulk modulus.
struct MaterialFields {
  std::vector<double> inv_density;
  std::vector<double> inv_bulk;

  static MaterialFields air(const VoxelGrid& grid);
  // Ceiling voxels take the given indicator (design layout), the rest is air.
  static MaterialFields from_design(const VoxelGrid& grid, std::span<const double> design);
  // Indicator given for every voxel (grid layout).
  static MaterialFields from_indicator(const VoxelGrid& grid, std::span<const double> indicator);
};

// omega / c_air for a frequency in Hz.
double normalized_frequency(double hz);

// 10 log10(C / p0^2); throws for C <= 0.
double sound_pressure_level(double mean_squared_pressure,
                            double reference_pressure = kReferencePressure);

struct NaturalFrequency {
  int n = 0;
  int m = 0;
  double hz = 0.0;
};

// Rigid-wall rectangular cavity modes f_nm = c/2 sqrt((n/a)^2 + (m/b)^2),
// (0,0) excluded, sorted ascending.
std::vector<NaturalFrequency> natural_frequencies(double a, double b, int n_max, int m_max);

class SparseLu;

/// Assembled S = K - (i w eta + w^2) M with its load vector. The LU
/// factorization is created by the first solve and reused afterwards
/// (S is complex symmetric, so it also serves the adjoint).
struct ComplexSystem {
  ComplexSparse matrix;
  ComplexVector load;
  double omega = 0.0;
  double damping = 0.0;
  std::shared_ptr<SparseLu> factorization;

  bool undamped() const { return damping == 0.0; }
  Complex mass_coefficient() const { return Complex(omega * omega, omega * damping); }
};

/// Solves with the cached factorization (creating it on first use).
/// Every returned solution satisfies |S x - b| <= 1e-10 |b|.
ComplexVector solve(ComplexSystem& system, const ComplexVector& rhs);
ComplexVector solve_forward(ComplexSystem& system);
double relative_residual(const ComplexSystem& system, const ComplexVector& x,
                         const ComplexVector& rhs);

/// Mass contribution of the suppression region inside one element.
struct TargetBlock {
  std::size_t element = 0;
  Eigen::MatrixXd mass;
};

/// Forward Helmholtz model on one (grid, discretization) pair: the
/// preintegrated reference cell, the global sparsity pattern with its
/// element scatter map, and the suppression-region quadrature.
class HelmholtzModel {
 public:
  HelmholtzModel(const VoxelGrid& grid, Discretization disc);

  const VoxelGrid& grid() const { return grid_; }
  const ElementMap& elements() const { return map_; }
  const PreintegratedElement& reference() const { return reference_; }
  std::size_t dof_count() const { return map_.dof_count(); }

  ComplexSystem assemble(const MaterialFields& material, double omega, double damping,
                         double source_amplitude) const;
  ComplexSystem assemble(const MaterialFields& material) const;  // setup values

  // Point load s N_k(x_source).
  ComplexVector load_vector(double amplitude) const;

  // Mean squared pressure over the suppression region.
  double cost(const ComplexVector& pressure) const;
  const std::vector<TargetBlock>& target_blocks() const { return target_; }

  ComplexVector gather(const ComplexVector& global, std::size_t element) const;

  Complex evaluate(const ComplexVector& pressure, double x, double y) const;
  // |p|^2 at every voxel center (grid layout).
  std::vector<double> voxel_pressure_squared(const ComplexVector& pressure) const;

 private:
  VoxelGrid grid_;
  ElementMap map_;
  PreintegratedElement reference_;
  ComplexSparse pattern_;
  std::vector<long> scatter_;  // element-major, modes^2 entries each
  std::vector<TargetBlock> target_;
};

}  // namespace ceilopt::fem
