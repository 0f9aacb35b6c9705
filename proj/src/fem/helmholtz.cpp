#include "ceilopt/fem/helmholtz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ceilopt/errors.hpp"
#include "ceilopt/fem/basis.hpp"
#include "sparse_lu.hpp"

namespace ceilopt::fem {

double speed_of_sound() { return std::sqrt(kAirBulkModulus / kAirDensity); }

MaterialValue material_interpolation(double indicator) {
  if (!(indicator >= 0.0 && indicator <= 1.0)) {
    std::ostringstream msg;
    msg << "indicator " << indicator << " outside [0, 1]";
    throw std::domain_error(msg.str());
  }
  return {1.0 + indicator * (kDensityRatio - 1.0), 1.0 + indicator * (kBulkRatio - 1.0)};
}

MaterialFields MaterialFields::air(const VoxelGrid& grid) {
  return {std::vector<double>(grid.voxel_count(), 1.0),
          std::vector<double>(grid.voxel_count(), 1.0)};
}

MaterialFields MaterialFields::from_design(const VoxelGrid& grid, std::span<const double> design) {
  if (design.size() != grid.design_count()) {
    throw UsageError("design field size does not match the ceiling");
  }
  MaterialFields out = air(grid);
  for (std::size_t d = 0; d < design.size(); ++d) {
    const VoxelIndex v = grid.design_voxel(d);
    const MaterialValue mat = material_interpolation(design[d]);
    const std::size_t idx = grid.voxel_index(v.x, v.y);
    out.inv_density[idx] = mat.inv_density;
    out.inv_bulk[idx] = mat.inv_bulk;
  }
  return out;
}

MaterialFields MaterialFields::from_indicator(const VoxelGrid& grid,
                                              std::span<const double> indicator) {
  if (indicator.size() != grid.voxel_count()) {
    throw UsageError("indicator field size does not match the grid");
  }
  MaterialFields out = air(grid);
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    const MaterialValue mat = material_interpolation(indicator[i]);
    out.inv_density[i] = mat.inv_density;
    out.inv_bulk[i] = mat.inv_bulk;
  }
  return out;
}

double normalized_frequency(double hz) {
  if (!(hz > 0.0)) throw std::domain_error("frequency must be positive");
  return 2.0 * std::numbers::pi * hz / speed_of_sound();
}

double sound_pressure_level(double mean_squared_pressure, double reference_pressure) {
  if (!(mean_squared_pressure > 0.0)) {
    throw std::domain_error("sound pressure level needs a positive mean squared pressure");
  }
  if (!(reference_pressure > 0.0)) throw std::domain_error("reference pressure must be positive");
  return 10.0 * std::log10(mean_squared_pressure / (reference_pressure * reference_pressure));
}

std::vector<NaturalFrequency> natural_frequencies(double a, double b, int n_max, int m_max) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("cavity dimensions must be positive");
  std::vector<NaturalFrequency> out;
  const double c = speed_of_sound();
  for (int n = 0; n <= n_max; ++n) {
    for (int m = 0; m <= m_max; ++m) {
      if (n == 0 && m == 0) continue;
      const double kx = n / a;
      const double ky = m / b;
      out.push_back({n, m, 0.5 * c * std::sqrt(kx * kx + ky * ky)});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& l, const auto& r) { return l.hz < r.hz; });
  return out;
}

double relative_residual(const ComplexSystem& system, const ComplexVector& x,
                         const ComplexVector& rhs) {
  const double rhs_norm = rhs.norm();
  const double res = (system.matrix * x - rhs).norm();
  return rhs_norm > 0.0 ? res / rhs_norm : res;
}

ComplexVector solve(ComplexSystem& system, const ComplexVector& rhs) {
  if (rhs.size() != system.matrix.rows()) throw UsageError("right-hand side has the wrong size");
  if (rhs.squaredNorm() == 0.0) return ComplexVector::Zero(rhs.size());
  if (!system.factorization) system.factorization = std::make_shared<SparseLu>(system.matrix);

  constexpr double kTolerance = 1e-10;
  ComplexVector x = system.factorization->solve(system.matrix, rhs);
  double residual = relative_residual(system, x, rhs);
  // A few steps of iterative refinement for badly scaled systems.
  for (int step = 0; step < 3 && residual > kTolerance; ++step) {
    const ComplexVector r = rhs - system.matrix * x;
    x += system.factorization->solve(system.matrix, r);
    residual = relative_residual(system, x, rhs);
  }
  if (!(residual <= kTolerance)) {
    std::ostringstream msg;
    msg << "linear solve did not reach residual 1e-10 (got " << residual << ")";
    throw NumericalError(msg.str());
  }
  return x;
}

ComplexVector solve_forward(ComplexSystem& system) { return solve(system, system.load); }

HelmholtzModel::HelmholtzModel(const VoxelGrid& grid, Discretization disc)
    : grid_(grid),
      map_(grid, disc),
      reference_(preintegrate(disc.degree, disc.subvoxels, map_.element_width(),
                              map_.element_height())) {
  const std::size_t n = map_.dof_count();
  const int modes = map_.modes_per_element();

  std::vector<Eigen::Triplet<Complex, long>> triplets;
  triplets.reserve(map_.element_count() * modes * modes);
  for (std::size_t e = 0; e < map_.element_count(); ++e) {
    const auto& dofs = map_.dofs(e);
    for (int b = 0; b < modes; ++b) {
      for (int a = 0; a < modes; ++a) {
        triplets.emplace_back(static_cast<long>(dofs[a]), static_cast<long>(dofs[b]), Complex(1.0));
      }
    }
  }
  pattern_.resize(static_cast<long>(n), static_cast<long>(n));
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  // Position of every element entry in the compressed value array.
  scatter_.resize(map_.element_count() * modes * modes);
  const long* outer = pattern_.outerIndexPtr();
  const long* inner = pattern_.innerIndexPtr();
  for (std::size_t e = 0; e < map_.element_count(); ++e) {
    const auto& dofs = map_.dofs(e);
    for (int b = 0; b < modes; ++b) {
      const long col = static_cast<long>(dofs[b]);
      for (int a = 0; a < modes; ++a) {
        const long row = static_cast<long>(dofs[a]);
        const long* begin = inner + outer[col];
        const long* end = inner + outer[col + 1];
        const long* it = std::lower_bound(begin, end, row);
        scatter_[(e * modes + b) * modes + a] = it - inner;
      }
    }
  }

  // Suppression region: unweighted mass of every target subvoxel.
  const int nv = map_.subvoxels();
  for (int ey = 0; ey < map_.elements_y(); ++ey) {
    for (int ex = 0; ex < map_.elements_x(); ++ex) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(modes, modes);
      bool any = false;
      for (int sy = 0; sy < nv; ++sy) {
        for (int sx = 0; sx < nv; ++sx) {
          const VoxelIndex v = map_.voxel({ex, ey, sx, sy});
          if (!grid_.in_target(v.x, v.y)) continue;
          block += reference_.mass[map_.subvoxel_index(sx, sy)];
          any = true;
        }
      }
      if (any) target_.push_back({map_.element_index(ex, ey), std::move(block)});
    }
  }
  if (target_.empty()) throw ConfigError("suppression region is empty on this discretization");
}

ComplexSystem HelmholtzModel::assemble(const MaterialFields& material) const {
  const ProblemSetup& s = grid_.setup();
  return assemble(material, normalized_frequency(s.frequency), s.damping, s.source_amplitude);
}

ComplexSystem HelmholtzModel::assemble(const MaterialFields& material, double omega,
                                       double damping, double source_amplitude) const {
  if (material.inv_density.size() != grid_.voxel_count() ||
      material.inv_bulk.size() != grid_.voxel_count()) {
    throw UsageError("material fields do not match the voxel grid");
  }
  if (damping < 0.0) throw ConfigError("damping must be non-negative");

  ComplexSystem system;
  system.omega = omega;
  system.damping = damping;
  system.matrix = pattern_;
  Complex* values = system.matrix.valuePtr();
  std::fill(values, values + system.matrix.nonZeros(), Complex(0.0));

  const Complex coefficient = system.mass_coefficient();
  const int modes = map_.modes_per_element();
  const int nv = map_.subvoxels();
  const Eigen::MatrixXd total_k = reference_.total_stiffness();
  const Eigen::MatrixXd total_m = reference_.total_mass();
  Eigen::MatrixXd ke(modes, modes);
  Eigen::MatrixXd me(modes, modes);

  for (int ey = 0; ey < map_.elements_y(); ++ey) {
    for (int ex = 0; ex < map_.elements_x(); ++ex) {
      const std::size_t e = map_.element_index(ex, ey);
      const VoxelIndex first = map_.voxel({ex, ey, 0, 0});
      const double rho0 = material.inv_density[grid_.voxel_index(first.x, first.y)];
      const double kap0 = material.inv_bulk[grid_.voxel_index(first.x, first.y)];
      bool uniform = true;
      for (int sy = 0; sy < nv && uniform; ++sy) {
        for (int sx = 0; sx < nv; ++sx) {
          const VoxelIndex v = map_.voxel({ex, ey, sx, sy});
          const std::size_t idx = grid_.voxel_index(v.x, v.y);
          if (material.inv_density[idx] != rho0 || material.inv_bulk[idx] != kap0) {
            uniform = false;
            break;
          }
        }
      }
      if (uniform) {
        ke = rho0 * total_k;
        me = kap0 * total_m;
      } else {
        ke.setZero();
        me.setZero();
        for (int sy = 0; sy < nv; ++sy) {
          for (int sx = 0; sx < nv; ++sx) {
            const VoxelIndex v = map_.voxel({ex, ey, sx, sy});
            const std::size_t idx = grid_.voxel_index(v.x, v.y);
            const int s = map_.subvoxel_index(sx, sy);
            ke += material.inv_density[idx] * reference_.stiffness[s];
            me += material.inv_bulk[idx] * reference_.mass[s];
          }
        }
      }
      const long* where = scatter_.data() + e * modes * modes;
      for (int b = 0; b < modes; ++b) {
        for (int a = 0; a < modes; ++a) {
          values[where[b * modes + a]] += Complex(ke(a, b)) - coefficient * me(a, b);
        }
      }
    }
  }

  system.load = load_vector(source_amplitude);
  return system;
}

ComplexVector HelmholtzModel::load_vector(double amplitude) const {
  ComplexVector f = ComplexVector::Zero(static_cast<long>(dof_count()));
  const auto src = grid_.source_position();
  const double hx = map_.element_width();
  const double hy = map_.element_height();
  const int ex = std::clamp(static_cast<int>(std::floor(src[0] / hx)), 0, map_.elements_x() - 1);
  const int ey = std::clamp(static_cast<int>(std::floor(src[1] / hy)), 0, map_.elements_y() - 1);
  const double xi = 2.0 * (src[0] - ex * hx) / hx - 1.0;
  const double eta = 2.0 * (src[1] - ey * hy) / hy - 1.0;
  const IntegratedLegendre basis(map_.degree());
  const auto nx = basis.values(xi);
  const auto ny = basis.values(eta);
  const auto& dofs = map_.dofs(map_.element_index(ex, ey));
  const int n1 = map_.degree() + 1;
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n1; ++i) {
      const double shape = nx[i] * ny[j];
      if (shape != 0.0) f[static_cast<long>(dofs[i + n1 * j])] += amplitude * shape;
    }
  }
  return f;
}

ComplexVector HelmholtzModel::gather(const ComplexVector& global, std::size_t element) const {
  const auto& dofs = map_.dofs(element);
  ComplexVector local(static_cast<long>(dofs.size()));
  for (std::size_t a = 0; a < dofs.size(); ++a) local[static_cast<long>(a)] = global[static_cast<long>(dofs[a])];
  return local;
}

double HelmholtzModel::cost(const ComplexVector& pressure) const {
  if (pressure.size() != static_cast<long>(dof_count())) {
    throw UsageError("pressure vector does not match the discretization");
  }
  double sum = 0.0;
  for (const TargetBlock& t : target_) {
    const ComplexVector pe = gather(pressure, t.element);
    sum += (pe.adjoint() * (t.mass * pe))(0).real();
  }
  return sum / grid_.target_area();
}

Complex HelmholtzModel::evaluate(const ComplexVector& pressure, double x, double y) const {
  const double hx = map_.element_width();
  const double hy = map_.element_height();
  const int ex = std::clamp(static_cast<int>(std::floor(x / hx)), 0, map_.elements_x() - 1);
  const int ey = std::clamp(static_cast<int>(std::floor(y / hy)), 0, map_.elements_y() - 1);
  const double xi = 2.0 * (x - ex * hx) / hx - 1.0;
  const double eta = 2.0 * (y - ey * hy) / hy - 1.0;
  const IntegratedLegendre basis(map_.degree());
  const auto nx = basis.values(xi);
  const auto ny = basis.values(eta);
  const auto& dofs = map_.dofs(map_.element_index(ex, ey));
  const int n1 = map_.degree() + 1;
  Complex value(0.0);
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n1; ++i) value += nx[i] * ny[j] * pressure[static_cast<long>(dofs[i + n1 * j])];
  }
  return value;
}

std::vector<double> HelmholtzModel::voxel_pressure_squared(const ComplexVector& pressure) const {
  std::vector<double> out(grid_.voxel_count());
  for (int y = 0; y < grid_.ny(); ++y) {
    for (int x = 0; x < grid_.nx(); ++x) {
      const auto c = grid_.voxel_center(x, y);
      out[grid_.voxel_index(x, y)] = std::norm(evaluate(pressure, c[0], c[1]));
    }
  }
  return out;
}

}  // namespace ceilopt::fem
