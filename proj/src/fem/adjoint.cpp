#include "ceilopt/fem/adjoint.hpp"

#include "ceilopt/errors.hpp"

namespace ceilopt::fem {

ComplexVector adjoint_rhs(const HelmholtzModel& model, const ComplexVector& pressure) {
  if (pressure.size() != static_cast<long>(model.dof_count())) {
    throw UsageError("pressure vector does not match the discretization");
  }
  ComplexVector r = ComplexVector::Zero(pressure.size());
  const double scale = -2.0 / model.grid().target_area();
  for (const TargetBlock& t : model.target_blocks()) {
    const ComplexVector pe = model.gather(pressure, t.element).conjugate();
    const ComplexVector re = scale * (t.mass * pe);
    const auto& dofs = model.elements().dofs(t.element);
    for (std::size_t a = 0; a < dofs.size(); ++a) r[static_cast<long>(dofs[a])] += re[static_cast<long>(a)];
  }
  return r;
}

ComplexVector solve_adjoint(ComplexSystem& system, const ComplexVector& rhs) {
  return solve(system, rhs);
}

std::vector<double> sensitivities(const HelmholtzModel& model, const ComplexSystem& system,
                                  const ComplexVector& pressure, const ComplexVector& adjoint) {
  const VoxelGrid& grid = model.grid();
  const ElementMap& map = model.elements();
  const PreintegratedElement& ref = model.reference();
  if (pressure.size() != static_cast<long>(model.dof_count()) ||
      adjoint.size() != pressure.size()) {
    throw UsageError("state vectors do not match the discretization");
  }
  // dS/dzeta_v = (rho1/rho2 - 1) k_v - (w^2 + i w eta)(kappa1/kappa2 - 1) m_v;
  // C has no explicit zeta dependence.
  const Complex mass_coeff = system.mass_coefficient() * (kBulkRatio - 1.0);
  const double stiff_coeff = kDensityRatio - 1.0;

  std::vector<double> out(grid.design_count(), 0.0);
  const int nv = map.subvoxels();
  const int first_row = grid.first_design_row();
  const int ey0 = first_row / nv;
  for (int ey = ey0; ey < map.elements_y(); ++ey) {
    for (int ex = 0; ex < map.elements_x(); ++ex) {
      const std::size_t e = map.element_index(ex, ey);
      const ComplexVector pe = model.gather(pressure, e);
      const ComplexVector le = model.gather(adjoint, e);
      for (int sy = 0; sy < nv; ++sy) {
        for (int sx = 0; sx < nv; ++sx) {
          const VoxelIndex v = map.voxel({ex, ey, sx, sy});
          if (v.y < first_row) continue;
          const int s = map.subvoxel_index(sx, sy);
          const Complex kp = le.transpose() * (ref.stiffness[s] * pe);
          const Complex mp = le.transpose() * (ref.mass[s] * pe);
          out[grid.design_index(v.x, v.y)] = (stiff_coeff * kp - mass_coeff * mp).real();
        }
      }
    }
  }
  return out;
}

CostGradient cost_and_gradient(const HelmholtzModel& model, const std::vector<double>& design) {
  ComplexSystem system = model.assemble(MaterialFields::from_design(model.grid(), design));
  CostGradient out;
  out.pressure = solve_forward(system);
  out.cost = model.cost(out.pressure);
  const ComplexVector lambda = solve_adjoint(system, adjoint_rhs(model, out.pressure));
  out.gradient = sensitivities(model, system, out.pressure, lambda);
  return out;
}

double design_cost(const HelmholtzModel& model, const std::vector<double>& design) {
  ComplexSystem system = model.assemble(MaterialFields::from_design(model.grid(), design));
  return model.cost(solve_forward(system));
}

}  // namespace ceilopt::fem
