#pragma once

#include <vector>

#include "ceilopt/fem/helmholtz.hpp"

namespace ceilopt::fem {

// r = -(2/|Omega_s|) M_s conj(p), the negated cost gradient w.r.t. p.
ComplexVector adjoint_rhs(const HelmholtzModel& model, const ComplexVector& pressure);

// S^T lambda = r, solved with the forward factorization since S = S^T.
ComplexVector solve_adjoint(ComplexSystem& system, const ComplexVector& rhs);

// dC/dzeta for every design voxel (design layout), with zeta the physical
// indicator that drives the material.
std::vector<double> sensitivities(const HelmholtzModel& model, const ComplexSystem& system,
                                  const ComplexVector& pressure, const ComplexVector& adjoint);

struct CostGradient {
  double cost = 0.0;
  std::vector<double> gradient;  // design layout
  ComplexVector pressure;
};

// Forward solve, cost, adjoint solve and sensitivities for a physical design.
CostGradient cost_and_gradient(const HelmholtzModel& model, const std::vector<double>& design);
double design_cost(const HelmholtzModel& model, const std::vector<double>& design);

}  // namespace ceilopt::fem
