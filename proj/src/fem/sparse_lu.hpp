#pragma once

#include "ceilopt/fem/helmholtz.hpp"

namespace ceilopt::fem {

/// Complex sparse LU of a square matrix. Backed by UMFPACK when available,
/// otherwise by Eigen::SparseLU.
class SparseLu {
 public:
  explicit SparseLu(const ComplexSparse& matrix);
  ~SparseLu();
  SparseLu(const SparseLu&) = delete;
  SparseLu& operator=(const SparseLu&) = delete;

  // `matrix` must be the matrix that was factorized.
  ComplexVector solve(const ComplexSparse& matrix, const ComplexVector& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ceilopt::fem
