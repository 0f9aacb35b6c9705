#include "sparse_lu.hpp"

#include <sstream>

#include "ceilopt/errors.hpp"

#ifdef CEILOPT_WITH_UMFPACK
#include <umfpack.h>
#else
#include <Eigen/SparseLU>
#endif

namespace ceilopt::fem {

#ifdef CEILOPT_WITH_UMFPACK

namespace {

const double* interleaved(const Complex* p) { return reinterpret_cast<const double*>(p); }
double* interleaved(Complex* p) { return reinterpret_cast<double*>(p); }

}  // namespace

struct SparseLu::Impl {
  long n = 0;
  void* symbolic = nullptr;
  void* numeric = nullptr;
  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];

  ~Impl() {
    if (numeric) umfpack_zl_free_numeric(&numeric);
    if (symbolic) umfpack_zl_free_symbolic(&symbolic);
  }

  [[noreturn]] void fail(const char* stage, long status) {
    std::ostringstream msg;
    msg << "sparse LU " << stage << " failed (UMFPACK status " << status << ")";
    if (numeric) {
      // Report the smallest pivot of U, mapped back to its column.
      long lnz = 0, unz = 0, nrow = 0, ncol = 0, nz_udiag = 0;
      umfpack_zl_get_lunz(&lnz, &unz, &nrow, &ncol, &nz_udiag, numeric);
      std::vector<double> diag(2 * n);
      std::vector<long> q(n);
      long do_recip = 0;
      if (umfpack_zl_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                                 nullptr, nullptr, q.data(), diag.data(), nullptr, &do_recip,
                                 nullptr, numeric) == UMFPACK_OK) {
        long worst = 0;
        double worst_abs = std::abs(Complex(diag[0], diag[1]));
        for (long i = 1; i < n; ++i) {
          const double a = std::abs(Complex(diag[2 * i], diag[2 * i + 1]));
          if (a < worst_abs) {
            worst_abs = a;
            worst = i;
          }
        }
        msg << "; smallest pivot |u| = " << worst_abs << " at column " << q[worst];
      }
      msg << "; rcond = " << info[UMFPACK_RCOND];
    }
    throw NumericalError(msg.str());
  }
};

SparseLu::SparseLu(const ComplexSparse& matrix) : impl_(std::make_unique<Impl>()) {
  if (!matrix.isCompressed()) throw UsageError("sparse LU needs a compressed matrix");
  impl_->n = matrix.cols();
  umfpack_zl_defaults(impl_->control);
  const long n = matrix.rows();
  const long* ap = matrix.outerIndexPtr();
  const long* ai = matrix.innerIndexPtr();
  const double* ax = interleaved(matrix.valuePtr());
  long status = umfpack_zl_symbolic(n, n, ap, ai, ax, nullptr, &impl_->symbolic, impl_->control,
                                    impl_->info);
  if (status != UMFPACK_OK) impl_->fail("symbolic analysis", status);
  status = umfpack_zl_numeric(ap, ai, ax, nullptr, impl_->symbolic, &impl_->numeric,
                              impl_->control, impl_->info);
  if (status != UMFPACK_OK) impl_->fail("factorization", status);
}

SparseLu::~SparseLu() = default;

ComplexVector SparseLu::solve(const ComplexSparse& m, const ComplexVector& rhs) const {
  ComplexVector x(rhs.size());
  double info[UMFPACK_INFO];
  const long status = umfpack_zl_solve(UMFPACK_A, m.outerIndexPtr(), m.innerIndexPtr(),
                                       interleaved(m.valuePtr()), nullptr, interleaved(x.data()),
                                       nullptr, interleaved(rhs.data()), nullptr, impl_->numeric,
                                       impl_->control, info);
  if (status != UMFPACK_OK) {
    throw NumericalError("sparse LU solve failed (UMFPACK status " + std::to_string(status) + ")");
  }
  return x;
}

#else

struct SparseLu::Impl {
  Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<long>> lu;
};

SparseLu::SparseLu(const ComplexSparse& matrix) : impl_(std::make_unique<Impl>()) {
  impl_->lu.compute(matrix);
  if (impl_->lu.info() != Eigen::Success) {
    throw NumericalError("sparse LU factorization failed: " + impl_->lu.lastErrorMessage());
  }
}

SparseLu::~SparseLu() = default;

ComplexVector SparseLu::solve(const ComplexSparse&, const ComplexVector& rhs) const {
  return impl_->lu.solve(rhs);
}

#endif

}  // namespace ceilopt::fem
