#pragma once

#include <vector>

#include "copmix/common.hpp"

namespace copmix {

enum class CorrStructure { Exchangeable, Unstructured };

// Correlation matrix with a cached Cholesky factor. Validates unit diagonal,
// symmetry, |rho| bounds and positive definiteness at construction.
class CorrelationMatrix {
 public:
  static CorrelationMatrix identity(int dim);
  // rho in (-1/(dim-1), 1)
  static CorrelationMatrix exchangeable(int dim, double rho);
  // upper triangle entries in row-major order: (0,1),(0,2),...,(dim-2,dim-1)
  static CorrelationMatrix unstructured(int dim,
                                        const std::vector<double>& offdiag);

  int dim() const { return static_cast<int>(r_.rows()); }
  CorrStructure structure() const { return structure_; }
  double rho() const;  // Exchangeable only
  const Matrix& matrix() const { return r_; }
  const Matrix& cholesky() const { return chol_; }  // lower triangular
  double log_det() const { return log_det_; }
  std::vector<double> upper_offdiag() const;
  int free_param_count() const;

  // Correlation matrix restricted to a coordinate subset (order preserved).
  CorrelationMatrix submatrix(const std::vector<int>& coords) const;

 private:
  CorrelationMatrix(Matrix r, CorrStructure s);
  Matrix r_;
  Matrix chol_;
  double log_det_ = 0.0;
  CorrStructure structure_;
};

// log of the MVN(0, R) density at z.
double mvn_logdensity(const Vector& z, const CorrelationMatrix& R);

// P(lo < Z <= hi) for Z ~ N(0, R), dim <= 4. Entries of lo/hi may be
// +-infinity. Deterministic: a fixed-panel Gauss-Legendre scheme on the
// separation-of-variables form (conditional univariate quadrature at p = 2,
// an endpoint-graded tensor rule over the Cholesky-transformed unit cube at
// p = 3, 4 with narrowest-interval-first variable ordering). Absolute
// accuracy ~1e-8 at p <= 3 and ~1e-6 at p = 4 for |rho| <= 0.95.
double mvn_rectangle(const Vector& lo, const Vector& hi,
                     const CorrelationMatrix& R);

}  // namespace copmix
