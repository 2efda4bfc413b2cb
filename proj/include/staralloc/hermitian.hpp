#ifndef STARALLOC_HERMITIAN_HPP
#define STARALLOC_HERMITIAN_HPP

#include <vector>

#include "staralloc/types.hpp"

namespace staralloc {

// Real parametrization of a Hermitian dim x dim matrix: dim diagonal entries
// followed by (re, im) pairs for the strict upper triangle in row-major order,
// dim^2 parameters in total. X(p) = sum_p x_p E_p with the E_p listed below.
class HermitianMap {
 public:
  explicit HermitianMap(int dim);

  int dim() const { return dim_; }
  int count() const { return dim_ * dim_; }

  // Parameter index helpers.
  int diag_index(int i) const { return i; }

  CMat matrix(const Eigen::Ref<const Vec>& p) const;
  Vec params(const CMat& x) const;

  // c such that Tr(Q X(p)) = c . p for Hermitian Q.
  Vec trace_coeffs(const CMat& q) const;

  // Gradient of -log det X at X(p), given W = X(p)^{-1}: entries -Tr(W E_p).
  Vec logdet_grad(const CMat& w) const;

  // Hessian of -log det X: H_pq = Tr(W E_p W E_q).
  Mat logdet_hess(const CMat& w) const;

 private:
  struct Entry {
    int r, c;
    Cplx coeff;
  };
  // Basis matrix of each parameter as 1 or 2 sparse entries.
  std::vector<std::vector<Entry>> basis_;
  int dim_;
};

}  // namespace staralloc

#endif
