#include "staralloc/hermitian.hpp"

#include <stdexcept>

namespace staralloc {

HermitianMap::HermitianMap(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("HermitianMap: dim must be >= 1");
  basis_.reserve(count());
  for (int i = 0; i < dim; ++i) basis_.push_back({{i, i, Cplx(1.0, 0.0)}});
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      basis_.push_back({{i, j, Cplx(1.0, 0.0)}, {j, i, Cplx(1.0, 0.0)}});
      basis_.push_back({{i, j, Cplx(0.0, 1.0)}, {j, i, Cplx(0.0, -1.0)}});
    }
}

CMat HermitianMap::matrix(const Eigen::Ref<const Vec>& p) const {
  if (p.size() != count()) throw std::invalid_argument("HermitianMap::matrix: size mismatch");
  CMat x = CMat::Zero(dim_, dim_);
  for (int k = 0; k < count(); ++k)
    for (const Entry& e : basis_[k]) x(e.r, e.c) += p[k] * e.coeff;
  return x;
}

Vec HermitianMap::params(const CMat& x) const {
  if (x.rows() != dim_ || x.cols() != dim_)
    throw std::invalid_argument("HermitianMap::params: size mismatch");
  Vec p(count());
  int k = 0;
  for (int i = 0; i < dim_; ++i) p[k++] = x(i, i).real();
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      p[k++] = x(i, j).real();
      p[k++] = x(i, j).imag();
    }
  return p;
}

Vec HermitianMap::trace_coeffs(const CMat& q) const {
  Vec c(count());
  int k = 0;
  for (int i = 0; i < dim_; ++i) c[k++] = q(i, i).real();
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      c[k++] = 2.0 * q(i, j).real();
      c[k++] = 2.0 * q(i, j).imag();
    }
  return c;
}

Vec HermitianMap::logdet_grad(const CMat& w) const { return -trace_coeffs(w); }

Mat HermitianMap::logdet_hess(const CMat& w) const {
  const int n = count();
  Mat h(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      Cplx acc(0.0, 0.0);
      for (const Entry& a : basis_[p])
        for (const Entry& b : basis_[q]) acc += a.coeff * b.coeff * w(a.c, b.r) * w(b.c, a.r);
      h(p, q) = acc.real();
      h(q, p) = h(p, q);
    }
  }
  return h;
}

}  // namespace staralloc
