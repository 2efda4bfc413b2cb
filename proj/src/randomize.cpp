#include "staralloc/randomize.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace staralloc {

void PsdPair::validate(double psd_tol, double diag_tol) const {
  const int m = elements();
  if (v_r.rows() != m || v_t.cols() != m || v_r.cols() != m)
    throw std::invalid_argument("PsdPair: dimension mismatch");
  if ((v_t - v_t.adjoint()).cwiseAbs().maxCoeff() > 1e-8 ||
      (v_r - v_r.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("PsdPair: matrices must be Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> est(v_t, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<CMat> esr(v_r, Eigen::EigenvaluesOnly);
  if (est.eigenvalues().minCoeff() < -psd_tol || esr.eigenvalues().minCoeff() < -psd_tol)
    throw std::invalid_argument("PsdPair: matrix is not PSD within tolerance");
  for (int j = 0; j < m; ++j)
    if (std::abs(v_t(j, j).real() + v_r(j, j).real() - 1.0) > diag_tol)
      throw std::invalid_argument("PsdPair: diagonal coupling violated");
}

namespace {

// Factor A with A A^H = clip(V); Gaussian draws A * xi have covariance V.
CMat covariance_factor(const CMat& v) {
  Eigen::SelfAdjointEigenSolver<CMat> es(v);
  const int m = static_cast<int>(v.rows());
  CMat a = es.eigenvectors();
  for (int j = 0; j < m; ++j) {
    const double lam = std::max(es.eigenvalues()[j], 0.0);
    a.col(j) *= std::sqrt(lam);
  }
  return a;
}

CVec dominant_eigvec_scaled(const CMat& v) {
  Eigen::SelfAdjointEigenSolver<CMat> es(v);
  const int last = static_cast<int>(v.rows()) - 1;
  return std::sqrt(std::max(es.eigenvalues()[last], 0.0)) * es.eigenvectors().col(last);
}

StarCoefficients candidate_from_vectors(const CVec& vt, const CVec& vr, const SurfaceMode& mode) {
  const int m = static_cast<int>(vt.size());
  Vec bt(m), br(m), tt(m), tr(m);
  for (int j = 0; j < m; ++j) {
    bt[j] = std::norm(vt[j]);
    br[j] = std::norm(vr[j]);
    tt[j] = std::arg(vt[j]);
    tr[j] = std::arg(vr[j]);
  }
  return apply_mode(project_feasible(bt, br, tt, tr), mode);
}

}  // namespace

RandomizeResult gaussian_randomize(const PsdPair& vpair,
                                   const std::function<double(const StarCoefficients&)>& evaluate,
                                   int num_samples, RngStream& rng, const SurfaceMode& mode) {
  if (num_samples < 1) throw std::domain_error("gaussian_randomize: num_samples must be >= 1");
  vpair.validate();

  const int m = vpair.elements();
  RandomizeResult best;
  best.score = -std::numeric_limits<double>::infinity();
  best.candidate = 0;
  best.coeffs = candidate_from_vectors(dominant_eigvec_scaled(vpair.v_t),
                                       dominant_eigvec_scaled(vpair.v_r), mode);
  const double eig_score = evaluate(best.coeffs);
  if (std::isfinite(eig_score)) best.score = eig_score;

  const CMat at = covariance_factor(vpair.v_t);
  const CMat ar = covariance_factor(vpair.v_r);
  CVec xi_t(m), xi_r(m);
  for (int s = 1; s <= num_samples; ++s) {
    for (int j = 0; j < m; ++j) xi_t[j] = rng.complex_gaussian();
    for (int j = 0; j < m; ++j) xi_r[j] = rng.complex_gaussian();
    const StarCoefficients cand = candidate_from_vectors(at * xi_t, ar * xi_r, mode);
    const double score = evaluate(cand);
    if (score > best.score) {
      best.score = score;
      best.candidate = s;
      best.coeffs = cand;
    }
  }
  return best;
}

}  // namespace staralloc
