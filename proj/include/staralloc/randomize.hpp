#ifndef STARALLOC_RANDOMIZE_HPP
#define STARALLOC_RANDOMIZE_HPP

#include <functional>

#include "staralloc/rng.hpp"
#include "staralloc/starface.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// Relaxed coefficient matrices: Hermitian, PSD up to -1e-9 eigenvalue slack,
// Diag(V_t) + Diag(V_r) = 1 within 1e-8 per entry.
struct PsdPair {
  CMat v_t, v_r;

  int elements() const { return static_cast<int>(v_t.rows()); }
  void validate(double psd_tol = 1e-9, double diag_tol = 1e-8) const;
};

struct RandomizeResult {
  StarCoefficients coeffs;
  double score;     // -inf when no candidate passed the evaluator's hard filter
  int candidate;    // winning draw index; 0 is the dominant-eigenvector pair
};

// Rank-one recovery: draws num_samples complex Gaussian pairs with covariance
// (V_t, V_r), projects each through project_feasible (amplitudes renormalized
// so beta_t + beta_r = 1, phases kept), and keeps the best-scoring candidate.
// The dominant-eigenvector pair is always injected as candidate 0, so the
// result never scores below the plain eigenvector rounding. Deterministic
// given the stream. The evaluator may return -inf to reject a candidate.
RandomizeResult gaussian_randomize(const PsdPair& vpair,
                                   const std::function<double(const StarCoefficients&)>& evaluate,
                                   int num_samples, RngStream& rng,
                                   const SurfaceMode& mode = SurfaceMode::star());

inline constexpr int kDefaultRandomizationSamples = 500;

}  // namespace staralloc

#endif
