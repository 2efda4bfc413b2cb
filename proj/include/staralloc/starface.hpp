#ifndef STARALLOC_STARFACE_HPP
#define STARALLOC_STARFACE_HPP

#include <string>
#include <utility>
#include <vector>

#include "staralloc/types.hpp"

namespace staralloc {

enum class Side { T, R };

// Energy-splitting surface coefficients. Stored as (beta, theta) per element
// so the per-element coupling beta_t + beta_r = 1 is structural; the complex
// vectors v_n[m] = sqrt(beta_n[m]) * exp(j theta_n[m]) are derived on demand.
//
// Phase convention: the combined channel amplitude on side n is
// sum_m v_n[m] * q[m] (no conjugation), so theta[m] = -arg(q[m]) is the
// coherent choice.
struct StarCoefficients {
  Vec beta_t, beta_r;    // amplitude-squared splits in [0, 1]
  Vec theta_t, theta_r;  // phases in [0, 2pi)

  int elements() const { return static_cast<int>(beta_t.size()); }
  CVec side_vector(Side n) const;

  const Vec& beta(Side n) const { return n == Side::T ? beta_t : beta_r; }
  const Vec& theta(Side n) const { return n == Side::T ? theta_t : theta_r; }

  // Uniform half/half split with zero phases.
  static StarCoefficients neutral(int num_elements);
};

// STAR surface vs. the conventional-RIS baseline: two co-located M/2-element
// surfaces, the first half reflect-only (beta_r = 1) and the second half
// transmit-only (beta_t = 1).
struct SurfaceMode {
  enum class Kind { Star, ConventionalPair };
  Kind kind = Kind::Star;

  static SurfaceMode star() { return {Kind::Star}; }
  static SurfaceMode conventional_pair() { return {Kind::ConventionalPair}; }

  bool is_star() const { return kind == Kind::Star; }
  // Whether element m carries free amplitude/phase on the given side.
  bool active(Side n, int m, int num_elements) const;
  // Elements with a nonzero coefficient on the given side.
  std::vector<int> active_elements(Side n, int num_elements) const;
};

// |sum_m v_n[m] q[m]|^2 under the stored coefficients.
double effective_gain(const StarCoefficients& coeffs, const CVec& q, Side side);

// Phase-aligned upper bound for a fixed amplitude profile:
// phases[m] = -arg(q[m]), gain = (sum_m sqrt(beta[m]) |q[m]|)^2.
std::pair<double, Vec> max_cascaded_gain(const CVec& q, const Vec& beta);

// Clamps beta to [0, 1], renormalizes each element pair to sum exactly 1
// (proportional split; a 0/0 pair becomes 0.5/0.5) and wraps phases into
// [0, 2pi). NaN input raises std::domain_error.
StarCoefficients project_feasible(const Vec& beta_t, const Vec& beta_r, const Vec& theta_t,
                                  const Vec& theta_r);

// Forces the mode's fixed amplitudes (no-op for the STAR mode).
StarCoefficients apply_mode(const StarCoefficients& coeffs, const SurfaceMode& mode);

// Mode-consistent coefficients worth starting a solver from: beta = 0.5 per
// element for STAR (the mask values for the conventional pair), phases aligned
// to the given per-side reference cascades.
StarCoefficients aligned_coefficients(const CVec& q_ref_t, const CVec& q_ref_r,
                                      const SurfaceMode& mode);

// CSV rows m, beta_t, beta_r, theta_t, theta_r.
std::string coefficients_csv(const StarCoefficients& coeffs);

}  // namespace staralloc

#endif
