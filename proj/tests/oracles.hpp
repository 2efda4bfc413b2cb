// Test-only brute-force oracles: grid searches and exhaustive enumerations
// kept deliberately independent of the solver implementations they check.
#ifndef STARALLOC_TESTS_ORACLES_HPP
#define STARALLOC_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "staralloc/types.hpp"

namespace staralloc::oracles {

inline double rate_log2(double snr) { return std::log2(1.0 + snr); }

// Best sum log2(1 + p g / noise) over a simplex grid for three slots.
inline double waterfill_grid_best(const Vec& gains, double p_max, double noise, int steps) {
  double best = -1.0;
  for (int i = 0; i <= steps; ++i) {
    const double p1 = p_max * i / steps;
    for (int j = 0; i + j <= steps; ++j) {
      const double p2 = p_max * j / steps;
      const double p3 = p_max - p1 - p2;
      const double value = rate_log2(p1 * gains[0] / noise) + rate_log2(p2 * gains[1] / noise) +
                           rate_log2(p3 * gains[2] / noise);
      best = std::max(best, value);
    }
  }
  return best;
}

// Joint power/time grid for one subchannel pair: p2 = p_max - p1 (the budget
// binds at the optimum), omega2 = 1 - omega1. Returns the best feasible
// objective, -inf if the grid finds nothing feasible.
inline double power_time_grid_best(double g1, double g2, double p_max, double gamma, int steps,
                                   double p_lo = 0.0, double p_hi = -1.0, double w_lo = 0.0,
                                   double w_hi = 1.0, double* arg_p = nullptr,
                                   double* arg_w = nullptr) {
  if (p_hi < 0.0) p_hi = p_max;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double p1 = p_lo + (p_hi - p_lo) * i / steps;
    const double p2 = p_max - p1;
    if (p2 < 0.0) break;
    for (int j = 0; j <= steps; ++j) {
      const double w1 = w_lo + (w_hi - w_lo) * j / steps;
      if (w1 <= 0.0 || w1 >= 1.0) continue;
      const double w2 = 1.0 - w1;
      const double r1 = w1 * rate_log2(p1 * g1 / w1);
      const double r2 = w2 * rate_log2(p2 * g2 / w2);
      if (r1 < gamma || r2 < gamma) continue;
      if (r1 + r2 > best) {
        best = r1 + r2;
        if (arg_p) *arg_p = p1;
        if (arg_w) *arg_w = w1;
      }
    }
  }
  return best;
}

// Coarse grid followed by a local refinement around the coarse argmax; the
// effective resolution is steps^2 points per axis.
inline double power_time_grid_refined(double g1, double g2, double p_max, double gamma,
                                      int steps) {
  double ap = 0.0, aw = 0.5;
  const double coarse = power_time_grid_best(g1, g2, p_max, gamma, steps, 0.0, p_max, 0.0, 1.0,
                                             &ap, &aw);
  if (!std::isfinite(coarse)) return coarse;
  const double dp = 2.0 * p_max / steps;
  const double dw = 2.0 / steps;
  const double fine = power_time_grid_best(
      g1, g2, p_max, gamma, steps, std::max(0.0, ap - dp), std::min(p_max, ap + dp),
      std::max(0.0, aw - dw), std::min(1.0, aw + dw));
  return std::max(coarse, fine);
}

// Single-subchannel NOMA power grid on the original problem: user a decoded
// second (no interference), b first. Normalized noise = 1.
inline double noma_power_grid_best(double ga, double gb, double p_max, double gamma, int steps) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double pa = p_max * i / steps;
    const double pb = p_max - pa;
    const double ra = rate_log2(pa * ga);
    const double rb = std::log2(1.0 + pb * gb / (pa * gb + 1.0));
    if (ra < gamma || rb < gamma) continue;
    best = std::max(best, ra + rb);
  }
  return best;
}

// GP form of the same problem over an (r1, r2) grid at the given resolution;
// constraints follow the posynomial budget with normalized noises m.
inline double gp_grid_best(double m1, double m2, double p_max, double gamma, double step) {
  const double denom = p_max + m2;
  const double rmin = std::exp2(gamma);
  double best = -std::numeric_limits<double>::infinity();
  const double r1_hi = 1.0 + p_max / m1;
  const double r2_hi = 1.0 + p_max / m2;
  for (double r1 = rmin; r1 <= r1_hi; r1 += step) {
    for (double r2 = rmin; r2 <= r2_hi; r2 += step) {
      const double budget = (m1 * r1 * r2 + (m2 - m1) * r2) / denom;
      if (budget > 1.0) break;  // increasing in r2
      best = std::max(best, std::log2(r1) + std::log2(r2));
    }
  }
  return best;
}

// Hand-rolled gain |sum_m sqrt(beta_m) e^{j theta_m} q_m|^2.
inline double gain_of(const std::vector<Cplx>& q, const std::vector<double>& beta,
                      const std::vector<double>& theta) {
  Cplx acc(0.0, 0.0);
  for (std::size_t m = 0; m < q.size(); ++m)
    acc += std::sqrt(beta[m]) * std::polar(1.0, theta[m]) * q[m];
  return std::norm(acc);
}

// Discretized rank-one search for the two-element combined-gain problem: for
// each per-element split the sides decouple, so each side's phase sweep is a
// one-dimensional scan. Returns the best sum of gains.
inline double combined_gain_rank1_grid(const std::vector<Cplx>& qt, const std::vector<Cplx>& qr,
                                       int beta_steps, int phase_steps) {
  double best = 0.0;
  for (int b0 = 0; b0 <= beta_steps; ++b0) {
    for (int b1 = 0; b1 <= beta_steps; ++b1) {
      const std::vector<double> bt{static_cast<double>(b0) / beta_steps,
                                   static_cast<double>(b1) / beta_steps};
      const std::vector<double> br{1.0 - bt[0], 1.0 - bt[1]};
      // Sides decouple given the splits; common phase is irrelevant so only
      // the second element's phase is swept.
      double side_t = 0.0, side_r = 0.0;
      for (int s = 0; s < phase_steps; ++s) {
        const double th = kTwoPi * s / phase_steps;
        side_t = std::max(side_t, gain_of(qt, bt, {0.0, th}));
        side_r = std::max(side_r, gain_of(qr, br, {0.0, th}));
      }
      best = std::max(best, side_t + side_r);
    }
  }
  return best;
}

// Best true NOMA sum-rate over the discretized rank-one coefficients for one
// subchannel (two elements), subject to gain(strong) >= gain(weak). q vectors
// are noise-normalized; powers fixed. Per split, each side reduces to its
// achievable-gain list over the phase sweep.
inline double cub_rank1_grid_best(const std::vector<Cplx>& q_strong,
                                  const std::vector<Cplx>& q_weak, bool strong_on_t,
                                  double p_strong, double p_weak, int beta_steps,
                                  int phase_steps) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> gains_strong(phase_steps), gains_weak(phase_steps);
  for (int b0 = 0; b0 <= beta_steps; ++b0) {
    for (int b1 = 0; b1 <= beta_steps; ++b1) {
      const std::vector<double> bt{static_cast<double>(b0) / beta_steps,
                                   static_cast<double>(b1) / beta_steps};
      const std::vector<double> br{1.0 - bt[0], 1.0 - bt[1]};
      const std::vector<double>& beta_strong = strong_on_t ? bt : br;
      const std::vector<double>& beta_weak = strong_on_t ? br : bt;
      for (int s = 0; s < phase_steps; ++s) {
        const double th = kTwoPi * s / phase_steps;
        gains_strong[s] = gain_of(q_strong, beta_strong, {0.0, th});
        gains_weak[s] = gain_of(q_weak, beta_weak, {0.0, th});
      }
      // The strong rate grows with its gain; the weak rate grows with its
      // gain too, so take the largest weak gain not exceeding each strong
      // gain candidate.
      std::vector<double> sorted_weak = gains_weak;
      std::sort(sorted_weak.begin(), sorted_weak.end());
      for (int s = 0; s < phase_steps; ++s) {
        const double gs = gains_strong[s];
        auto it = std::upper_bound(sorted_weak.begin(), sorted_weak.end(), gs);
        if (it == sorted_weak.begin()) continue;
        const double gw = *(it - 1);
        const double value = rate_log2(p_strong * gs) +
                             std::log2(1.0 + p_weak * gw / (p_strong * gw + 1.0));
        best = std::max(best, value);
      }
    }
  }
  return best;
}

}  // namespace staralloc::oracles

#endif
