#ifndef STARALLOC_NOMA_HPP
#define STARALLOC_NOMA_HPP

#include <string>
#include <vector>

#include "staralloc/barrier.hpp"
#include "staralloc/gp.hpp"
#include "staralloc/matching.hpp"
#include "staralloc/randomize.hpp"
#include "staralloc/rng.hpp"
#include "staralloc/starface.hpp"
#include "staralloc/sysmodel.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// Per subchannel: the user decoded second, i.e. after its partner's signal is
// cancelled (interference-free; must hold the stronger effective gain).
struct DecodingOrder {
  std::vector<int> strong;

  // pi(i) in {0, 1}: 1 for the interference-free user.
  int pi(const Assignment& assign, int user) const {
    return strong[assign.channel_of[user]] == user ? 1 : 0;
  }
};

// log2(1 + p_i |h_i|^2 / (pi_partner * p_partner * |h_i|^2 + sigma^2)).
double noma_rate(double p_i, double p_partner, double gain_i, int pi_partner, double noise);

struct DecideOrdersResult {
  DecodingOrder order;
  StarCoefficients coeffs;
  PsdPair relaxed;
  double relaxed_objective = 0.0;     // SDP optimum of the combined-gain sum
  double randomized_objective = 0.0;  // same objective at the rounded coefficients
  SolveReport report;
};

// Maximizes the sum of combined channel gains over the relaxed coefficient
// matrices (rank-one dropped), rounds by Gaussian randomization, and orders
// each pair by the resulting effective gains. Gains equal within 1e-10
// (relative) break toward the T user.
DecideOrdersResult decide_orders(const Scenario& scn, const Assignment& assign,
                                 const SurfaceMode& mode, RngStream& rng,
                                 int num_samples = kDefaultRandomizationSamples);

struct CubResult {
  StarCoefficients coeffs;
  PsdPair relaxed;
  DecodingOrder order;         // re-derived on fallback, otherwise the input order
  std::vector<double> trace;   // relaxed objective per iteration
  double randomized_sum_rate = 0.0;
  bool fallback_eigenvector = false;
  bool sic_consistent = true;
  int iterations = 0;
  SolveReport last_report;
};

// Iterates the convexified beamforming problem: objective sum log2(1 + zeta),
// QoS as zeta >= 2^gamma - 1, diagonal coupling, PSD blocks, the SIC linear
// constraint, and the quadratic upper bound on the interference product with
// alpha_k updated to zeta / Tr each round. Powers stay fixed. The final
// coefficients come from Gaussian randomization scored by the true sum-rate
// with SIC as a hard filter. When no candidate passes and the order may be
// re-derived, the dominant-eigenvector rounding is used with the order sorted
// by its gains; with a pinned order the result is flagged SIC-inconsistent.
CubResult cub_beamforming(const Scenario& scn, const Assignment& assign,
                          const DecodingOrder& order, const Vec& powers,
                          const StarCoefficients& init, const SurfaceMode& mode, RngStream& rng,
                          bool allow_order_rederive = true,
                          int num_samples = kDefaultRandomizationSamples);

// Linear SINR-plus-one variables r = 2^R and normalized noise powers
// m = sigma^2 / |h|^2, both indexed 2k for the interference-free user and
// 2k + 1 for its partner.
struct NomaRates {
  Vec r;
  Vec m;
};

struct GpPowerResult {
  Vec powers;  // by user
  NomaRates rates;
  SolveReport report;
};

// Power allocation as a geometric program over r, recovered through
// p_(1) = (r_(1) - 1) m_(1) and p_(2) = (r_(2) - 1)(m_(2) + p_(1)); verifies
// the budget binds within 1e-6 and the recovered rates reproduce log2 r
// within 1e-8. norm_gain holds each user's |h|^2 / sigma^2 under the final
// coefficients. QoS is enforced per user.
GpPowerResult gp_power(const Assignment& assign, const DecodingOrder& order, const Vec& norm_gain,
                       const SystemConfig& cfg);

struct StageDiag {
  std::string stage;
  double objective = 0.0;
  int iterations = 0;
  bool feasible = true;
};

struct NomaSolution {
  Assignment assign;
  DecodingOrder order;
  StarCoefficients coeffs;
  Vec powers;      // by user
  Vec user_rates;  // by user
  double sum_rate = 0.0;
  std::vector<double> cub_trace;
  bool fallback_eigenvector = false;
  std::vector<StageDiag> stages;
};

// Three-step pipeline: decoding orders, CUB beamforming under uniform power
// P_max / I, then GP power allocation on the resulting gains.
NomaSolution three_step_noma(const Scenario& scn, const Assignment& assign,
                             const SurfaceMode& mode, RngStream& rng,
                             int num_samples = kDefaultRandomizationSamples);

std::string stage_diagnostics_csv(const std::vector<StageDiag>& stages);

}  // namespace staralloc

#endif
