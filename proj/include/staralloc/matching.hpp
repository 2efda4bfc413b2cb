#ifndef STARALLOC_MATCHING_HPP
#define STARALLOC_MATCHING_HPP

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "staralloc/starface.hpp"
#include "staralloc/sysmodel.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

enum class Scheme { Oma, Noma };

// Two-to-one matching between subchannels and users: every channel carries an
// ordered pair of users, every user sits on exactly one channel.
struct Assignment {
  std::vector<std::array<int, 2>> pair;  // per channel
  std::vector<int> channel_of;           // per user

  int subchannels() const { return static_cast<int>(pair.size()); }
  int users() const { return static_cast<int>(channel_of.size()); }
  int partner_of(int user) const;

  static Assignment from_pairs(const std::vector<std::array<int, 2>>& pairs, int num_users);
  // Throws std::invalid_argument when the two-to-one conditions fail.
  void validate() const;
};

// Utility snapshot: per-channel user rates for a candidate matching under a
// fixed resource-allocation state. Must be pure.
struct UtilityOracle {
  std::function<std::array<double, 2>(const Assignment&, int k)> channel_rates;

  double user_utility(const Assignment& phi, int user) const;
  double channel_utility(const Assignment& phi, int k) const;
};

// Equal-time OMA rates at power p_each per user over normalized gains
// (K x I matrix of |h|^2 / noise).
UtilityOracle oma_snapshot_oracle(const Mat& norm_gain, double p_each, double omega = 0.5);
// NOMA rates at uniform power; the stronger user of each pair is decoded
// second (interference-free).
UtilityOracle noma_snapshot_oracle(const Mat& norm_gain, double p_each);

enum class SwapScope { AllPairs, SameRegion };

// Definition-4 check: both users swap channels; all four involved players keep
// their utility and at least one strictly improves (tolerance 1e-12). The two
// users must sit on different channels.
bool is_swap_blocking(const Assignment& phi, int user_i, int user_j, const UtilityOracle& u);

struct SwapMatchStats {
  int swaps = 0;
  int passes = 0;
};

// Executes swap operations until no swap-blocking pair remains within scope
// (lexicographic scan, first improving swap applied immediately). Bounded by
// 10 * I full passes. regions is only consulted for SameRegion scope.
Assignment swap_match(const Assignment& phi0, const UtilityOracle& u, SwapScope scope,
                      const std::vector<Region>& regions, SwapMatchStats* stats = nullptr);

// Greedy deferred acceptance for OMA: omega = 0.5, beta = 0.5 per element,
// phases aligned to the strongest user of each region; users propose to their
// best-gain channel, channels keep the two best proposers and never bump.
std::pair<Assignment, StarCoefficients> init_oma(const Scenario& scn, const SurfaceMode& mode);

struct LmaResult {
  Assignment assignment;
  StarCoefficients coeffs;
  // Decoding hint per channel from the initialization gains: the user decoded
  // second (cascaded-channel-based rule).
  std::vector<int> order_hint;
};

// Location-based matching: initialization pairs one T with one R user per
// channel, swaps are restricted to same-region pairs. The snapshot utilities
// follow the scheme (NOMA by default; the same machinery serves OMA).
LmaResult lma(const Scenario& scn, const SurfaceMode& mode, Scheme scheme = Scheme::Noma);

// Same-region baseline: pairs users of equal region wherever possible (one
// mixed channel when the per-region count is odd), swap scope same-region.
Assignment sma(const Scenario& scn, const SurfaceMode& mode, Scheme scheme = Scheme::Noma);

// All assignments of I users into K labeled channels of two (I!/2^K
// candidates); guarded to I <= 6.
std::vector<Assignment> enumerate_assignments(int num_users, int num_subchannels);

// Argmax of the inner solver over every candidate; candidates where the inner
// returns nullopt (infeasible) are skipped; ties broken first-found. Throws
// GuardError for I > 6 and InfeasibleError when every candidate fails.
Assignment exhaustive_assignment(int num_users, int num_subchannels,
                                 const std::function<std::optional<double>(const Assignment&)>& inner);

// Snapshot gain matrix (K x I): |v_{n(i)}^T q_tilde|^2 under the given
// coefficients, normalized by the noise power.
Mat snapshot_gains(const Scenario& scn, const StarCoefficients& coeffs);

// Initial coefficients shared by the matching schemes: beta split per mode,
// each side's phases aligned to the region's strongest user by potential
// cascaded gain sum_m |q[m]|^2 (over all of that region's channel slots).
StarCoefficients matching_init_coefficients(const Scenario& scn, const SurfaceMode& mode);

}  // namespace staralloc

#endif
