#ifndef STARALLOC_OMA_HPP
#define STARALLOC_OMA_HPP

#include <optional>
#include <string>
#include <vector>

#include "staralloc/barrier.hpp"
#include "staralloc/matching.hpp"
#include "staralloc/starface.hpp"
#include "staralloc/sysmodel.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// Time-shared rate omega * log2(1 + p |h|^2 / (omega sigma^2)); continuously
// extended to 0 at omega = 0 with p = 0. omega = 0 with p > 0 raises
// std::domain_error.
double oma_rate(double p, double omega, double gain, double noise);

// Per-user power and time share.
struct OmaAllocation {
  Vec p;      // watts, by user
  Vec omega;  // time fraction, by user
};

// SCA stationary points: real/imaginary parts of the per-user combined
// channel amplitude at the previous iterate (noise-normalized).
struct ScaState {
  Vec a_bar, b_bar;  // by user
};

// Jointly optimal (p, omega) for fixed gains. norm_gain holds each user's
// |h|^2 / sigma^2 on its own channel. fixed_omega pins every time share (the
// conventional equal-split variant). Throws InfeasibleError when the QoS
// target cannot be met.
OmaAllocation solve_power_time(const Assignment& assign, const Vec& norm_gain,
                               const SystemConfig& cfg,
                               std::optional<double> fixed_omega = std::nullopt,
                               SolveReport* report = nullptr);

struct BeamformingResult {
  StarCoefficients coeffs;
  ScaState state;
  SolveReport report;
};

// One SCA pass over the transmission/reflection vectors with the allocation
// frozen: combined-amplitude auxiliaries (a, b), chi below the tangent of
// a^2 + b^2 at the stationary points, per-element coupling kept inside a wide
// band below 1 and projected to the exact simplex on output.
BeamformingResult solve_beamforming_oma(const Scenario& scn, const Assignment& assign,
                                        const OmaAllocation& alloc, const ScaState& prior,
                                        const StarCoefficients& warm, const SurfaceMode& mode);

struct OmaSolution {
  Assignment assign;
  StarCoefficients coeffs;
  OmaAllocation alloc;
  Vec user_rates;
  double sum_rate = 0.0;
  std::vector<double> trace;  // sum-rate after each AO iteration, trace[0] = initialization
  int iterations = 0;
  std::string termination;
};

// Alternating optimization: each iteration solves the power/time block
// exactly, then takes one SCA linearization refined jointly over the
// coefficients and the allocation, until the sum-rate gain drops below
// cfg.tolerance (cap 50). A candidate iterate is only accepted when it does
// not decrease the sum-rate, so the trace is monotone by construction.
OmaSolution alternating_optimize_oma(const Scenario& scn, const Assignment& assign,
                                     const StarCoefficients& init, const SurfaceMode& mode);

// ScaState consistent with the given coefficients.
ScaState sca_state_from(const Scenario& scn, const Assignment& assign,
                        const StarCoefficients& coeffs);

// Per-user normalized gains on their own channels under the coefficients.
Vec assigned_gains(const Scenario& scn, const Assignment& assign, const StarCoefficients& coeffs);

}  // namespace staralloc

#endif
