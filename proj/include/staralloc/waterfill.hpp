#ifndef STARALLOC_WATERFILL_HPP
#define STARALLOC_WATERFILL_HPP

#include "staralloc/types.hpp"

namespace staralloc {

// Closed-form water-filling: p_j = max(0, mu - noise/gains_j) with the level
// mu set so that sum_j p_j = p_max. Solved exactly over the sorted levels, so
// complementary slackness holds to machine precision. Throws std::domain_error
// for p_max <= 0 or a non-positive gain.
Vec water_filling(const Vec& gains, double p_max, double noise);

}  // namespace staralloc

#endif
