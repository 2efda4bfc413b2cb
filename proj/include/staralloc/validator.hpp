#ifndef STARALLOC_VALIDATOR_HPP
#define STARALLOC_VALIDATOR_HPP

#include <string>
#include <vector>

#include "staralloc/noma.hpp"
#include "staralloc/oma.hpp"

namespace staralloc {

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  std::string joined() const;
};

// Independent feasibility checks, recomputed from the raw channel vectors
// (cascades rebuilt from f and g, gains hand-rolled): energy conservation to
// 1e-12, power budget and QoS to 1e-6, time-fraction sums to 1e-9, SIC
// ordering, assignment consistency, and claimed rates to 1e-6.
ValidationReport validate_solution(const Scenario& scn, const SurfaceMode& mode,
                                   const OmaSolution& sol);
ValidationReport validate_solution(const Scenario& scn, const SurfaceMode& mode,
                                   const NomaSolution& sol);

}  // namespace staralloc

#endif
