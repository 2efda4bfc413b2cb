#ifndef STARALLOC_EXPERIMENTS_HPP
#define STARALLOC_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "staralloc/matching.hpp"
#include "staralloc/noma.hpp"
#include "staralloc/oma.hpp"
#include "staralloc/validator.hpp"

namespace staralloc {

enum class ExperimentId { Convergence, SumrateVsM, CdfAssignment, DecodingOrders, AmplitudeProfile };
enum class AssignMethod { Swap, Lma, Sma, Exhaustive };

std::string to_string(ExperimentId id);
std::string to_string(AssignMethod m);
std::string to_string(Scheme s);
ExperimentId parse_experiment(const std::string& s);
AssignMethod parse_assign(const std::string& s);
Scheme parse_scheme(const std::string& s);
SurfaceMode parse_surface(const std::string& s);

struct ExperimentSpec {
  ExperimentId id = ExperimentId::Convergence;
  Scheme scheme = Scheme::Noma;
  AssignMethod assign = AssignMethod::Lma;
  SurfaceMode surface = SurfaceMode::star();
  std::vector<double> sweep;  // element counts for sumrate_vs_M
  int trials = 30;
  std::uint64_t seed_base = 1;
  SystemConfig base_cfg;

  void validate() const;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  double sum_rate = 0.0;
  Vec user_rates;
  bool feasible = false;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string note;  // infeasibility reason or validator complaint
};

struct TrialOutcome {
  TrialRecord record;
  std::optional<OmaSolution> oma;
  std::optional<NomaSolution> noma;
};

// One full pipeline run: scenario from the seed, channel assignment by the
// chosen method, then AO (OMA) or the three-step algorithm (NOMA). The
// pipeline RNG is derived from (seed, assignment) so identical assignments
// reproduce identical solutions across methods; exhaustive therefore
// dominates the heuristics trial-wise by construction. Solutions are
// re-validated independently before being reported feasible.
TrialOutcome run_trial(const SystemConfig& cfg, Scheme scheme, AssignMethod method,
                       const SurfaceMode& mode, std::uint64_t seed);

// Experiment drivers; each returns the full CSV payload (header comments
// included). Infeasible trials carry feasible=0 rows and are excluded from
// aggregate lines. Throws GuardError on size guards and InfeasibleError when
// every trial fails.
std::string run_experiment(const ExperimentSpec& spec);
std::string compare_assignments(const ExperimentSpec& spec);
std::string compare_decoding_orders(const ExperimentSpec& spec);

// Worker count: min(hardware, STAR_ALLOC_THREADS when set).
int worker_count();

}  // namespace staralloc

#endif
