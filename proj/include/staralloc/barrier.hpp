#ifndef STARALLOC_BARRIER_HPP
#define STARALLOC_BARRIER_HPP

#include <functional>
#include <string>
#include <vector>

#include "staralloc/hermitian.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// Smooth scalar functional over the parameter vector. eval returns the value
// and, when the pointers are non-null, accumulates gradient and Hessian into
// caller-provided storage (already sized and zeroed). NaN values mark points
// outside the domain.
struct SmoothFn {
  std::string name;
  // Phase I may relax this constraint; non-relaxable constraints are domain
  // bounds that must hold strictly at every candidate start.
  bool relaxable = true;
  // Opt-out for the debug convexity spot check (used by the one deliberately
  // nonconvex shell constraint in the beamforming parametrization).
  bool check_convex = true;
  std::function<double(const Vec&, Vec*, Mat*)> eval;
};

SmoothFn linear_fn(std::string name, const Vec& c, double d, bool relaxable = true);

// Hermitian PSD block: count() = dim^2 parameters starting at offset,
// interpreted by HermitianMap; kept positive definite by a -log det barrier.
struct HermitianBlock {
  int offset = 0;
  int dim = 0;
};

// minimize objective(x)
//   s.t. inequalities[j](x) <= 0, X_b(x) >= 0 for each PSD block, a x = b.
// x0 must satisfy the equalities, keep every PSD block strictly definite and
// every non-relaxable inequality strictly negative; violated relaxable
// inequalities trigger an internal phase-I solve.
struct SmoothConvexProblem {
  int n = 0;
  SmoothFn objective;
  double objective_sign = 1.0;  // reported objective = sign * f0; maximizers pass -1
  std::vector<SmoothFn> inequalities;
  std::vector<HermitianBlock> psd_blocks;
  Mat a;  // may be 0 x n
  Vec b;
  Vec x0;
};

struct BarrierOptions {
  double t0 = 1.0;
  double mu = 10.0;
  double newton_tol = 1e-9;  // stage ends when the Newton decrement^2/2 drops below
  double gap_tol = 1e-9;     // outer loop ends when nu / t drops below
  double ls_alpha = 0.25;
  double ls_beta = 0.5;
  int max_newton_per_stage = 80;
  int max_stages = 40;
  std::string trace_path;  // per-stage CSV dump (iteration, objective, kkt residual)
};

struct SolveReport {
  std::vector<double> objective_trace;  // per outer stage, caller orientation
  std::string termination;
  int newton_iterations = 0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  // Approximate inequality multipliers 1 / (t * -f_j) at the final center,
  // indexed like the problem's inequality list (minimization orientation).
  Vec ineq_multipliers;
};

struct SolveResult {
  Vec x;
  SolveReport report;
};

// Throws InfeasibleError when phase I cannot produce a strictly feasible
// point, NumericalError on breakdown, std::invalid_argument on contract
// violations (x0 breaking equalities or hard bounds).
SolveResult solve_smooth_convex(const SmoothConvexProblem& problem,
                                const BarrierOptions& options = {});

// Exposed for tests: strictly feasible point from a start that may violate
// relaxable inequalities only.
Vec phase1_feasible_point(const SmoothConvexProblem& problem, const BarrierOptions& options);

}  // namespace staralloc

#endif
