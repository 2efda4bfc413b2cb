#ifndef STARALLOC_GP_HPP
#define STARALLOC_GP_HPP

#include <string>
#include <vector>

#include "staralloc/barrier.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// coeff * prod_i r_i^exponents[i], coeff > 0.
struct Monomial {
  double coeff = 1.0;
  Vec exponents;
};

struct Posynomial {
  std::string name;
  std::vector<Monomial> terms;
};

// maximize sum_i log2_weights[i] * log2(r_i)
//   s.t. each posynomial constraint <= 1, r > 0.
struct GpProgram {
  int n = 0;
  Vec log2_weights;
  std::vector<Posynomial> constraints;
  Vec r0;  // optional strictly positive start; defaults to all-ones
};

// Solves via the x = log r change of variables (constraints become
// log-sum-exp, the objective linear) through solve_smooth_convex; maps back.
Vec solve_gp(const GpProgram& program, SolveReport* report = nullptr,
             const BarrierOptions& options = {});

}  // namespace staralloc

#endif
