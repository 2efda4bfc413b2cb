#include "staralloc/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace staralloc {

namespace {

// log sum_s exp(a_s . x + c_s) with softmax gradient/Hessian, shifted for
// numerical stability.
SmoothFn log_sum_exp_fn(const Posynomial& posy, int n) {
  struct Term {
    Vec a;
    double logc;
  };
  std::vector<Term> terms;
  terms.reserve(posy.terms.size());
  for (const Monomial& mono : posy.terms) {
    if (!(mono.coeff > 0.0))
      throw std::invalid_argument("solve_gp: posynomial '" + posy.name +
                                  "' has a non-positive coefficient");
    if (mono.exponents.size() != n)
      throw std::invalid_argument("solve_gp: exponent vector size mismatch in '" + posy.name + "'");
    terms.push_back({mono.exponents, std::log(mono.coeff)});
  }

  SmoothFn fn;
  fn.name = posy.name;
  fn.eval = [terms, n](const Vec& x, Vec* grad, Mat* hess) {
    const int s = static_cast<int>(terms.size());
    Vec y(s);
    for (int j = 0; j < s; ++j) y[j] = terms[j].a.dot(x) + terms[j].logc;
    const double ymax = y.maxCoeff();
    Vec w(s);
    double z = 0.0;
    for (int j = 0; j < s; ++j) {
      w[j] = std::exp(y[j] - ymax);
      z += w[j];
    }
    const double value = ymax + std::log(z);
    if (grad || hess) {
      w /= z;
      Vec mean = Vec::Zero(n);
      for (int j = 0; j < s; ++j) mean.noalias() += w[j] * terms[j].a;
      if (grad) *grad += mean;
      if (hess) {
        for (int j = 0; j < s; ++j)
          hess->noalias() += w[j] * (terms[j].a * terms[j].a.transpose());
        hess->noalias() -= mean * mean.transpose();
      }
    }
    return value;
  };
  return fn;
}

}  // namespace

Vec solve_gp(const GpProgram& program, SolveReport* report, const BarrierOptions& options) {
  if (program.n <= 0) throw std::invalid_argument("solve_gp: empty program");
  if (program.log2_weights.size() != program.n)
    throw std::invalid_argument("solve_gp: weight vector size mismatch");

  SmoothConvexProblem p;
  p.n = program.n;
  // maximize sum w_i log2 r_i = (1/ln2) sum w_i x_i
  p.objective = linear_fn("gp_objective", -program.log2_weights / kLn2, 0.0);
  p.objective_sign = -1.0;
  for (const Posynomial& posy : program.constraints)
    p.inequalities.push_back(log_sum_exp_fn(posy, program.n));

  Vec x0 = Vec::Zero(program.n);
  if (program.r0.size() == program.n) {
    for (int i = 0; i < program.n; ++i) {
      if (!(program.r0[i] > 0.0)) throw std::invalid_argument("solve_gp: r0 must be positive");
      x0[i] = std::log(program.r0[i]);
    }
  }
  p.x0 = x0;

  SolveResult res = solve_smooth_convex(p, options);
  if (report) *report = res.report;
  Vec r(program.n);
  for (int i = 0; i < program.n; ++i) r[i] = std::exp(res.x[i]);
  return r;
}

}  // namespace staralloc
