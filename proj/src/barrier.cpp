#include "staralloc/barrier.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <limits>

namespace staralloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockCtx {
  HermitianBlock spec;
  HermitianMap map;
};

// Shared evaluation workspace; one per solve, reused across iterations.
struct Workspace {
  Vec grad_scratch;
  Mat hess_scratch;
  Vec grad;
  Mat hess;
};

struct BarrierEval {
  bool in_domain = false;
  double value = kInf;   // t * f0 + phi
  double f0 = kInf;      // raw objective
};

// Evaluates t*f0 - sum log(-f_j) - sum log det X_b. Derivatives accumulate
// into ws.grad / ws.hess when want_derivs.
BarrierEval barrier_eval(const SmoothConvexProblem& p, const std::vector<BlockCtx>& blocks,
                         const Vec& x, double t, bool want_derivs, Workspace& ws) {
  BarrierEval out;
  const int n = p.n;
  if (want_derivs) {
    ws.grad.setZero(n);
    ws.hess.setZero(n, n);
  }

  ws.grad_scratch.setZero(n);
  if (want_derivs) ws.hess_scratch.setZero(n, n);
  const double f0 = p.objective.eval(x, want_derivs ? &ws.grad_scratch : nullptr,
                                     want_derivs ? &ws.hess_scratch : nullptr);
  if (!std::isfinite(f0)) return out;
  if (want_derivs) {
    ws.grad = t * ws.grad_scratch;
    ws.hess = t * ws.hess_scratch;
  }
  double value = t * f0;

  for (const SmoothFn& fn : p.inequalities) {
    ws.grad_scratch.setZero(n);
    if (want_derivs) ws.hess_scratch.setZero(n, n);
    const double fj = fn.eval(x, want_derivs ? &ws.grad_scratch : nullptr,
                              want_derivs ? &ws.hess_scratch : nullptr);
    if (!(fj < 0.0)) return out;  // includes NaN
    value -= std::log(-fj);
    if (want_derivs) {
      const double inv = 1.0 / (-fj);
      ws.grad.noalias() += inv * ws.grad_scratch;
      ws.hess.noalias() += inv * ws.hess_scratch;
      ws.hess.noalias() += (inv * inv) * (ws.grad_scratch * ws.grad_scratch.transpose());
    }
  }

  for (const BlockCtx& blk : blocks) {
    const int off = blk.spec.offset;
    const int cnt = blk.map.count();
    const CMat xm = blk.map.matrix(x.segment(off, cnt));
    Eigen::LLT<CMat> llt(xm);
    if (llt.info() != Eigen::Success) return out;
    double logdet = 0.0;
    for (int i = 0; i < blk.spec.dim; ++i) logdet += std::log(llt.matrixL()(i, i).real());
    value -= 2.0 * logdet;
    if (want_derivs) {
      const CMat w = llt.solve(CMat::Identity(blk.spec.dim, blk.spec.dim));
      ws.grad.segment(off, cnt) += blk.map.logdet_grad(w);
      ws.hess.block(off, off, cnt, cnt) += blk.map.logdet_hess(w);
    }
  }

  out.in_domain = true;
  out.value = value;
  out.f0 = f0;
  return out;
}

// Strict feasibility of x for everything except the objective.
bool strictly_feasible(const SmoothConvexProblem& p, const std::vector<BlockCtx>& blocks,
                       const Vec& x, double* worst_relaxable = nullptr,
                       std::string* worst_name = nullptr) {
  bool ok = true;
  double worst = -kInf;
  for (const SmoothFn& fn : p.inequalities) {
    const double fj = fn.eval(x, nullptr, nullptr);
    if (!(fj < 0.0)) ok = false;
    if (fn.relaxable && (fj > worst || !std::isfinite(fj))) {
      worst = fj;
      if (worst_name) *worst_name = fn.name;
    }
  }
  for (const BlockCtx& blk : blocks) {
    const CMat xm = blk.map.matrix(x.segment(blk.spec.offset, blk.map.count()));
    if (Eigen::LLT<CMat>(xm).info() != Eigen::Success) ok = false;
  }
  if (worst_relaxable) *worst_relaxable = worst;
  return ok;
}

std::vector<BlockCtx> build_blocks(const SmoothConvexProblem& p) {
  std::vector<BlockCtx> blocks;
  blocks.reserve(p.psd_blocks.size());
  for (const HermitianBlock& b : p.psd_blocks) blocks.push_back({b, HermitianMap(b.dim)});
  return blocks;
}

Mat nullspace_basis(const SmoothConvexProblem& p) {
  if (p.a.rows() == 0) return Mat::Identity(p.n, p.n);
  Eigen::FullPivLU<Mat> lu(p.a);
  Mat kernel = lu.kernel();
  if (kernel.cols() == 1 && kernel.isZero(0.0) && lu.rank() == p.n) return Mat::Zero(p.n, 0);
  return kernel;
}

#ifndef NDEBUG
void spot_check_convexity(const SmoothConvexProblem& p, const Vec& x) {
  Vec g(p.n);
  Mat h(p.n, p.n);
  auto min_eig_ok = [&](const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return lo >= -1e-7 * hi;
  };
  if (p.objective.check_convex) {
    g.setZero();
    h.setZero();
    p.objective.eval(x, &g, &h);
    if (h.allFinite() && !min_eig_ok(h))
      throw NumericalError("convexity spot check failed for objective");
  }
  for (const SmoothFn& fn : p.inequalities) {
    if (!fn.check_convex) continue;
    g.setZero();
    h.setZero();
    const double v = fn.eval(x, &g, &h);
    if (std::isfinite(v) && h.allFinite() && !min_eig_ok(h))
      throw NumericalError("convexity spot check failed for constraint " + fn.name);
  }
}
#endif

struct StageResult {
  int newton_steps = 0;
  bool stalled = false;
};

// One centering stage: damped Newton on t*f0 + phi restricted to x0 + range(N).
StageResult center(const SmoothConvexProblem& p, const std::vector<BlockCtx>& blocks, const Mat& nbasis,
                   double t, const BarrierOptions& opt, Vec& x, Workspace& ws,
                   const std::function<bool(const Vec&)>& early_stop) {
  StageResult res;
  if (nbasis.cols() == 0) return res;
  for (int it = 0; it < opt.max_newton_per_stage; ++it) {
    const BarrierEval ev = barrier_eval(p, blocks, x, t, true, ws);
    if (!ev.in_domain) throw NumericalError("barrier: iterate left the domain");

    Vec gz = nbasis.transpose() * ws.grad;
    Mat hz = nbasis.transpose() * ws.hess * nbasis;
    if (!hz.allFinite() || !gz.allFinite()) throw NumericalError("barrier: non-finite derivatives");

    // Factor with escalating ridge; the Hessian can be only just definite.
    Vec dz;
    double ridge = 0.0;
    const double scale = std::max(1.0, hz.diagonal().cwiseAbs().maxCoeff());
    for (;;) {
      Eigen::LLT<Mat> llt(ridge == 0.0 ? hz : Mat(hz + ridge * Mat::Identity(hz.rows(), hz.cols())));
      if (llt.info() == Eigen::Success) {
        dz = llt.solve(-gz);
        break;
      }
      ridge = (ridge == 0.0) ? 1e-12 * scale : ridge * 100.0;
      if (ridge > 1e8 * scale) throw NumericalError("barrier: Hessian factorization failed");
    }

    const double slope = gz.dot(dz);
    const double decrement2 = -slope;
    if (decrement2 * 0.5 <= opt.newton_tol) break;

    const Vec dx = nbasis * dz;
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-16) {
      const Vec cand = x + alpha * dx;
      const BarrierEval cev = barrier_eval(p, blocks, cand, t, false, ws);
      if (cev.in_domain && cev.value <= ev.value + opt.ls_alpha * alpha * slope) {
        x = cand;
        moved = true;
        break;
      }
      alpha *= opt.ls_beta;
    }
    ++res.newton_steps;
    if (!moved) {
      res.stalled = true;
      break;
    }
    if (early_stop && early_stop(x)) break;
  }
  return res;
}

SolveResult run_barrier(const SmoothConvexProblem& p, const BarrierOptions& opt, const Vec& start,
                        const std::function<bool(const Vec&)>& early_stop) {
  std::vector<BlockCtx> blocks = build_blocks(p);
  const Mat nbasis = nullspace_basis(p);
  Workspace ws;

  double nu = static_cast<double>(p.inequalities.size());
  for (const HermitianBlock& b : p.psd_blocks) nu += b.dim;
  nu = std::max(nu, 1.0);

  SolveResult res;
  res.x = start;
  double t = opt.t0;
  std::ofstream trace;
  if (!opt.trace_path.empty()) {
    trace.open(opt.trace_path);
    trace << "iteration,objective,kkt_residual\n";
  }

  int stage = 0;
  for (; stage < opt.max_stages; ++stage) {
    const StageResult sr = center(p, blocks, nbasis, t, opt, res.x, ws, early_stop);
    res.report.newton_iterations += sr.newton_steps;

    const BarrierEval ev = barrier_eval(p, blocks, res.x, t, true, ws);
    if (!ev.in_domain) throw NumericalError("barrier: lost feasibility");
    const double kkt = (nbasis.cols() == 0) ? 0.0 : (nbasis.transpose() * ws.grad).norm() / t;
    res.report.objective_trace.push_back(p.objective_sign * ev.f0);
    res.report.kkt_residual = kkt;
    if (trace.is_open())
      trace << stage << ',' << p.objective_sign * ev.f0 << ',' << kkt << '\n';

    if (early_stop && early_stop(res.x)) {
      res.report.termination = "early_stop";
      break;
    }
    if (nu / t <= opt.gap_tol) {
      res.report.termination = "converged";
      break;
    }
    if (sr.stalled && stage > 0) {
      res.report.termination = "line_search_stall";
      break;
    }
    t *= opt.mu;
  }
  if (res.report.termination.empty())
    res.report.termination = (stage == opt.max_stages) ? "max_stages" : "converged";

  double worst = 0.0;
  res.report.ineq_multipliers.resize(static_cast<int>(p.inequalities.size()));
  for (std::size_t j = 0; j < p.inequalities.size(); ++j) {
    const double fj = p.inequalities[j].eval(res.x, nullptr, nullptr);
    worst = std::max(worst, fj);
    res.report.ineq_multipliers[static_cast<int>(j)] =
        (fj < 0.0) ? 1.0 / (t * -fj) : std::numeric_limits<double>::infinity();
  }
  if (p.a.rows() > 0) worst = std::max(worst, (p.a * res.x - p.b).cwiseAbs().maxCoeff());
  res.report.max_violation = worst;
  return res;
}

}  // namespace

SmoothFn linear_fn(std::string name, const Vec& c, double d, bool relaxable) {
  SmoothFn fn;
  fn.name = std::move(name);
  fn.relaxable = relaxable;
  fn.eval = [c, d](const Vec& x, Vec* grad, Mat*) {
    if (grad) *grad += c;
    return c.dot(x) + d;
  };
  return fn;
}

Vec phase1_feasible_point(const SmoothConvexProblem& p, const BarrierOptions& options) {
  // Augmented variables (x, s); minimize s with relaxable f_j(x) <= s.
  const int n = p.n;
  SmoothConvexProblem aug;
  aug.n = n + 1;
  Vec cobj = Vec::Zero(n + 1);
  cobj[n] = 1.0;
  aug.objective = linear_fn("phase1_slack", cobj, 0.0);
  aug.psd_blocks = p.psd_blocks;
  if (p.a.rows() > 0) {
    aug.a = Mat::Zero(p.a.rows(), n + 1);
    aug.a.leftCols(n) = p.a;
    aug.b = p.b;
  }
  for (const SmoothFn& fn : p.inequalities) {
    SmoothFn lifted;
    lifted.name = fn.name;
    lifted.relaxable = false;
    lifted.check_convex = fn.check_convex;
    const bool relax = fn.relaxable;
    auto inner = fn.eval;
    lifted.eval = [inner, relax, n](const Vec& xs, Vec* grad, Mat* hess) {
      Vec gx;
      Mat hx;
      const Vec x = xs.head(n);
      double v;
      if (grad || hess) {
        gx.setZero(n);
        hx.setZero(n, n);
        v = inner(x, grad ? &gx : nullptr, hess ? &hx : nullptr);
        if (grad) grad->head(n) += gx;
        if (hess) hess->topLeftCorner(n, n) += hx;
      } else {
        v = inner(x, nullptr, nullptr);
      }
      if (relax) {
        if (grad) (*grad)[n] -= 1.0;
        return v - xs[n];
      }
      return v;
    };
    aug.inequalities.push_back(std::move(lifted));
  }
  // Keep the slack bounded below so the phase-I objective cannot diverge.
  Vec cs = Vec::Zero(n + 1);
  cs[n] = -1.0;
  aug.inequalities.push_back(linear_fn("phase1_slack_floor", cs, -1.0, false));

  // Start: s above the worst relaxable violation.
  std::vector<BlockCtx> blocks = build_blocks(p);
  double worst = 0.0;
  std::string worst_name = "unknown";
  strictly_feasible(p, blocks, p.x0, &worst, &worst_name);
  Vec xs0(n + 1);
  xs0.head(n) = p.x0;
  xs0[n] = std::max(worst, 0.0) + 1.0;
  aug.x0 = xs0;

  constexpr double kMargin = 1e-7;
  BarrierOptions popt = options;
  popt.trace_path.clear();
  auto stop = [n](const Vec& xs) { return xs[n] <= -kMargin; };
  SolveResult r = run_barrier(aug, popt, xs0, stop);
  if (r.x[n] > -kMargin) {
    // Report the worst relaxable constraint at the final iterate.
    double v = 0.0;
    std::string name = "unknown";
    strictly_feasible(p, blocks, r.x.head(n), &v, &name);
    throw InfeasibleError("phase I found no strictly feasible point (slack " +
                          std::to_string(r.x[n]) + ")", name);
  }
  return r.x.head(n);
}

SolveResult solve_smooth_convex(const SmoothConvexProblem& p, const BarrierOptions& opt) {
  if (p.n <= 0 || !p.objective.eval) throw std::invalid_argument("barrier: empty problem");
  if (p.x0.size() != p.n) throw std::invalid_argument("barrier: x0 has wrong size");
  for (const HermitianBlock& b : p.psd_blocks)
    if (b.offset < 0 || b.offset + b.dim * b.dim > p.n)
      throw std::invalid_argument("barrier: PSD block out of range");
  if (p.a.rows() > 0) {
    if (p.a.cols() != p.n || p.b.size() != p.a.rows())
      throw std::invalid_argument("barrier: equality dimensions mismatch");
    if ((p.a * p.x0 - p.b).cwiseAbs().maxCoeff() > 1e-8)
      throw std::invalid_argument("barrier: x0 violates equality constraints");
  }

  std::vector<BlockCtx> blocks = build_blocks(p);
  for (const BlockCtx& blk : blocks) {
    const CMat xm = blk.map.matrix(p.x0.segment(blk.spec.offset, blk.map.count()));
    if (Eigen::LLT<CMat>(xm).info() != Eigen::Success)
      throw std::invalid_argument("barrier: x0 leaves a PSD block indefinite");
  }
  for (const SmoothFn& fn : p.inequalities) {
    if (fn.relaxable) continue;
    if (!(fn.eval(p.x0, nullptr, nullptr) < 0.0))
      throw std::invalid_argument("barrier: x0 violates hard bound " + fn.name);
  }

#ifndef NDEBUG
  spot_check_convexity(p, p.x0);
#endif

  Vec start = p.x0;
  if (!strictly_feasible(p, blocks, start)) {
    start = phase1_feasible_point(p, opt);
  }
  return run_barrier(p, opt, start, nullptr);
}

}  // namespace staralloc
