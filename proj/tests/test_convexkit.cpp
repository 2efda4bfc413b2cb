#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "staralloc/barrier.hpp"
#include "staralloc/gp.hpp"
#include "staralloc/hermitian.hpp"
#include "staralloc/randomize.hpp"
#include "staralloc/rng.hpp"
#include "staralloc/waterfill.hpp"

using namespace staralloc;

TEST_CASE("water filling splits evenly over equal gains") {
  Vec g = Vec::Ones(2);
  const Vec p = water_filling(g, 2.0, 1.0);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(1.0));
}

TEST_CASE("water filling dries the weak slot under a tight budget") {
  // Levels noise/g = 0.1 and 0.5 with p_max = 0.2: mu = 0.3 < 0.5.
  Vec g(2);
  g << 10.0, 2.0;
  const Vec p = water_filling(g, 0.2, 1.0);
  CHECK(p[0] == doctest::Approx(0.2));
  CHECK(p[1] == doctest::Approx(0.0));
}

TEST_CASE("water filling guards its domain") {
  Vec g = Vec::Ones(2);
  CHECK_THROWS_AS(water_filling(g, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(water_filling(g, -1.0, 1.0), std::domain_error);
  Vec bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(water_filling(bad, 1.0, 1.0), std::domain_error);
}

TEST_CASE("water filling satisfies the budget and complementary slackness") {
  RngStream rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 4);
    Vec g(n);
    for (int j = 0; j < n; ++j) g[j] = rng.uniform(0.1, 5.0);
    const double noise = rng.uniform(0.05, 1.0);
    const double p_max = rng.uniform(0.2, 3.0);
    const Vec p = water_filling(g, p_max, noise);
    CHECK(std::abs(p.sum() - p_max) <= 1e-9);
    // Level mu from any wet slot; every wet slot must sit at the same level.
    double mu = 0.0;
    for (int j = 0; j < n; ++j)
      if (p[j] > 0.0) mu = std::max(mu, p[j] + noise / g[j]);
    for (int j = 0; j < n; ++j) {
      if (p[j] > 0.0) CHECK(std::abs(p[j] - (mu - noise / g[j])) <= 1e-9);
      else CHECK(noise / g[j] >= mu - 1e-9);
    }
  }
}

TEST_CASE("water filling matches the simplex grid oracle on 3 slots") {
  RngStream rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    Vec g(3);
    for (int j = 0; j < 3; ++j) g[j] = rng.uniform(0.2, 4.0);
    const double noise = 0.5;
    const double p_max = 1.5;
    const Vec p = water_filling(g, p_max, noise);
    double mine = 0.0;
    for (int j = 0; j < 3; ++j) mine += std::log2(1.0 + p[j] * g[j] / noise);
    const double grid = oracles::waterfill_grid_best(g, p_max, noise, 400);
    CHECK(mine >= grid - 1e-9);
    CHECK(std::abs(mine - grid) <= 1e-3);
  }
}

TEST_CASE("barrier solves a scalar bound-constrained quadratic") {
  SmoothConvexProblem p;
  p.n = 1;
  p.objective.name = "x_squared";
  p.objective.eval = [](const Vec& x, Vec* g, Mat* h) {
    if (g) (*g)[0] += 2.0 * x[0];
    if (h) (*h)(0, 0) += 2.0;
    return x[0] * x[0];
  };
  p.inequalities.push_back(linear_fn("x_ge_1", -Vec::Ones(1), 1.0));
  p.x0 = Vec::Constant(1, 3.0);
  const SolveResult res = solve_smooth_convex(p);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.report.termination == "converged");
}

TEST_CASE("barrier honors linear equality constraints") {
  SmoothConvexProblem p;
  p.n = 2;
  p.objective.name = "sum_of_squares";
  p.objective.eval = [](const Vec& x, Vec* g, Mat* h) {
    if (g) *g += 2.0 * x;
    if (h) {
      (*h)(0, 0) += 2.0;
      (*h)(1, 1) += 2.0;
    }
    return x.squaredNorm();
  };
  p.a = Mat::Ones(1, 2);
  p.b = Vec::Constant(1, 2.0);
  p.inequalities.push_back(linear_fn("x0_pos", -Vec::Unit(2, 0), 0.0));
  p.inequalities.push_back(linear_fn("x1_pos", -Vec::Unit(2, 1), 0.0));
  p.x0 = Vec(2);
  p.x0 << 1.5, 0.5;
  const SolveResult res = solve_smooth_convex(p);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("barrier triggers phase I and detects infeasibility") {
  // Feasible via phase I: the start violates the relaxable constraint x >= 1.
  SmoothConvexProblem p;
  p.n = 1;
  p.objective = linear_fn("x", Vec::Ones(1), 0.0);
  p.inequalities.push_back(linear_fn("x_ge_1", -Vec::Ones(1), 1.0, true));
  p.inequalities.push_back(linear_fn("x_le_5", Vec::Ones(1), -5.0, false));
  p.x0 = Vec::Constant(1, 0.0);
  const SolveResult res = solve_smooth_convex(p);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-5));

  // Contradictory constraints: x >= 1 (relaxable) against x <= 0 (hard).
  SmoothConvexProblem q;
  q.n = 1;
  q.objective = linear_fn("x", Vec::Ones(1), 0.0);
  q.inequalities.push_back(linear_fn("x_ge_1", -Vec::Ones(1), 1.0, true));
  q.inequalities.push_back(linear_fn("x_le_0", Vec::Ones(1), 0.0, false));
  q.x0 = Vec::Constant(1, -1.0);
  CHECK_THROWS_AS(solve_smooth_convex(q), InfeasibleError);
}

TEST_CASE("barrier objective trace is monotone for maximization") {
  // maximize log(x) + log(y) s.t. x + 2y <= 3: optimum x = 1.5, y = 0.75.
  SmoothConvexProblem p;
  p.n = 2;
  p.objective_sign = -1.0;
  p.objective.name = "neg_log_sum";
  p.objective.eval = [](const Vec& x, Vec* g, Mat* h) {
    if (x[0] <= 0.0 || x[1] <= 0.0) return std::nan("");
    if (g) {
      (*g)[0] -= 1.0 / x[0];
      (*g)[1] -= 1.0 / x[1];
    }
    if (h) {
      (*h)(0, 0) += 1.0 / (x[0] * x[0]);
      (*h)(1, 1) += 1.0 / (x[1] * x[1]);
    }
    return -std::log(x[0]) - std::log(x[1]);
  };
  Vec c(2);
  c << 1.0, 2.0;
  p.inequalities.push_back(linear_fn("budget", c, -3.0));
  p.x0 = Vec::Constant(2, 0.5);
  const SolveResult res = solve_smooth_convex(p);
  CHECK(res.x[0] == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(res.x[1] == doctest::Approx(0.75).epsilon(1e-5));
  for (std::size_t i = 1; i < res.report.objective_trace.size(); ++i)
    CHECK(res.report.objective_trace[i] >= res.report.objective_trace[i - 1] - 1e-9);
}

TEST_CASE("hermitian map round-trips and differentiates log det") {
  const HermitianMap map(3);
  RngStream rng(7);
  CMat a(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.complex_gaussian();
  const CMat x = a * a.adjoint() + CMat::Identity(3, 3);
  const Vec p = map.params(x);
  CHECK((map.matrix(p) - x).cwiseAbs().maxCoeff() <= 1e-12);

  CMat b(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = rng.complex_gaussian();
  const CMat q = b + b.adjoint();
  CHECK(map.trace_coeffs(q).dot(p) == doctest::Approx((q * x).trace().real()).epsilon(1e-12));

  // Finite-difference check of the -log det gradient and Hessian.
  const CMat w = x.inverse();
  const Vec grad = map.logdet_grad(w);
  const Mat hess = map.logdet_hess(w);
  const double f0 = -std::log(x.determinant().real());
  const double eps = 1e-6;
  for (int k = 0; k < map.count(); k += 2) {
    Vec pp = p;
    pp[k] += eps;
    const double fp = -std::log(map.matrix(pp).determinant().real());
    CHECK(std::abs((fp - f0) / eps - grad[k]) <= 2e-4 * std::max(1.0, std::abs(grad[k])));
    Vec gp = map.logdet_grad(map.matrix(pp).inverse());
    for (int l = 0; l < map.count(); l += 3)
      CHECK(std::abs((gp[l] - grad[l]) / eps - hess(k, l)) <=
            5e-4 * std::max(1.0, std::abs(hess(k, l))));
  }
}

TEST_CASE("barrier maximizes a trace objective over the unit-diagonal PSD cone") {
  // max Tr(q q^H V) s.t. diag V = 1, V PSD: optimum (sum |q_m|)^2, attained by
  // the phase-aligned rank-one matrix.
  RngStream rng(19);
  for (int rep = 0; rep < 5; ++rep) {
    const int m = 3;
    const HermitianMap map(m);
    CVec q(m);
    for (int j = 0; j < m; ++j) q[j] = rng.complex_gaussian();
    const CMat qmat = q * q.adjoint();

    SmoothConvexProblem p;
    p.n = map.count();
    p.objective = linear_fn("trace_gain", -map.trace_coeffs(qmat), 0.0);
    p.objective_sign = -1.0;
    p.psd_blocks = {{0, m}};
    p.a = Mat::Zero(m, p.n);
    p.b = Vec::Ones(m);
    for (int j = 0; j < m; ++j) p.a(j, j) = 1.0;
    Vec x0 = Vec::Zero(p.n);
    for (int j = 0; j < m; ++j) x0[j] = 1.0;
    p.x0 = x0;

    const SolveResult res = solve_smooth_convex(p);
    double expect = 0.0;
    for (int j = 0; j < m; ++j) expect += std::abs(q[j]);
    expect *= expect;
    CHECK(res.report.objective_trace.back() == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("gp solves the single-variable monomial program") {
  GpProgram gp;
  gp.n = 1;
  gp.log2_weights = Vec::Ones(1);
  gp.constraints.push_back({"a_r", {{0.25, Vec::Ones(1)}}});
  const Vec r = solve_gp(gp);
  CHECK(r[0] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("gp solutions satisfy every posynomial within 1e-7") {
  RngStream rng(53);
  for (int rep = 0; rep < 20; ++rep) {
    GpProgram gp;
    gp.n = 2;
    gp.log2_weights = Vec::Ones(2);
    Posynomial mix;
    mix.name = "mix";
    Vec e11(2), e01(2);
    e11 << 1.0, 1.0;
    e01 << 0.0, 1.0;
    mix.terms.push_back({rng.uniform(0.05, 0.5), e11});
    mix.terms.push_back({rng.uniform(0.05, 0.5), e01});
    gp.constraints.push_back(mix);
    Posynomial cap;
    cap.name = "cap";
    Vec e10(2);
    e10 << 1.0, 0.0;
    cap.terms.push_back({rng.uniform(0.02, 0.2), e10});
    gp.constraints.push_back(cap);

    const Vec r = solve_gp(gp);
    for (const Posynomial& posy : gp.constraints) {
      double v = 0.0;
      for (const Monomial& mono : posy.terms) {
        double term = mono.coeff;
        for (int j = 0; j < 2; ++j) term *= std::pow(r[j], mono.exponents[j]);
        v += term;
      }
      CHECK(v <= 1.0 + 1e-7);
    }
  }
}

TEST_CASE("gp rejects malformed programs") {
  GpProgram gp;
  gp.n = 1;
  gp.log2_weights = Vec::Ones(1);
  gp.constraints.push_back({"bad", {{-1.0, Vec::Ones(1)}}});
  CHECK_THROWS_AS(solve_gp(gp), std::invalid_argument);
}

TEST_CASE("gaussian randomization recovers an exact rank-one pair") {
  RngStream rng(61);
  const int m = 4;
  Vec bt(m), br(m), tt(m), tr(m);
  for (int j = 0; j < m; ++j) {
    bt[j] = rng.uniform(0.1, 0.9);
    br[j] = 1.0 - bt[j];
    tt[j] = rng.uniform(0.0, kTwoPi);
    tr[j] = rng.uniform(0.0, kTwoPi);
  }
  const StarCoefficients truth = project_feasible(bt, br, tt, tr);
  PsdPair pair;
  const CVec vt = truth.side_vector(Side::T);
  const CVec vr = truth.side_vector(Side::R);
  pair.v_t = vt * vt.adjoint();
  pair.v_r = vr * vr.adjoint();

  CVec q(m);
  for (int j = 0; j < m; ++j) q[j] = rng.complex_gaussian();
  auto score = [&](const StarCoefficients& c) {
    return effective_gain(c, q, Side::T) + effective_gain(c, q, Side::R);
  };
  RngStream draw(9);
  const RandomizeResult rr = gaussian_randomize(pair, score, 50, draw);
  CHECK(rr.score >= score(truth) - 1e-9);

  CHECK_THROWS_AS(gaussian_randomize(pair, score, 0, draw), std::domain_error);
}

TEST_CASE("gaussian randomization on a scalar surface reads the diagonals") {
  // The injected eigenvector candidate carries exactly the diagonal split;
  // score it by proximity so it wins over the random draws.
  PsdPair pair;
  pair.v_t = CMat::Constant(1, 1, Cplx(0.3, 0.0));
  pair.v_r = CMat::Constant(1, 1, Cplx(0.7, 0.0));
  RngStream rng(5);
  const RandomizeResult rr = gaussian_randomize(
      pair,
      [](const StarCoefficients& c) { return std::min(c.beta_t[0] / 0.3, c.beta_r[0] / 0.7); },
      10, rng);
  CHECK(rr.candidate == 0);
  CHECK(rr.coeffs.beta_t[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(rr.coeffs.beta_r[0] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("psd pair validation flags broken coupling") {
  PsdPair pair;
  pair.v_t = CMat::Identity(2, 2) * 0.6;
  pair.v_r = CMat::Identity(2, 2) * 0.6;
  CHECK_THROWS_AS(pair.validate(), std::invalid_argument);
}
