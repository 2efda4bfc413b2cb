#include "staralloc/oma.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace staralloc {

namespace {

constexpr double kOmegaFloor = 1e-6;
// Per-element coupling band [kShellLow, 1]. The band must be wide: a tangent
// step of size d raises |u|^2 by d^2, so a thin band freezes the Newton
// iterates. The upper bound is active at optima, which keeps the output
// projection onto the exact simplex a no-op to first order.
constexpr double kShellLow = 0.5;
constexpr double kWarmShrink = 1e-6;   // warm-start pullback from the upper bound
constexpr double kChiFloor = 1e-14;
// Power/time enforces a hair above the QoS target so the beamforming warm
// start (radius pulled back by kWarmShrink) stays strictly feasible;
// beamforming itself allows a hair below.
constexpr double kQosMarginUp = 1e-5;
constexpr double kQosSlack = 1e-9;

// omega * log2(1 + p * g / omega) and partial derivatives. Writes the 2x2
// Hessian block and gradient entries for (p, omega) when requested.
struct RateTerm {
  double value;
  double dp, domega;
  double dpp, dpo, doo;
};

RateTerm rate_term(double p, double omega, double g) {
  RateTerm t{};
  const double den = omega + p * g;
  const double u = p * g / omega;
  t.value = omega * std::log2(1.0 + u);
  t.dp = g * omega / (kLn2 * den);
  t.domega = (std::log(1.0 + u) - p * g / den) / kLn2;
  t.dpp = -g * g * omega / (kLn2 * den * den);
  t.dpo = p * g * g / (kLn2 * den * den);
  t.doo = -p * p * g * g / (kLn2 * omega * den * den);
  return t;
}

}  // namespace

double oma_rate(double p, double omega, double gain, double noise) {
  if (p < 0.0) throw std::domain_error("oma_rate: negative power");
  if (omega == 0.0) {
    if (p > 0.0) throw std::domain_error("oma_rate: omega = 0 with positive power");
    return 0.0;
  }
  if (omega < 0.0 || omega > 1.0) throw std::domain_error("oma_rate: omega outside [0, 1]");
  return omega * std::log2(1.0 + p * gain / (omega * noise));
}

Vec assigned_gains(const Scenario& scn, const Assignment& assign, const StarCoefficients& coeffs) {
  const int num_users = scn.cfg.num_users;
  Vec g(num_users);
  for (int i = 0; i < num_users; ++i) {
    const int k = assign.channel_of[i];
    const Side side = scn.layout.region[i] == Region::T ? Side::T : Side::R;
    g[i] = effective_gain(coeffs, normalized_cascade(scn, k, i), side);
  }
  return g;
}

OmaAllocation solve_power_time(const Assignment& assign, const Vec& norm_gain,
                               const SystemConfig& cfg, std::optional<double> fixed_omega,
                               SolveReport* report, Vec* qos_multipliers) {
  const int num_users = static_cast<int>(norm_gain.size());
  const int n = 2 * num_users;
  const double gamma = cfg.qos_rate;
  auto pi = [](int i) { return i; };
  auto oi = [num_users](int i) { return num_users + i; };

  SmoothConvexProblem prob;
  prob.n = n;
  prob.objective_sign = -1.0;
  prob.objective.name = "sum_rate";
  prob.objective.eval = [norm_gain, num_users, pi, oi](const Vec& x, Vec* grad, Mat* hess) {
    double acc = 0.0;
    for (int i = 0; i < num_users; ++i) {
      const RateTerm t = rate_term(x[pi(i)], x[oi(i)], norm_gain[i]);
      acc -= t.value;
      if (grad) {
        (*grad)[pi(i)] -= t.dp;
        (*grad)[oi(i)] -= t.domega;
      }
      if (hess) {
        (*hess)(pi(i), pi(i)) -= t.dpp;
        (*hess)(oi(i), oi(i)) -= t.doo;
        (*hess)(pi(i), oi(i)) -= t.dpo;
        (*hess)(oi(i), pi(i)) -= t.dpo;
      }
    }
    return acc;
  };

  // Equalities: time shares sum to one per channel, or pinned when fixed.
  if (fixed_omega) {
    prob.a = Mat::Zero(num_users, n);
    prob.b = Vec::Constant(num_users, *fixed_omega);
    for (int i = 0; i < num_users; ++i) prob.a(i, oi(i)) = 1.0;
  } else {
    const int big_k = assign.subchannels();
    prob.a = Mat::Zero(big_k, n);
    prob.b = Vec::Ones(big_k);
    for (int k = 0; k < big_k; ++k) {
      prob.a(k, oi(assign.pair[k][0])) = 1.0;
      prob.a(k, oi(assign.pair[k][1])) = 1.0;
    }
  }

  {
    Vec c = Vec::Zero(n);
    for (int i = 0; i < num_users; ++i) c[pi(i)] = 1.0;
    prob.inequalities.push_back(linear_fn("power_budget", c, -cfg.p_max, false));
  }
  for (int i = 0; i < num_users; ++i) {
    Vec c = Vec::Zero(n);
    c[pi(i)] = -1.0;
    prob.inequalities.push_back(linear_fn("power_floor_" + std::to_string(i), c, 0.0, false));
    Vec co = Vec::Zero(n);
    co[oi(i)] = -1.0;
    prob.inequalities.push_back(linear_fn("omega_floor_" + std::to_string(i), co, kOmegaFloor, false));
  }
  if (gamma > 0.0) {
    for (int i = 0; i < num_users; ++i) {
      SmoothFn fn;
      fn.name = "qos_" + std::to_string(i);
      const double g = norm_gain[i];
      fn.eval = [g, gamma, pi, oi, i](const Vec& x, Vec* grad, Mat* hess) {
        const RateTerm t = rate_term(x[pi(i)], x[oi(i)], g);
        if (grad) {
          (*grad)[pi(i)] -= t.dp;
          (*grad)[oi(i)] -= t.domega;
        }
        if (hess) {
          (*hess)(pi(i), pi(i)) -= t.dpp;
          (*hess)(oi(i), oi(i)) -= t.doo;
          (*hess)(pi(i), oi(i)) -= t.dpo;
          (*hess)(oi(i), pi(i)) -= t.dpo;
        }
        return (gamma + kQosMarginUp) - t.value;
      };
      prob.inequalities.push_back(std::move(fn));
    }
  }

  // Start: equal time shares and QoS-aware powers; phase I rescues the rest.
  const double om0 = fixed_omega.value_or(0.5);
  Vec x0 = Vec::Zero(n);
  Vec p_req = Vec::Zero(num_users);
  bool finite_req = true;
  for (int i = 0; i < num_users; ++i) {
    x0[oi(i)] = om0;
    if (gamma > 0.0) {
      if (norm_gain[i] <= 0.0) {
        finite_req = false;
        break;
      }
      p_req[i] = om0 * (std::exp2(gamma / om0) - 1.0) / norm_gain[i];
    }
  }
  if (finite_req && p_req.sum() <= 0.9 * cfg.p_max) {
    const double spread = 0.5 * (cfg.p_max - p_req.sum()) / num_users;
    for (int i = 0; i < num_users; ++i) x0[pi(i)] = p_req[i] + spread;
  } else {
    for (int i = 0; i < num_users; ++i) x0[pi(i)] = cfg.p_max / (num_users + 1);
  }
  prob.x0 = x0;

  SolveResult res = solve_smooth_convex(prob);
  if (report) *report = res.report;
  if (qos_multipliers) {
    // QoS rows sit at the tail of the inequality list when gamma > 0.
    *qos_multipliers = Vec::Zero(num_users);
    if (gamma > 0.0) {
      const int first = static_cast<int>(prob.inequalities.size()) - num_users;
      for (int i = 0; i < num_users; ++i) {
        const double mu = res.report.ineq_multipliers[first + i];
        (*qos_multipliers)[i] = std::isfinite(mu) ? std::min(mu, 1e6) : 1e6;
      }
    }
  }
  OmaAllocation alloc;
  alloc.p = res.x.head(num_users);
  alloc.omega = res.x.tail(num_users);
  return alloc;
}

ScaState sca_state_from(const Scenario& scn, const Assignment& assign,
                        const StarCoefficients& coeffs) {
  const int num_users = scn.cfg.num_users;
  ScaState st;
  st.a_bar.resize(num_users);
  st.b_bar.resize(num_users);
  for (int i = 0; i < num_users; ++i) {
    const int k = assign.channel_of[i];
    const Side side = scn.layout.region[i] == Region::T ? Side::T : Side::R;
    const CVec q = normalized_cascade(scn, k, i);
    const CVec v = coeffs.side_vector(side);
    Cplx acc(0.0, 0.0);
    for (int m = 0; m < q.size(); ++m) acc += v[m] * q[m];
    st.a_bar[i] = acc.real();
    st.b_bar[i] = acc.imag();
  }
  return st;
}

BeamformingResult solve_beamforming_oma(const Scenario& scn, const Assignment& assign,
                                        const OmaAllocation& alloc, const ScaState& prior,
                                        const StarCoefficients& warm, const SurfaceMode& mode,
                                        const Vec* rate_weights, bool enforce_qos) {
  const int m_el = scn.cfg.num_elements;
  const int num_users = scn.cfg.num_users;
  const int n = 4 * m_el + 3 * num_users;
  const double gamma = scn.cfg.qos_rate;

  auto re_idx = [m_el](Side s, int m) { return (s == Side::T ? 0 : 2 * m_el) + m; };
  auto im_idx = [m_el](Side s, int m) { return (s == Side::T ? m_el : 3 * m_el) + m; };
  auto a_idx = [m_el](int i) { return 4 * m_el + i; };
  auto b_idx = [m_el, num_users](int i) { return 4 * m_el + num_users + i; };
  auto c_idx = [m_el, num_users](int i) { return 4 * m_el + 2 * num_users + i; };

  std::vector<Side> side(num_users);
  std::vector<CVec> q(num_users);
  for (int i = 0; i < num_users; ++i) {
    side[i] = scn.layout.region[i] == Region::T ? Side::T : Side::R;
    q[i] = normalized_cascade(scn, assign.channel_of[i], i);
  }

  SmoothConvexProblem prob;
  prob.n = n;
  prob.objective_sign = -1.0;
  prob.objective.name = "sum_rate_chi";
  {
    const Vec p = alloc.p;
    const Vec om = alloc.omega;
    const Vec w = rate_weights ? *rate_weights : Vec::Ones(num_users);
    prob.objective.eval = [p, om, w, c_idx, num_users](const Vec& x, Vec* grad, Mat* hess) {
      double acc = 0.0;
      for (int i = 0; i < num_users; ++i) {
        const double den = om[i] + p[i] * x[c_idx(i)];
        acc -= w[i] * om[i] * std::log2(1.0 + p[i] * x[c_idx(i)] / om[i]);
        if (grad) (*grad)[c_idx(i)] -= w[i] * om[i] * p[i] / (kLn2 * den);
        if (hess) (*hess)(c_idx(i), c_idx(i)) += w[i] * om[i] * p[i] * p[i] / (kLn2 * den * den);
      }
      return acc;
    };
  }

  // Equalities: amplitude auxiliaries and conventional-pair pins.
  std::vector<int> pinned;
  for (int m = 0; m < m_el; ++m)
    for (Side s : {Side::T, Side::R})
      if (!mode.active(s, m, m_el)) {
        pinned.push_back(re_idx(s, m));
        pinned.push_back(im_idx(s, m));
      }
  const int eq_rows = 2 * num_users + static_cast<int>(pinned.size());
  prob.a = Mat::Zero(eq_rows, n);
  prob.b = Vec::Zero(eq_rows);
  int row = 0;
  for (int i = 0; i < num_users; ++i) {
    for (int m = 0; m < m_el; ++m) {
      prob.a(row, re_idx(side[i], m)) = q[i][m].real();
      prob.a(row, im_idx(side[i], m)) = -q[i][m].imag();
      prob.a(row + 1, re_idx(side[i], m)) = q[i][m].imag();
      prob.a(row + 1, im_idx(side[i], m)) = q[i][m].real();
    }
    prob.a(row, a_idx(i)) = -1.0;
    prob.a(row + 1, b_idx(i)) = -1.0;
    row += 2;
  }
  for (int idx : pinned) prob.a(row++, idx) = 1.0;

  // Per-element coupling band: 1 - shell <= |u_t|^2 + |u_r|^2 <= 1. The lower
  // shell is the one deliberately nonconvex constraint; it only keeps the
  // output projection a no-op to first order.
  for (int m = 0; m < m_el; ++m) {
    const int idx[4] = {re_idx(Side::T, m), im_idx(Side::T, m), re_idx(Side::R, m),
                        im_idx(Side::R, m)};
    SmoothFn hi;
    hi.name = "couple_hi_" + std::to_string(m);
    hi.relaxable = false;
    hi.eval = [idx](const Vec& x, Vec* grad, Mat* hess) {
      double s = 0.0;
      for (int t = 0; t < 4; ++t) s += x[idx[t]] * x[idx[t]];
      if (grad)
        for (int t = 0; t < 4; ++t) (*grad)[idx[t]] += 2.0 * x[idx[t]];
      if (hess)
        for (int t = 0; t < 4; ++t) (*hess)(idx[t], idx[t]) += 2.0;
      return s - 1.0;
    };
    prob.inequalities.push_back(std::move(hi));

    SmoothFn lo;
    lo.name = "couple_lo_" + std::to_string(m);
    lo.relaxable = false;
    lo.check_convex = false;
    lo.eval = [idx](const Vec& x, Vec* grad, Mat* hess) {
      double s = 0.0;
      for (int t = 0; t < 4; ++t) s += x[idx[t]] * x[idx[t]];
      if (grad)
        for (int t = 0; t < 4; ++t) (*grad)[idx[t]] -= 2.0 * x[idx[t]];
      if (hess)
        for (int t = 0; t < 4; ++t) (*hess)(idx[t], idx[t]) -= 2.0;
      return kShellLow - s;
    };
    prob.inequalities.push_back(std::move(lo));
  }

  // SCA caps: chi below the tangent of a^2 + b^2 at the stationary point.
  Vec abar = prior.a_bar, bbar = prior.b_bar;
  for (int i = 0; i < num_users; ++i) {
    const double scale = q[i].squaredNorm();
    if (abar[i] * abar[i] + bbar[i] * bbar[i] < 1e-10 * scale) {
      abar[i] = std::sqrt(1e-6 * scale);  // degenerate stationary point guard
      bbar[i] = 0.0;
    }
    Vec c = Vec::Zero(n);
    c[c_idx(i)] = 1.0;
    c[a_idx(i)] = -2.0 * abar[i];
    c[b_idx(i)] = -2.0 * bbar[i];
    prob.inequalities.push_back(linear_fn("sca_cap_" + std::to_string(i), c,
                                          abar[i] * abar[i] + bbar[i] * bbar[i], true));
    Vec cf = Vec::Zero(n);
    cf[c_idx(i)] = -1.0;
    prob.inequalities.push_back(
        linear_fn("chi_floor_" + std::to_string(i), cf, kChiFloor, false));
  }

  if (gamma > 0.0 && enforce_qos) {
    for (int i = 0; i < num_users; ++i) {
      SmoothFn fn;
      fn.name = "qos_" + std::to_string(i);
      const double p = alloc.p[i];
      const double om = alloc.omega[i];
      fn.eval = [p, om, gamma, c_idx, i](const Vec& x, Vec* grad, Mat* hess) {
        const double chi = x[c_idx(i)];
        const double den = om + p * chi;
        if (grad) (*grad)[c_idx(i)] -= om * p / (kLn2 * den);
        if (hess) (*hess)(c_idx(i), c_idx(i)) += om * p * p / (kLn2 * den * den);
        return (gamma - kQosSlack) - om * std::log2(1.0 + p * chi / om);
      };
      prob.inequalities.push_back(std::move(fn));
    }
  }

  // Warm start from the current coefficients, pulled just inside the band.
  const double shrink = std::sqrt(1.0 - kWarmShrink);
  Vec x0 = Vec::Zero(n);
  const CVec vt = warm.side_vector(Side::T);
  const CVec vr = warm.side_vector(Side::R);
  for (int m = 0; m < m_el; ++m) {
    x0[re_idx(Side::T, m)] = shrink * vt[m].real();
    x0[im_idx(Side::T, m)] = shrink * vt[m].imag();
    x0[re_idx(Side::R, m)] = shrink * vr[m].real();
    x0[im_idx(Side::R, m)] = shrink * vr[m].imag();
  }
  for (int i = 0; i < num_users; ++i) {
    Cplx acc(0.0, 0.0);
    for (int m = 0; m < m_el; ++m) {
      const Cplx u(x0[re_idx(side[i], m)], x0[im_idx(side[i], m)]);
      acc += u * q[i][m];
    }
    x0[a_idx(i)] = acc.real();
    x0[b_idx(i)] = acc.imag();
    const double tangent = 2.0 * abar[i] * acc.real() + 2.0 * bbar[i] * acc.imag() -
                           (abar[i] * abar[i] + bbar[i] * bbar[i]);
    double chi = std::min(std::norm(acc), tangent) * (1.0 - 1e-9);
    x0[c_idx(i)] = std::max(chi, 2.0 * kChiFloor);
  }
  prob.x0 = x0;

  SolveResult res = solve_smooth_convex(prob);

  Vec beta_t(m_el), beta_r(m_el), theta_t(m_el), theta_r(m_el);
  for (int m = 0; m < m_el; ++m) {
    const Cplx ut(res.x[re_idx(Side::T, m)], res.x[im_idx(Side::T, m)]);
    const Cplx ur(res.x[re_idx(Side::R, m)], res.x[im_idx(Side::R, m)]);
    beta_t[m] = std::norm(ut);
    beta_r[m] = std::norm(ur);
    theta_t[m] = std::arg(ut);
    theta_r[m] = std::arg(ur);
  }
  BeamformingResult out;
  out.coeffs = apply_mode(project_feasible(beta_t, beta_r, theta_t, theta_r), mode);
  out.state = sca_state_from(scn, assign, out.coeffs);
  out.report = res.report;
  return out;
}

OmaSolution alternating_optimize_oma(const Scenario& scn, const Assignment& assign,
                                     const StarCoefficients& init, const SurfaceMode& mode) {
  constexpr int kMaxIterations = 50;
  const SystemConfig& cfg = scn.cfg;
  const int num_users = cfg.num_users;

  OmaSolution sol;
  sol.assign = assign;
  sol.coeffs = apply_mode(init, mode);
  sol.alloc.p = Vec::Constant(num_users, cfg.p_max / num_users);
  sol.alloc.omega = Vec::Constant(num_users, 0.5);

  Vec gains = assigned_gains(scn, assign, sol.coeffs);
  auto sum_rate = [&](const OmaAllocation& alloc, const Vec& g) {
    double s = 0.0;
    for (int i = 0; i < num_users; ++i) s += alloc.omega[i] * std::log2(1.0 + alloc.p[i] * g[i] / alloc.omega[i]);
    return s;
  };
  sol.trace.push_back(sum_rate(sol.alloc, gains));
  sol.termination = "iteration_cap";

  // Iteration body per the alternating scheme: the beamforming subproblem is
  // run to convergence (nested SCA passes) at the frozen allocation, then an
  // exact power/time solve realizes its value and supplies the next QoS
  // multipliers. The SCA objective weights each user's rate by 1 + multiplier,
  // which is the reduced gradient of the full problem in the coefficients
  // (envelope theorem); without active QoS the weights are all one and the
  // pass is the plain sum-rate SCA step. Iterates are accepted only when the
  // achieved sum-rate improves, so the trace is monotone by construction.
  constexpr int kMaxScaPasses = 30;
  auto qos_ok = [&](const OmaAllocation& alloc, const Vec& g) {
    if (cfg.qos_rate <= 0.0) return true;
    for (int i = 0; i < num_users; ++i) {
      const double r = alloc.omega[i] * std::log2(1.0 + alloc.p[i] * g[i] / alloc.omega[i]);
      if (r < cfg.qos_rate - 1e-7) return false;
    }
    return true;
  };
  auto weighted_sum = [&](const OmaAllocation& alloc, const Vec& g, const Vec& w) {
    double s = 0.0;
    for (int i = 0; i < num_users; ++i)
      s += w[i] * alloc.omega[i] * std::log2(1.0 + alloc.p[i] * g[i] / alloc.omega[i]);
    return s;
  };

  Vec qos_mu = Vec::Zero(num_users);
  sol.alloc = solve_power_time(assign, gains, cfg, std::nullopt, nullptr, &qos_mu);
  double current = sum_rate(sol.alloc, gains);

  for (int it = 1; it <= kMaxIterations; ++it) {
    double gain = 0.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      // Attempt 0 maximizes the Lagrangian: multiplier-weighted rates with
      // the hard QoS rows dropped (the next power/time solve restores
      // feasibility exactly). Attempt 1 is the plain constrained step.
      const bool lagrangian = attempt == 0 && cfg.qos_rate > 0.0;
      const Vec weights = lagrangian ? Vec(Vec::Ones(num_users) + qos_mu)
                                     : Vec(Vec::Ones(num_users));
      // Nested SCA at the frozen allocation, monotone in the weighted sum.
      StarCoefficients coeffs = sol.coeffs;
      Vec gains_c = gains;
      double wbest = weighted_sum(sol.alloc, gains, weights);
      for (int pass = 0; pass < kMaxScaPasses; ++pass) {
        const ScaState prior = sca_state_from(scn, assign, coeffs);
        const BeamformingResult bf = solve_beamforming_oma(scn, assign, sol.alloc, prior, coeffs,
                                                           mode, &weights, !lagrangian);
        const Vec gains_bf = assigned_gains(scn, assign, bf.coeffs);
        const double wnext = weighted_sum(sol.alloc, gains_bf, weights);
        if (wnext <= wbest || (!lagrangian && !qos_ok(sol.alloc, gains_bf))) break;
        const double wgain = wnext - wbest;
        coeffs = bf.coeffs;
        gains_c = gains_bf;
        wbest = wnext;
        if (wgain < 0.01 * cfg.tolerance) break;
      }

      // Realize the candidate's value through an exact power/time solve.
      try {
        Vec mu_next;
        const OmaAllocation alloc_next =
            solve_power_time(assign, gains_c, cfg, std::nullopt, nullptr, &mu_next);
        const double s_next = sum_rate(alloc_next, gains_c);
        if (std::getenv("STARALLOC_AO_DEBUG"))
          std::fprintf(stderr, "it=%d attempt=%d wbest=%.9f s_next=%.9f current=%.9f qos=%d mu_max=%.3g\n",
                       it, attempt, wbest, s_next, current, qos_ok(alloc_next, gains_c) ? 1 : 0,
                       qos_mu.size() ? qos_mu.maxCoeff() : 0.0);
        if (s_next > current && qos_ok(alloc_next, gains_c)) {
          gain = s_next - current;
          current = s_next;
          sol.coeffs = coeffs;
          sol.alloc = alloc_next;
          gains = gains_c;
          qos_mu = mu_next;
          break;
        }
      } catch (const InfeasibleError&) {
        // The pass left the feasible region; keep the accepted state.
      }
      if (cfg.qos_rate <= 0.0) break;  // both attempts coincide
    }
    sol.trace.push_back(current);
    sol.iterations = it;
    if (gain < cfg.tolerance) {
      sol.termination = "converged";
      break;
    }
  }

  sol.user_rates.resize(num_users);
  for (int i = 0; i < num_users; ++i)
    sol.user_rates[i] =
        sol.alloc.omega[i] * std::log2(1.0 + sol.alloc.p[i] * gains[i] / sol.alloc.omega[i]);
  sol.sum_rate = sol.user_rates.sum();
  return sol;
}

}  // namespace staralloc
