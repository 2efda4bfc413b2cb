#include "staralloc/noma.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace staralloc {

namespace {

constexpr double kZetaFloor = 1e-12;
constexpr double kOrderTieTol = 1e-10;  // relative; ties go to the T user
constexpr int kMaxCubIterations = 60;

// Variable layout of the relaxed coefficient matrices: one Hermitian block per
// side over that side's active elements.
struct SideBlocks {
  std::vector<int> active_t, active_r;
  HermitianMap map_t, map_r;
  int offset_t = 0, offset_r = 0;

  SideBlocks(const SurfaceMode& mode, int m_el)
      : active_t(mode.active_elements(Side::T, m_el)),
        active_r(mode.active_elements(Side::R, m_el)),
        map_t(static_cast<int>(active_t.size())),
        map_r(static_cast<int>(active_r.size())) {
    offset_t = 0;
    offset_r = map_t.count();
  }

  int var_count() const { return map_t.count() + map_r.count(); }
  const std::vector<int>& active(Side s) const { return s == Side::T ? active_t : active_r; }
  const HermitianMap& map(Side s) const { return s == Side::T ? map_t : map_r; }
  int offset(Side s) const { return s == Side::T ? offset_t : offset_r; }

  // Global coefficient vector c with Tr(Q_i X_side) = c . x for the user's
  // cascaded outer product; gains read |v^T q|^2 = v^H (conj(q) q^T) v.
  Vec gain_coeffs(const CVec& q_norm, Side s, int total_n) const {
    const auto& act = active(s);
    CVec u(static_cast<int>(act.size()));
    for (std::size_t j = 0; j < act.size(); ++j) u[static_cast<int>(j)] = std::conj(q_norm[act[j]]);
    const CMat qmat = u * u.adjoint();
    Vec c = Vec::Zero(total_n);
    c.segment(offset(s), map(s).count()) = map(s).trace_coeffs(qmat);
    return c;
  }

  // Embeds block parameters into full-size matrices (zeros elsewhere).
  PsdPair embed(const Vec& x, int m_el) const {
    PsdPair pair;
    pair.v_t = CMat::Zero(m_el, m_el);
    pair.v_r = CMat::Zero(m_el, m_el);
    const CMat xt = map_t.matrix(x.segment(offset_t, map_t.count()));
    const CMat xr = map_r.matrix(x.segment(offset_r, map_r.count()));
    for (std::size_t a = 0; a < active_t.size(); ++a)
      for (std::size_t b = 0; b < active_t.size(); ++b)
        pair.v_t(active_t[a], active_t[b]) = xt(static_cast<int>(a), static_cast<int>(b));
    for (std::size_t a = 0; a < active_r.size(); ++a)
      for (std::size_t b = 0; b < active_r.size(); ++b)
        pair.v_r(active_r[a], active_r[b]) = xr(static_cast<int>(a), static_cast<int>(b));
    return pair;
  }

  // Blend of the rank-one coefficient outer products with a scaled identity,
  // strictly definite and diagonally consistent with the coupling rows.
  Vec blended_start(const StarCoefficients& coeffs, const SurfaceMode& mode, double tau) const {
    Vec x(var_count());
    for (Side s : {Side::T, Side::R}) {
      const auto& act = active(s);
      const CVec v = coeffs.side_vector(s);
      CVec vs(static_cast<int>(act.size()));
      for (std::size_t j = 0; j < act.size(); ++j) vs[static_cast<int>(j)] = v[act[j]];
      const double diag = mode.is_star() ? 0.5 : 1.0;
      CMat blend = (1.0 - tau) * (vs * vs.adjoint());
      blend += tau * diag * CMat::Identity(vs.size(), vs.size());
      x.segment(offset(s), map(s).count()) = map(s).params(blend);
    }
    return x;
  }

  // Diagonal coupling rows: beta_t + beta_r = 1 per element for the STAR
  // surface, beta = 1 per active element for the conventional pair.
  void coupling_rows(const SurfaceMode& mode, int m_el, int total_n, Mat* a, Vec* b) const {
    if (mode.is_star()) {
      *a = Mat::Zero(m_el, total_n);
      *b = Vec::Ones(m_el);
      for (int m = 0; m < m_el; ++m) {
        (*a)(m, offset_t + m) = 1.0;  // diag of V_t, element m
        (*a)(m, offset_r + m) = 1.0;
      }
    } else {
      const int rows = static_cast<int>(active_t.size() + active_r.size());
      *a = Mat::Zero(rows, total_n);
      *b = Vec::Ones(rows);
      int row = 0;
      for (std::size_t j = 0; j < active_t.size(); ++j)
        (*a)(row++, offset_t + static_cast<int>(j)) = 1.0;
      for (std::size_t j = 0; j < active_r.size(); ++j)
        (*a)(row++, offset_r + static_cast<int>(j)) = 1.0;
    }
  }
};

Side side_of(const Scenario& scn, int user) {
  return scn.layout.region[user] == Region::T ? Side::T : Side::R;
}

// True per-pair NOMA rates under the given coefficients and powers
// (normalized gains); returns -inf when SIC fails on some channel.
double true_sum_rate_sic(const Scenario& scn, const Assignment& assign, const DecodingOrder& order,
                         const Vec& powers, const StarCoefficients& coeffs, bool* sic_ok) {
  double sum = 0.0;
  bool ok = true;
  for (int k = 0; k < assign.subchannels(); ++k) {
    const int i1 = order.strong[k];
    const int i2 = assign.pair[k][0] == i1 ? assign.pair[k][1] : assign.pair[k][0];
    const double g1 = effective_gain(coeffs, normalized_cascade(scn, k, i1), side_of(scn, i1));
    const double g2 = effective_gain(coeffs, normalized_cascade(scn, k, i2), side_of(scn, i2));
    if (g1 < g2) ok = false;
    sum += std::log2(1.0 + powers[i1] * g1);
    sum += std::log2(1.0 + powers[i2] * g2 / (powers[i1] * g2 + 1.0));
  }
  if (sic_ok) *sic_ok = ok;
  return ok ? sum : -std::numeric_limits<double>::infinity();
}

DecodingOrder order_from_gains(const Scenario& scn, const Assignment& assign,
                               const StarCoefficients& coeffs) {
  DecodingOrder order;
  order.strong.resize(assign.subchannels());
  for (int k = 0; k < assign.subchannels(); ++k) {
    const int a = assign.pair[k][0];
    const int b = assign.pair[k][1];
    const double ga = effective_gain(coeffs, normalized_cascade(scn, k, a), side_of(scn, a));
    const double gb = effective_gain(coeffs, normalized_cascade(scn, k, b), side_of(scn, b));
    const double scale = std::max({ga, gb, 1e-300});
    if (std::abs(ga - gb) <= kOrderTieTol * scale) {
      order.strong[k] = scn.layout.region[a] == Region::T ? a : b;
    } else {
      order.strong[k] = ga > gb ? a : b;
    }
  }
  return order;
}

}  // namespace

double noma_rate(double p_i, double p_partner, double gain_i, int pi_partner, double noise) {
  if (p_i < 0.0 || p_partner < 0.0) throw std::domain_error("noma_rate: negative power");
  return std::log2(1.0 + p_i * gain_i / (pi_partner * p_partner * gain_i + noise));
}

DecideOrdersResult decide_orders(const Scenario& scn, const Assignment& assign,
                                 const SurfaceMode& mode, RngStream& rng, int num_samples) {
  const int m_el = scn.cfg.num_elements;
  const SideBlocks blocks(mode, m_el);
  const int n = blocks.var_count();

  // Combined-gain objective: maximize sum_i Tr(Q_i V_{side(i)}).
  Vec cobj = Vec::Zero(n);
  for (int k = 0; k < assign.subchannels(); ++k)
    for (int user : assign.pair[k])
      cobj += blocks.gain_coeffs(normalized_cascade(scn, k, user), side_of(scn, user), n);

  SmoothConvexProblem prob;
  prob.n = n;
  prob.objective = linear_fn("combined_gain", -cobj, 0.0);
  prob.objective_sign = -1.0;
  prob.psd_blocks = {{blocks.offset_t, blocks.map_t.dim()}, {blocks.offset_r, blocks.map_r.dim()}};
  blocks.coupling_rows(mode, m_el, n, &prob.a, &prob.b);

  Vec x0 = Vec::Zero(n);
  const double diag0 = mode.is_star() ? 0.5 : 1.0;
  for (int j = 0; j < blocks.map_t.dim(); ++j) x0[blocks.offset_t + j] = diag0;
  for (int j = 0; j < blocks.map_r.dim(); ++j) x0[blocks.offset_r + j] = diag0;
  prob.x0 = x0;

  SolveResult res = solve_smooth_convex(prob);

  DecideOrdersResult out;
  out.report = res.report;
  out.relaxed = blocks.embed(res.x, m_el);
  out.relaxed_objective = cobj.dot(res.x);

  auto score = [&](const StarCoefficients& cand) {
    double s = 0.0;
    for (int k = 0; k < assign.subchannels(); ++k)
      for (int user : assign.pair[k])
        s += effective_gain(cand, normalized_cascade(scn, k, user), side_of(scn, user));
    return s;
  };
  const RandomizeResult rr = gaussian_randomize(out.relaxed, score, num_samples, rng, mode);
  out.coeffs = rr.coeffs;
  out.randomized_objective = rr.score;
  out.order = order_from_gains(scn, assign, out.coeffs);
  return out;
}

CubResult cub_beamforming(const Scenario& scn, const Assignment& assign,
                          const DecodingOrder& order, const Vec& powers,
                          const StarCoefficients& init, const SurfaceMode& mode, RngStream& rng,
                          bool allow_order_rederive, int num_samples) {
  const int m_el = scn.cfg.num_elements;
  const int big_k = assign.subchannels();
  const SideBlocks blocks(mode, m_el);
  const int nv = blocks.var_count();
  const int n = nv + 2 * big_k;
  const double qos_floor = std::exp2(scn.cfg.qos_rate) - 1.0;

  auto z1 = [nv](int k) { return nv + 2 * k; };
  auto z2 = [nv](int k) { return nv + 2 * k + 1; };

  // Per-channel constants: user (1) decoded second, user (2) first.
  std::vector<int> u1(big_k), u2(big_k);
  std::vector<double> p1(big_k), p2(big_k);
  std::vector<Vec> c1(big_k), c2(big_k);
  for (int k = 0; k < big_k; ++k) {
    u1[k] = order.strong[k];
    u2[k] = assign.pair[k][0] == u1[k] ? assign.pair[k][1] : assign.pair[k][0];
    p1[k] = powers[u1[k]];
    p2[k] = powers[u2[k]];
    c1[k] = blocks.gain_coeffs(normalized_cascade(scn, k, u1[k]), side_of(scn, u1[k]), n);
    c2[k] = blocks.gain_coeffs(normalized_cascade(scn, k, u2[k]), side_of(scn, u2[k]), n);
  }

  Mat acouple;
  Vec bcouple;
  blocks.coupling_rows(mode, m_el, n, &acouple, &bcouple);

  SmoothConvexProblem base;
  base.n = n;
  base.objective_sign = -1.0;
  base.objective.name = "sum_log_zeta";
  base.objective.eval = [nv, big_k](const Vec& x, Vec* grad, Mat* hess) {
    double acc = 0.0;
    for (int j = 0; j < 2 * big_k; ++j) {
      const double z = x[nv + j];
      acc -= std::log2(1.0 + z);
      if (grad) (*grad)[nv + j] -= 1.0 / (kLn2 * (1.0 + z));
      if (hess) (*hess)(nv + j, nv + j) += 1.0 / (kLn2 * (1.0 + z) * (1.0 + z));
    }
    return acc;
  };
  base.psd_blocks = {{blocks.offset_t, blocks.map_t.dim()}, {blocks.offset_r, blocks.map_r.dim()}};
  base.a = acouple;
  base.b = bcouple;

  for (int k = 0; k < big_k; ++k) {
    base.inequalities.push_back(linear_fn("sic_" + std::to_string(k), c2[k] - c1[k], 0.0, true));
    Vec cs = -p1[k] * c1[k];
    cs[z1(k)] += 1.0;
    base.inequalities.push_back(linear_fn("sinr1_" + std::to_string(k), cs, 0.0, true));
    for (int j : {z1(k), z2(k)}) {
      Vec cf = Vec::Zero(n);
      cf[j] = -1.0;
      base.inequalities.push_back(linear_fn("zeta_floor_" + std::to_string(j), cf, kZetaFloor, false));
      if (qos_floor > 0.0) {
        Vec cq = Vec::Zero(n);
        cq[j] = -1.0;
        base.inequalities.push_back(linear_fn("qos_" + std::to_string(j), cq, qos_floor, true));
      }
    }
  }

  // Start: blended relaxed matrices and their implied SINRs.
  Vec x = Vec::Zero(n);
  x.head(nv) = blocks.blended_start(apply_mode(init, mode), mode, 0.05);
  for (int k = 0; k < big_k; ++k) {
    const double t1 = c1[k].dot(x);
    const double t2 = c2[k].dot(x);
    x[z1(k)] = std::max(p1[k] * t1 * (1.0 - 1e-9), 2.0 * kZetaFloor);
    x[z2(k)] = std::max(p2[k] * t2 / (p1[k] * t2 + 1.0) * (1.0 - 1e-9), 2.0 * kZetaFloor);
  }

  CubResult out;
  out.order = order;
  {
    double obj0 = 0.0;
    for (int j = 0; j < 2 * big_k; ++j) obj0 += std::log2(1.0 + x[nv + j]);
    out.trace.push_back(obj0);
  }

  for (int iter = 0; iter < kMaxCubIterations; ++iter) {
    // CUB constant from the current iterate; the quadratic bound touches the
    // product T * zeta exactly there.
    std::vector<double> alpha(big_k);
    for (int k = 0; k < big_k; ++k) {
      const double t2 = std::max(c2[k].dot(x), 1e-300);
      alpha[k] = std::max(x[z2(k)], kZetaFloor) / t2;
    }

    SmoothConvexProblem prob = base;
    for (int k = 0; k < big_k; ++k) {
      SmoothFn cub;
      cub.name = "cub_" + std::to_string(k);
      const Vec c = c2[k];
      const double pa = p1[k], pb = p2[k], al = alpha[k];
      const int zi = z2(k);
      cub.eval = [c, pa, pb, al, zi](const Vec& xv, Vec* grad, Mat* hess) {
        const double t = c.dot(xv);
        const double z = xv[zi];
        const double val = pa * (0.5 * al * t * t + 0.5 * z * z / al) + z - pb * t;
        if (grad) {
          grad->noalias() += (pa * al * t - pb) * c;
          (*grad)[zi] += pa * z / al + 1.0;
        }
        if (hess) {
          hess->noalias() += (pa * al) * (c * c.transpose());
          (*hess)(zi, zi) += pa / al;
        }
        return val;
      };
      prob.inequalities.push_back(std::move(cub));
    }
    prob.x0 = x;

    SolveResult res = solve_smooth_convex(prob);
    double obj = 0.0;
    for (int j = 0; j < 2 * big_k; ++j) obj += std::log2(1.0 + res.x[nv + j]);

    out.iterations = iter + 1;
    out.last_report = res.report;
    if (obj < out.trace.back()) break;  // numerical fixed point; keep the better iterate
    x = res.x;
    out.trace.push_back(obj);
    if (obj - out.trace[out.trace.size() - 2] < scn.cfg.tolerance) break;
  }

  out.relaxed = blocks.embed(x.head(nv), m_el);

  auto score = [&](const StarCoefficients& cand) {
    bool ok = false;
    const double s = true_sum_rate_sic(scn, assign, order, powers, cand, &ok);
    return ok ? s : -std::numeric_limits<double>::infinity();
  };
  const RandomizeResult rr = gaussian_randomize(out.relaxed, score, num_samples, rng, mode);
  out.coeffs = rr.coeffs;
  out.randomized_sum_rate = rr.score;

  if (!std::isfinite(rr.score)) {
    // No SIC-consistent candidate: keep the eigenvector rounding.
    out.fallback_eigenvector = true;
    if (allow_order_rederive) {
      out.order = order_from_gains(scn, assign, out.coeffs);
      bool ok = false;
      out.randomized_sum_rate =
          true_sum_rate_sic(scn, assign, out.order, powers, out.coeffs, &ok);
      out.sic_consistent = ok;
    } else {
      double s = 0.0;
      for (int k = 0; k < big_k; ++k) {
        const double g1 =
            effective_gain(out.coeffs, normalized_cascade(scn, k, u1[k]), side_of(scn, u1[k]));
        const double g2 =
            effective_gain(out.coeffs, normalized_cascade(scn, k, u2[k]), side_of(scn, u2[k]));
        s += std::log2(1.0 + p1[k] * g1) + std::log2(1.0 + p2[k] * g2 / (p1[k] * g2 + 1.0));
      }
      out.randomized_sum_rate = s;
      out.sic_consistent = false;
    }
  }
  return out;
}

GpPowerResult gp_power(const Assignment& assign, const DecodingOrder& order, const Vec& norm_gain,
                       const SystemConfig& cfg) {
  const int big_k = assign.subchannels();
  const double gamma = cfg.qos_rate;

  // Normalized noise powers m = 1 / (|h|^2 / sigma^2); powers then come out
  // in watts directly.
  Vec m1(big_k), m2(big_k);
  std::vector<int> u1(big_k), u2(big_k);
  for (int k = 0; k < big_k; ++k) {
    u1[k] = order.strong[k];
    u2[k] = assign.pair[k][0] == u1[k] ? assign.pair[k][1] : assign.pair[k][0];
    if (!(norm_gain[u1[k]] > 0.0) || !(norm_gain[u2[k]] > 0.0))
      throw std::invalid_argument("gp_power: non-positive gain");
    m1[k] = 1.0 / norm_gain[u1[k]];
    m2[k] = 1.0 / norm_gain[u2[k]];
    if (m2[k] < m1[k] * (1.0 - 1e-12))
      throw std::invalid_argument("gp_power: decoding order inconsistent with gains");
  }

  GpProgram gp;
  gp.n = 2 * big_k;
  gp.log2_weights = Vec::Ones(gp.n);
  auto e = [&](int idx) {
    Vec v = Vec::Zero(gp.n);
    v[idx] = 1.0;
    return v;
  };
  for (int j = 0; j < gp.n; ++j) {
    gp.constraints.push_back({"r_floor_" + std::to_string(j), {{1.0, -e(j)}}});
    if (gamma > 0.0)
      gp.constraints.push_back({"qos_" + std::to_string(j), {{std::exp2(gamma), -e(j)}}});
  }
  {
    Posynomial budget;
    budget.name = "power_budget";
    const double denom = cfg.p_max + m2.sum();
    for (int k = 0; k < big_k; ++k) {
      budget.terms.push_back({m1[k] / denom, e(2 * k) + e(2 * k + 1)});
      if (m2[k] - m1[k] > 0.0) budget.terms.push_back({(m2[k] - m1[k]) / denom, e(2 * k + 1)});
    }
    gp.constraints.push_back(std::move(budget));
  }
  gp.r0 = Vec::Constant(gp.n, std::exp2(gamma) * 1.02 + 0.01);

  GpPowerResult out;
  const Vec r = solve_gp(gp, &out.report);

  out.rates.r = r;
  out.rates.m.resize(gp.n);
  out.powers = Vec::Zero(assign.users());
  double total = 0.0;
  for (int k = 0; k < big_k; ++k) {
    out.rates.m[2 * k] = m1[k];
    out.rates.m[2 * k + 1] = m2[k];
    const double pa = (r[2 * k] - 1.0) * m1[k];
    const double pb = (r[2 * k + 1] - 1.0) * (m2[k] + pa);
    out.powers[u1[k]] = pa;
    out.powers[u2[k]] = pb;
    total += pa + pb;

    const double r1_check = std::log2(1.0 + pa / m1[k]);
    const double r2_check = std::log2(1.0 + pb / (pa + m2[k]));
    if (std::abs(r1_check - std::log2(r[2 * k])) > 1e-8 ||
        std::abs(r2_check - std::log2(r[2 * k + 1])) > 1e-8)
      throw NumericalError("gp_power: rate recovery identity failed");
  }
  if (std::abs(total - cfg.p_max) > 1e-6 * std::max(1.0, cfg.p_max))
    throw NumericalError("gp_power: power budget does not bind");
  return out;
}

NomaSolution three_step_noma(const Scenario& scn, const Assignment& assign,
                             const SurfaceMode& mode, RngStream& rng, int num_samples) {
  NomaSolution sol;
  sol.assign = assign;

  const DecideOrdersResult ord = decide_orders(scn, assign, mode, rng, num_samples);
  sol.stages.push_back({"decode_order", ord.relaxed_objective,
                        ord.report.newton_iterations, true});

  const Vec uniform = Vec::Constant(scn.cfg.num_users, scn.cfg.p_max / scn.cfg.num_users);
  const CubResult cub =
      cub_beamforming(scn, assign, ord.order, uniform, ord.coeffs, mode, rng, true, num_samples);
  sol.order = cub.order;
  sol.coeffs = cub.coeffs;
  sol.cub_trace = cub.trace;
  sol.fallback_eigenvector = cub.fallback_eigenvector;
  sol.stages.push_back({"cub_beamforming", cub.trace.back(), cub.iterations, cub.sic_consistent});

  Vec gains(scn.cfg.num_users);
  for (int i = 0; i < scn.cfg.num_users; ++i)
    gains[i] = effective_gain(sol.coeffs, normalized_cascade(scn, assign.channel_of[i], i),
                              side_of(scn, i));
  const GpPowerResult gpr = gp_power(assign, sol.order, gains, scn.cfg);
  sol.powers = gpr.powers;

  sol.user_rates = Vec::Zero(scn.cfg.num_users);
  for (int k = 0; k < assign.subchannels(); ++k) {
    const int i1 = sol.order.strong[k];
    const int i2 = assign.pair[k][0] == i1 ? assign.pair[k][1] : assign.pair[k][0];
    sol.user_rates[i1] = std::log2(gpr.rates.r[2 * k]);
    sol.user_rates[i2] = std::log2(gpr.rates.r[2 * k + 1]);
  }
  sol.sum_rate = sol.user_rates.sum();
  sol.stages.push_back({"gp_power", sol.sum_rate, gpr.report.newton_iterations, true});
  return sol;
}

std::string stage_diagnostics_csv(const std::vector<StageDiag>& stages) {
  std::ostringstream out;
  out.precision(17);
  out << "stage,objective,iterations,feasible\n";
  for (const StageDiag& s : stages)
    out << s.stage << ',' << s.objective << ',' << s.iterations << ',' << (s.feasible ? 1 : 0)
        << '\n';
  return out.str();
}

}  // namespace staralloc
