#include "staralloc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace staralloc {

namespace {

std::uint64_t assignment_hash(const Assignment& a) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int c : a.channel_of) {
    h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL;
    h *= 1099511628211ULL;
  }
  return h;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

template <typename F>
void parallel_for(int n, F&& body) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= n) break;
          body(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string timestamp_line() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return std::string("# generated_at=") + buf + "\n";
}

std::string csv_header(const ExperimentSpec& spec, const std::string& experiment) {
  std::ostringstream out;
  out << "# star-alloc v" << kVersion << " experiment=" << experiment << "\n";
  out << timestamp_line();
  out << "# config K=" << spec.base_cfg.num_subchannels << " I=" << spec.base_cfg.num_users
      << " M=" << spec.base_cfg.num_elements << " p_max=" << spec.base_cfg.p_max
      << " qos=" << spec.base_cfg.qos_rate << " scheme=" << to_string(spec.scheme)
      << " assign=" << to_string(spec.assign)
      << " surface=" << (spec.surface.is_star() ? "star" : "cr") << " trials=" << spec.trials
      << " seed=" << spec.seed_base << "\n";
  return out.str();
}

std::string join_rates(const Vec& rates) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < rates.size(); ++i) {
    if (i) out << '|';
    out << rates[i];
  }
  return out.str();
}

struct PipelineResult {
  TrialOutcome outcome;
};

// Runs the continuous pipeline for a fixed assignment; used directly and as
// the exhaustive-search inner solver.
TrialOutcome run_pipeline(const Scenario& scn, const Assignment& assign,
                          const StarCoefficients& init, Scheme scheme, const SurfaceMode& mode,
                          std::uint64_t trial_seed) {
  TrialOutcome out;
  out.record.seed = trial_seed;
  const double t0 = now_seconds();
  try {
    if (scheme == Scheme::Oma) {
      OmaSolution sol = alternating_optimize_oma(scn, assign, init, mode);
      out.record.sum_rate = sol.sum_rate;
      out.record.user_rates = sol.user_rates;
      out.record.iterations = sol.iterations;
      out.record.feasible = true;
      out.oma = std::move(sol);
    } else {
      RngStream rng(RngStream::mix(trial_seed, assignment_hash(assign)));
      NomaSolution sol = three_step_noma(scn, assign, mode, rng);
      out.record.sum_rate = sol.sum_rate;
      out.record.user_rates = sol.user_rates;
      out.record.iterations = static_cast<int>(sol.cub_trace.size());
      out.record.feasible = true;
      out.noma = std::move(sol);
    }
  } catch (const InfeasibleError& e) {
    out.record.feasible = false;
    out.record.note = e.what();
  }
  out.record.wall_time_s = now_seconds() - t0;

  if (out.record.feasible) {
    const ValidationReport rep = out.oma ? validate_solution(scn, mode, *out.oma)
                                         : validate_solution(scn, mode, *out.noma);
    if (!rep.ok) {
      out.record.feasible = false;
      out.record.note = "validator: " + rep.joined();
    }
  }
  return out;
}

}  // namespace

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("STAR_ALLOC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Convergence: return "convergence";
    case ExperimentId::SumrateVsM: return "sumrate_vs_M";
    case ExperimentId::CdfAssignment: return "cdf_assignment";
    case ExperimentId::DecodingOrders: return "decoding_orders";
    case ExperimentId::AmplitudeProfile: return "amplitude_profile";
  }
  return "unknown";
}

std::string to_string(AssignMethod m) {
  switch (m) {
    case AssignMethod::Swap: return "swap";
    case AssignMethod::Lma: return "lma";
    case AssignMethod::Sma: return "sma";
    case AssignMethod::Exhaustive: return "exhaustive";
  }
  return "unknown";
}

std::string to_string(Scheme s) { return s == Scheme::Oma ? "oma" : "noma"; }

ExperimentId parse_experiment(const std::string& s) {
  if (s == "convergence") return ExperimentId::Convergence;
  if (s == "sumrate_vs_M") return ExperimentId::SumrateVsM;
  if (s == "cdf_assignment") return ExperimentId::CdfAssignment;
  if (s == "decoding_orders") return ExperimentId::DecodingOrders;
  if (s == "amplitude_profile") return ExperimentId::AmplitudeProfile;
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

AssignMethod parse_assign(const std::string& s) {
  if (s == "swap") return AssignMethod::Swap;
  if (s == "lma") return AssignMethod::Lma;
  if (s == "sma") return AssignMethod::Sma;
  if (s == "exhaustive") return AssignMethod::Exhaustive;
  throw std::invalid_argument("unknown assignment method '" + s + "'");
}

Scheme parse_scheme(const std::string& s) {
  if (s == "oma") return Scheme::Oma;
  if (s == "noma") return Scheme::Noma;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

SurfaceMode parse_surface(const std::string& s) {
  if (s == "star") return SurfaceMode::star();
  if (s == "cr") return SurfaceMode::conventional_pair();
  throw std::invalid_argument("unknown surface mode '" + s + "'");
}

void ExperimentSpec::validate() const {
  base_cfg.validate();
  if (trials < 1) throw std::invalid_argument("trial count must be >= 1");
  for (double v : sweep)
    if (!(v > 0.0)) throw std::invalid_argument("sweep values must be positive");
}

TrialOutcome run_trial(const SystemConfig& cfg, Scheme scheme, AssignMethod method,
                       const SurfaceMode& mode, std::uint64_t seed) {
  const Scenario scn = make_scenario(cfg, seed);

  if (method == AssignMethod::Exhaustive) {
    // Full inner pipeline per candidate; best solution kept alongside.
    TrialOutcome best;
    best.record.seed = seed;
    best.record.feasible = false;
    best.record.note = "all candidates infeasible";
    const StarCoefficients init = matching_init_coefficients(scn, mode);
    double best_rate = -1.0;
    const double t0 = now_seconds();
    try {
      exhaustive_assignment(cfg.num_users, cfg.num_subchannels,
                            [&](const Assignment& cand) -> std::optional<double> {
                              TrialOutcome o = run_pipeline(scn, cand, init, scheme, mode, seed);
                              if (!o.record.feasible) return std::nullopt;
                              const double rate = o.record.sum_rate;
                              if (rate > best_rate) {
                                best_rate = rate;
                                best = std::move(o);
                              }
                              return rate;
                            });
    } catch (const InfeasibleError& e) {
      best.record.note = e.what();
    }
    best.record.wall_time_s = now_seconds() - t0;
    return best;
  }

  Assignment assign;
  StarCoefficients init;
  switch (method) {
    case AssignMethod::Swap: {
      auto [phi0, coeffs] = init_oma(scn, mode);
      const Mat gain = snapshot_gains(scn, coeffs);
      const double p_each = cfg.p_max / cfg.num_users;
      const UtilityOracle oracle = scheme == Scheme::Oma ? oma_snapshot_oracle(gain, p_each)
                                                         : noma_snapshot_oracle(gain, p_each);
      assign = swap_match(phi0, oracle, SwapScope::AllPairs, scn.layout.region);
      init = coeffs;
      break;
    }
    case AssignMethod::Lma: {
      LmaResult r = lma(scn, mode, scheme);
      assign = r.assignment;
      init = r.coeffs;
      break;
    }
    case AssignMethod::Sma: {
      assign = sma(scn, mode, scheme);
      init = matching_init_coefficients(scn, mode);
      break;
    }
    default:
      throw std::logic_error("unreachable");
  }
  return run_pipeline(scn, assign, init, scheme, mode, seed);
}

namespace {

std::string run_convergence(const ExperimentSpec& spec) {
  std::vector<TrialOutcome> outcomes(spec.trials);
  parallel_for(spec.trials, [&](int t) {
    outcomes[t] = run_trial(spec.base_cfg, spec.scheme, spec.assign, spec.surface,
                            RngStream::mix(spec.seed_base, t));
  });

  std::ostringstream out;
  out.precision(17);
  out << csv_header(spec, "convergence");
  out << "trial,seed,iteration,sum_rate\n";
  int infeasible = 0;
  for (int t = 0; t < spec.trials; ++t) {
    const TrialOutcome& o = outcomes[t];
    if (!o.record.feasible) {
      ++infeasible;
      continue;
    }
    const std::vector<double>& trace = o.oma ? o.oma->trace : o.noma->cub_trace;
    for (std::size_t it = 0; it < trace.size(); ++it)
      out << t << ',' << o.record.seed << ',' << it << ',' << trace[it] << '\n';
  }
  out << "# infeasible_trials=" << infeasible << "\n";
  if (infeasible == spec.trials)
    throw InfeasibleError("convergence: every trial infeasible", "qos");
  return out.str();
}

std::string run_sumrate_vs_m(const ExperimentSpec& spec) {
  std::vector<double> sweep = spec.sweep;
  if (sweep.empty()) sweep = {4, 8, 12};
  struct Cell {
    int m;
    TrialOutcome outcome;
  };
  const int total = static_cast<int>(sweep.size()) * spec.trials;
  std::vector<Cell> cells(total);
  parallel_for(total, [&](int idx) {
    const int mi = idx / spec.trials;
    const int t = idx % spec.trials;
    SystemConfig cfg = spec.base_cfg;
    cfg.num_elements = static_cast<int>(sweep[mi]);
    cells[idx].m = cfg.num_elements;
    cells[idx].outcome =
        run_trial(cfg, spec.scheme, spec.assign, spec.surface, RngStream::mix(spec.seed_base, t));
  });

  std::ostringstream out;
  out.precision(17);
  out << csv_header(spec, "sumrate_vs_M");
  out << "m_elements,trial,seed,sum_rate,feasible,iterations,wall_time_s,user_rates\n";
  int infeasible = 0;
  for (int idx = 0; idx < total; ++idx) {
    const TrialRecord& r = cells[idx].outcome.record;
    if (!r.feasible) ++infeasible;
    out << cells[idx].m << ',' << (idx % spec.trials) << ',' << r.seed << ',' << r.sum_rate << ','
        << (r.feasible ? 1 : 0) << ',' << r.iterations << ',' << r.wall_time_s << ','
        << join_rates(r.user_rates) << '\n';
  }
  out << "# infeasible_trials=" << infeasible << "\n";
  if (infeasible == total) throw InfeasibleError("sumrate_vs_M: every trial infeasible", "qos");
  return out.str();
}

std::string run_amplitude_profile(const ExperimentSpec& spec) {
  std::vector<TrialOutcome> outcomes(spec.trials);
  parallel_for(spec.trials, [&](int t) {
    outcomes[t] = run_trial(spec.base_cfg, spec.scheme, spec.assign, spec.surface,
                            RngStream::mix(spec.seed_base, t));
  });

  std::ostringstream out;
  out.precision(17);
  out << csv_header(spec, "amplitude_profile");
  out << "trial,seed,m,beta_t,beta_r,theta_t,theta_r\n";
  int infeasible = 0;
  for (int t = 0; t < spec.trials; ++t) {
    const TrialOutcome& o = outcomes[t];
    if (!o.record.feasible) {
      ++infeasible;
      continue;
    }
    const StarCoefficients& co = o.oma ? o.oma->coeffs : o.noma->coeffs;
    for (int m = 0; m < co.elements(); ++m)
      out << t << ',' << o.record.seed << ',' << m << ',' << co.beta_t[m] << ',' << co.beta_r[m]
          << ',' << co.theta_t[m] << ',' << co.theta_r[m] << '\n';
  }
  out << "# infeasible_trials=" << infeasible << "\n";
  if (infeasible == spec.trials)
    throw InfeasibleError("amplitude_profile: every trial infeasible", "qos");
  return out.str();
}

}  // namespace

std::string run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.id) {
    case ExperimentId::Convergence: return run_convergence(spec);
    case ExperimentId::SumrateVsM: return run_sumrate_vs_m(spec);
    case ExperimentId::CdfAssignment: return compare_assignments(spec);
    case ExperimentId::DecodingOrders: return compare_decoding_orders(spec);
    case ExperimentId::AmplitudeProfile: return run_amplitude_profile(spec);
  }
  throw std::invalid_argument("unknown experiment id");
}

std::string compare_assignments(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.base_cfg.num_users != 4 && spec.base_cfg.num_users != 6)
    throw GuardError("cdf_assignment: needs I in {4, 6} for the exhaustive benchmark");

  const std::vector<AssignMethod> methods{AssignMethod::Lma, AssignMethod::Sma,
                                          AssignMethod::Exhaustive, AssignMethod::Swap};
  struct Row {
    std::array<TrialRecord, 4> records;
  };
  std::vector<Row> rows(spec.trials);
  parallel_for(spec.trials, [&](int t) {
    const std::uint64_t seed = RngStream::mix(spec.seed_base, t);
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
      rows[t].records[mi] =
          run_trial(spec.base_cfg, spec.scheme, methods[mi], spec.surface, seed).record;
  });

  std::ostringstream out;
  out.precision(17);
  out << csv_header(spec, "cdf_assignment");
  out << "record,method,trial,seed,rank,sum_rate,cdf,match_fraction,feasible\n";
  for (int t = 0; t < spec.trials; ++t)
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const TrialRecord& r = rows[t].records[mi];
      out << "trial," << to_string(methods[mi]) << ',' << t << ',' << r.seed << ",,"
          << r.sum_rate << ",,," << (r.feasible ? 1 : 0) << '\n';
    }

  // Sorted per-method sum-rates with empirical CDF over feasible trials.
  int any_feasible = 0;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> rates;
    for (int t = 0; t < spec.trials; ++t)
      if (rows[t].records[mi].feasible) rates.push_back(rows[t].records[mi].sum_rate);
    std::sort(rates.begin(), rates.end());
    any_feasible += static_cast<int>(rates.size());
    for (std::size_t j = 0; j < rates.size(); ++j)
      out << "cdf," << to_string(methods[mi]) << ",,," << j << ',' << rates[j] << ','
          << static_cast<double>(j + 1) / rates.size() << ",,1\n";
  }

  // Fraction of trials where the heuristic reaches the exhaustive optimum
  // within 1 percent.
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    if (methods[mi] == AssignMethod::Exhaustive) continue;
    int matched = 0, counted = 0;
    for (int t = 0; t < spec.trials; ++t) {
      const TrialRecord& heur = rows[t].records[mi];
      const TrialRecord& exact = rows[t].records[2];
      if (!heur.feasible || !exact.feasible) continue;
      ++counted;
      if (heur.sum_rate >= exact.sum_rate * 0.99) ++matched;
    }
    out << "match," << to_string(methods[mi]) << ",,,,,,"
        << (counted ? static_cast<double>(matched) / counted : 0.0) << ",\n";
  }
  if (any_feasible == 0) throw InfeasibleError("cdf_assignment: every trial infeasible", "qos");
  return out.str();
}

std::string compare_decoding_orders(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.base_cfg.num_subchannels > 4)
    throw GuardError("decoding_orders: exhaustive orders guarded to K <= 4");

  struct RuleResult {
    std::string rule;
    TrialRecord record;
  };
  std::vector<std::vector<RuleResult>> rows(spec.trials);

  parallel_for(spec.trials, [&](int t) {
    const std::uint64_t seed = RngStream::mix(spec.seed_base, t);
    const Scenario scn = make_scenario(spec.base_cfg, seed);
    const LmaResult match = lma(scn, spec.surface, Scheme::Noma);
    const Assignment& assign = match.assignment;
    const Vec uniform =
        Vec::Constant(spec.base_cfg.num_users, spec.base_cfg.p_max / spec.base_cfg.num_users);

    RngStream step1_rng(RngStream::mix(seed, 0x5d1));
    const DecideOrdersResult ord = decide_orders(scn, assign, spec.surface, step1_rng);

    auto order_hash = [](const DecodingOrder& o) {
      std::uint64_t h = 14695981039346656037ULL;
      for (int s : o.strong) h = (h ^ static_cast<std::uint64_t>(s)) * 1099511628211ULL;
      return h;
    };

    // Steps 2-3 under a pinned order; RNG depends only on (seed, order) so
    // identical orders reproduce identical results across rules.
    auto steps23 = [&](const DecodingOrder& order, bool rederive) {
      TrialRecord rec;
      rec.seed = seed;
      const double t0 = now_seconds();
      try {
        RngStream rng(RngStream::mix(seed, order_hash(order)));
        const CubResult cub = cub_beamforming(scn, assign, order, uniform, ord.coeffs,
                                              spec.surface, rng, rederive);
        if (!cub.sic_consistent) throw InfeasibleError("SIC-inconsistent coefficients", "sic");
        Vec gains(spec.base_cfg.num_users);
        for (int i = 0; i < spec.base_cfg.num_users; ++i) {
          const Side side = scn.layout.region[i] == Region::T ? Side::T : Side::R;
          gains[i] = effective_gain(cub.coeffs, normalized_cascade(scn, assign.channel_of[i], i), side);
        }
        const GpPowerResult gpr = gp_power(assign, cub.order, gains, spec.base_cfg);
        rec.user_rates = Vec::Zero(spec.base_cfg.num_users);
        for (int k = 0; k < assign.subchannels(); ++k) {
          const int i1 = cub.order.strong[k];
          const int i2 = assign.pair[k][0] == i1 ? assign.pair[k][1] : assign.pair[k][0];
          rec.user_rates[i1] = std::log2(gpr.rates.r[2 * k]);
          rec.user_rates[i2] = std::log2(gpr.rates.r[2 * k + 1]);
        }
        rec.sum_rate = rec.user_rates.sum();
        rec.iterations = cub.iterations;
        rec.feasible = true;
      } catch (const InfeasibleError& e) {
        rec.feasible = false;
        rec.note = e.what();
      }
      rec.wall_time_s = now_seconds() - t0;
      return rec;
    };

    std::vector<RuleResult>& results = rows[t];
    results.push_back({"proposed", steps23(ord.order, true)});

    // Exhaustive over the 2^K per-channel choices.
    const int big_k = assign.subchannels();
    TrialRecord best;
    best.seed = seed;
    best.feasible = false;
    for (int mask = 0; mask < (1 << big_k); ++mask) {
      DecodingOrder order;
      order.strong.resize(big_k);
      for (int k = 0; k < big_k; ++k) order.strong[k] = assign.pair[k][(mask >> k) & 1];
      const TrialRecord rec = steps23(order, false);
      if (rec.feasible && (!best.feasible || rec.sum_rate > best.sum_rate)) best = rec;
    }
    results.push_back({"exhaustive", best});

    RngStream order_rng(RngStream::mix(seed, 0xbad));
    DecodingOrder random_order;
    random_order.strong.resize(big_k);
    for (int k = 0; k < big_k; ++k)
      random_order.strong[k] = assign.pair[k][order_rng.next_u64() & 1];
    results.push_back({"random", steps23(random_order, false)});

    DecodingOrder cascaded;
    cascaded.strong = match.order_hint;
    results.push_back({"cascaded", steps23(cascaded, false)});
  });

  std::ostringstream out;
  out.precision(17);
  out << csv_header(spec, "decoding_orders");
  out << "rule,trial,seed,sum_rate,feasible,iterations\n";
  int feasible_total = 0;
  for (int t = 0; t < spec.trials; ++t)
    for (const RuleResult& rr : rows[t]) {
      feasible_total += rr.record.feasible;
      out << rr.rule << ',' << t << ',' << rr.record.seed << ',' << rr.record.sum_rate << ','
          << (rr.record.feasible ? 1 : 0) << ',' << rr.record.iterations << '\n';
    }
  if (feasible_total == 0)
    throw InfeasibleError("decoding_orders: every trial infeasible", "qos");
  return out.str();
}

}  // namespace staralloc
