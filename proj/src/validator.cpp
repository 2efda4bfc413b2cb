#include "staralloc/validator.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace staralloc {

namespace {

constexpr double kEnergyTol = 1e-12;
constexpr double kPowerQosTol = 1e-6;
constexpr double kTimeTol = 1e-9;
constexpr double kRateTol = 1e-6;

void check(ValidationReport& rep, bool cond, const std::string& what) {
  if (!cond) {
    rep.ok = false;
    rep.violations.push_back(what);
  }
}

// Gain recomputed from scratch: cascade from f and g, then the coherent sum
// with explicit trigonometry. Deliberately does not reuse the solver path.
double raw_gain(const Scenario& scn, const StarCoefficients& co, int k, int i, bool tside) {
  const int m_el = scn.cfg.num_elements;
  double re = 0.0, im = 0.0;
  for (int m = 0; m < m_el; ++m) {
    const Cplx q = std::conj(scn.channels.f[k][i][m]) * scn.channels.g[k][m];
    const double beta = tside ? co.beta_t[m] : co.beta_r[m];
    const double theta = tside ? co.theta_t[m] : co.theta_r[m];
    const double amp = std::sqrt(beta);
    re += amp * (std::cos(theta) * q.real() - std::sin(theta) * q.imag());
    im += amp * (std::sin(theta) * q.real() + std::cos(theta) * q.imag());
  }
  return re * re + im * im;
}

void check_common(ValidationReport& rep, const Scenario& scn, const SurfaceMode& mode,
                  const Assignment& assign, const StarCoefficients& co, const Vec& powers) {
  const int m_el = scn.cfg.num_elements;
  for (int m = 0; m < m_el; ++m) {
    check(rep, std::abs(co.beta_t[m] + co.beta_r[m] - 1.0) <= kEnergyTol,
          "energy conservation broken at element " + std::to_string(m));
    check(rep, co.beta_t[m] >= -kEnergyTol && co.beta_t[m] <= 1.0 + kEnergyTol,
          "beta_t out of range at element " + std::to_string(m));
    if (!mode.is_star()) {
      const bool reflect_half = m < m_el / 2;
      check(rep, reflect_half ? co.beta_r[m] == 1.0 : co.beta_t[m] == 1.0,
            "conventional-pair mask broken at element " + std::to_string(m));
    }
  }

  try {
    assign.validate();
  } catch (const std::exception& e) {
    check(rep, false, std::string("assignment: ") + e.what());
  }

  double total = 0.0;
  for (int i = 0; i < powers.size(); ++i) {
    check(rep, powers[i] >= -kPowerQosTol, "negative power for user " + std::to_string(i));
    total += powers[i];
  }
  check(rep, total <= scn.cfg.p_max + kPowerQosTol, "power budget exceeded");
}

}  // namespace

std::string ValidationReport::joined() const {
  std::ostringstream out;
  for (std::size_t j = 0; j < violations.size(); ++j) {
    if (j) out << "; ";
    out << violations[j];
  }
  return out.str();
}

ValidationReport validate_solution(const Scenario& scn, const SurfaceMode& mode,
                                   const OmaSolution& sol) {
  ValidationReport rep;
  check_common(rep, scn, mode, sol.assign, sol.coeffs, sol.alloc.p);

  for (int k = 0; k < sol.assign.subchannels(); ++k) {
    const double wsum = sol.alloc.omega[sol.assign.pair[k][0]] + sol.alloc.omega[sol.assign.pair[k][1]];
    check(rep, std::abs(wsum - 1.0) <= kTimeTol,
          "time fractions of channel " + std::to_string(k) + " do not sum to 1");
  }
  for (int i = 0; i < scn.cfg.num_users; ++i) {
    const double om = sol.alloc.omega[i];
    check(rep, om >= -kTimeTol && om <= 1.0 + kTimeTol, "omega out of range");
    const bool tside = scn.layout.region[i] == Region::T;
    const double gain = raw_gain(scn, sol.coeffs, sol.assign.channel_of[i], i, tside);
    const double rate =
        om > 0.0 ? om * std::log2(1.0 + sol.alloc.p[i] * gain / (om * scn.cfg.noise_power)) : 0.0;
    check(rep, rate >= scn.cfg.qos_rate - kPowerQosTol,
          "QoS violated for user " + std::to_string(i));
    check(rep, std::abs(rate - sol.user_rates[i]) <= kRateTol,
          "claimed rate mismatch for user " + std::to_string(i));
  }
  check(rep, std::abs(sol.sum_rate - sol.user_rates.sum()) <= 1e-9, "sum-rate mismatch");
  return rep;
}

ValidationReport validate_solution(const Scenario& scn, const SurfaceMode& mode,
                                   const NomaSolution& sol) {
  ValidationReport rep;
  check_common(rep, scn, mode, sol.assign, sol.coeffs, sol.powers);

  for (int k = 0; k < sol.assign.subchannels(); ++k) {
    const int i1 = sol.order.strong[k];
    const int i2 = sol.assign.pair[k][0] == i1 ? sol.assign.pair[k][1] : sol.assign.pair[k][0];
    check(rep, sol.assign.channel_of[i1] == k, "decoding order names a foreign user");

    const double g1 = raw_gain(scn, sol.coeffs, k, i1, scn.layout.region[i1] == Region::T);
    const double g2 = raw_gain(scn, sol.coeffs, k, i2, scn.layout.region[i2] == Region::T);
    check(rep, g1 >= g2 * (1.0 - 1e-9), "SIC ordering violated on channel " + std::to_string(k));

    const double noise = scn.cfg.noise_power;
    const double r1 = std::log2(1.0 + sol.powers[i1] * g1 / noise);
    const double r2 =
        std::log2(1.0 + sol.powers[i2] * g2 / (sol.powers[i1] * g2 + noise));
    check(rep, std::abs(r1 - sol.user_rates[i1]) <= kRateTol, "claimed rate mismatch (strong)");
    check(rep, std::abs(r2 - sol.user_rates[i2]) <= kRateTol, "claimed rate mismatch (weak)");
    check(rep, r1 >= scn.cfg.qos_rate - kPowerQosTol, "QoS violated (strong user)");
    check(rep, r2 >= scn.cfg.qos_rate - kPowerQosTol, "QoS violated (weak user)");
  }
  check(rep, std::abs(sol.sum_rate - sol.user_rates.sum()) <= 1e-9, "sum-rate mismatch");
  return rep;
}

}  // namespace staralloc
