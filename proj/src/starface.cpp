#include "staralloc/starface.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace staralloc {

namespace {

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

}  // namespace

CVec StarCoefficients::side_vector(Side n) const {
  const Vec& b = beta(n);
  const Vec& th = theta(n);
  CVec v(elements());
  for (int m = 0; m < elements(); ++m) v[m] = std::polar(std::sqrt(b[m]), th[m]);
  return v;
}

StarCoefficients StarCoefficients::neutral(int num_elements) {
  StarCoefficients c;
  c.beta_t = Vec::Constant(num_elements, 0.5);
  c.beta_r = Vec::Constant(num_elements, 0.5);
  c.theta_t = Vec::Zero(num_elements);
  c.theta_r = Vec::Zero(num_elements);
  return c;
}

bool SurfaceMode::active(Side n, int m, int num_elements) const {
  if (kind == Kind::Star) return true;
  if (num_elements % 2 != 0)
    throw std::invalid_argument("conventional pair needs an even element count");
  const bool reflect_half = m < num_elements / 2;
  return (n == Side::R) == reflect_half;
}

std::vector<int> SurfaceMode::active_elements(Side n, int num_elements) const {
  std::vector<int> idx;
  for (int m = 0; m < num_elements; ++m)
    if (active(n, m, num_elements)) idx.push_back(m);
  return idx;
}

double effective_gain(const StarCoefficients& coeffs, const CVec& q, Side side) {
  if (q.size() != coeffs.elements())
    throw std::invalid_argument("effective_gain: dimension mismatch");
  if (!q.allFinite()) throw std::invalid_argument("effective_gain: non-finite channel");
  Cplx acc(0.0, 0.0);
  const Vec& b = coeffs.beta(side);
  const Vec& th = coeffs.theta(side);
  for (int m = 0; m < q.size(); ++m) acc += std::polar(std::sqrt(b[m]), th[m]) * q[m];
  return std::norm(acc);
}

std::pair<double, Vec> max_cascaded_gain(const CVec& q, const Vec& beta) {
  if (q.size() != beta.size()) throw std::invalid_argument("max_cascaded_gain: dimension mismatch");
  Vec phases(q.size());
  double amp = 0.0;
  for (int m = 0; m < q.size(); ++m) {
    phases[m] = wrap_phase(-std::arg(q[m]));
    amp += std::sqrt(beta[m]) * std::abs(q[m]);
  }
  return {amp * amp, phases};
}

StarCoefficients project_feasible(const Vec& beta_t, const Vec& beta_r, const Vec& theta_t,
                                  const Vec& theta_r) {
  const int m = static_cast<int>(beta_t.size());
  if (beta_r.size() != m || theta_t.size() != m || theta_r.size() != m)
    throw std::invalid_argument("project_feasible: dimension mismatch");
  if (!beta_t.allFinite() || !beta_r.allFinite() || !theta_t.allFinite() || !theta_r.allFinite())
    throw std::domain_error("project_feasible: non-finite input");

  StarCoefficients c;
  c.beta_t.resize(m);
  c.beta_r.resize(m);
  c.theta_t.resize(m);
  c.theta_r.resize(m);
  for (int j = 0; j < m; ++j) {
    double bt = std::min(std::max(beta_t[j], 0.0), 1.0);
    double br = std::min(std::max(beta_r[j], 0.0), 1.0);
    const double s = bt + br;
    if (s <= 0.0) {
      bt = br = 0.5;
    } else {
      bt /= s;
      br = 1.0 - bt;
    }
    c.beta_t[j] = bt;
    c.beta_r[j] = br;
    c.theta_t[j] = wrap_phase(theta_t[j]);
    c.theta_r[j] = wrap_phase(theta_r[j]);
  }
  return c;
}

StarCoefficients apply_mode(const StarCoefficients& coeffs, const SurfaceMode& mode) {
  if (mode.is_star()) return coeffs;
  StarCoefficients c = coeffs;
  const int m = c.elements();
  for (int j = 0; j < m; ++j) {
    if (mode.active(Side::R, j, m)) {
      c.beta_r[j] = 1.0;
      c.beta_t[j] = 0.0;
    } else {
      c.beta_t[j] = 1.0;
      c.beta_r[j] = 0.0;
    }
  }
  return c;
}

StarCoefficients aligned_coefficients(const CVec& q_ref_t, const CVec& q_ref_r,
                                      const SurfaceMode& mode) {
  const int m = static_cast<int>(q_ref_t.size());
  StarCoefficients c = apply_mode(StarCoefficients::neutral(m), mode);
  c.theta_t = max_cascaded_gain(q_ref_t, c.beta_t).second;
  c.theta_r = max_cascaded_gain(q_ref_r, c.beta_r).second;
  return c;
}

std::string coefficients_csv(const StarCoefficients& coeffs) {
  std::ostringstream out;
  out.precision(17);
  out << "m,beta_t,beta_r,theta_t,theta_r\n";
  for (int m = 0; m < coeffs.elements(); ++m)
    out << m << ',' << coeffs.beta_t[m] << ',' << coeffs.beta_r[m] << ',' << coeffs.theta_t[m]
        << ',' << coeffs.theta_r[m] << '\n';
  return out.str();
}

}  // namespace staralloc
