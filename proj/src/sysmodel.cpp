#include "staralloc/sysmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace staralloc {

double path_loss(double d, double rho0, double alpha) {
  if (!(d > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return rho0 * std::pow(d, -alpha);
}

CVec steering_vector(int num_elements, double sin_phi) {
  CVec a(num_elements);
  for (int m = 0; m < num_elements; ++m)
    a[m] = std::polar(1.0, kPi * static_cast<double>(m) * sin_phi);
  return a;
}

namespace {

// Angle term for a link between the surface center and a point: projection of
// the unit direction onto the array axis (local y).
double link_sin_phi(const Vec3& surface_center, const Vec3& endpoint) {
  const Vec3 d = endpoint - surface_center;
  const double n = d.norm();
  if (n <= 0.0) throw std::domain_error("link endpoint coincides with the surface center");
  return d.y() / n;
}

CVec rician_draw(double mean_power, double kappa, const CVec& los, RngStream& rng) {
  const int m = static_cast<int>(los.size());
  const double s = std::sqrt(mean_power);
  const double w_los = std::sqrt(kappa / (kappa + 1.0));
  const double w_nlos = std::sqrt(1.0 / (kappa + 1.0));
  CVec h(m);
  for (int j = 0; j < m; ++j) h[j] = s * (w_los * los[j] + w_nlos * rng.complex_gaussian());
  return h;
}

}  // namespace

UserLayout sample_layout(const SystemConfig& cfg, RngStream& rng) {
  cfg.validate();
  const int half = cfg.num_users / 2;
  UserLayout layout;
  layout.positions.reserve(cfg.num_users);
  layout.region.reserve(cfg.num_users);
  for (int i = 0; i < cfg.num_users; ++i) {
    const Region want = (i < half) ? Region::T : Region::R;
    // Rejection keeps the conditional distribution uniform on the half-circle.
    for (;;) {
      const double phi = rng.uniform(0.0, kTwoPi);
      const Vec3 pos = cfg.surface_center +
                       Vec3(cfg.user_radius * std::cos(phi), cfg.user_radius * std::sin(phi), 0.0);
      const double dx = pos.x() - cfg.surface_center.x();
      if (dx == 0.0) continue;  // exactly on the surface plane: resample
      const Region got = (dx > 0.0) ? Region::T : Region::R;
      if (got == want) {
        layout.positions.push_back(pos);
        layout.region.push_back(got);
        break;
      }
    }
  }
  return layout;
}

ChannelSet sample_channels(const SystemConfig& cfg, const UserLayout& layout, RngStream& rng) {
  cfg.validate();
  if (layout.users() != cfg.num_users)
    throw std::invalid_argument("sample_channels: layout size mismatch");

  const Vec3 ap(0.0, 0.0, 0.0);  // AP fixed at the origin
  const double d_as = (cfg.surface_center - ap).norm();
  const double loss_as = path_loss(d_as, cfg.pathloss_ref, cfg.exponent_ap_surface);
  const CVec los_as = steering_vector(cfg.num_elements, link_sin_phi(cfg.surface_center, ap));

  ChannelSet cs;
  cs.g.resize(cfg.num_subchannels);
  cs.f.assign(cfg.num_subchannels, std::vector<CVec>(cfg.num_users));
  cs.q.assign(cfg.num_subchannels, std::vector<CVec>(cfg.num_users));

  for (int k = 0; k < cfg.num_subchannels; ++k) {
    cs.g[k] = rician_draw(loss_as, cfg.rician_ap_surface, los_as, rng);
    for (int i = 0; i < cfg.num_users; ++i) {
      const double d_su = (layout.positions[i] - cfg.surface_center).norm();
      const double loss_su = path_loss(d_su, cfg.pathloss_ref, cfg.exponent_surface_user);
      const CVec los_su =
          steering_vector(cfg.num_elements, link_sin_phi(cfg.surface_center, layout.positions[i]));
      cs.f[k][i] = rician_draw(loss_su, cfg.rician_surface_user, los_su, rng);
      cs.q[k][i] = cs.f[k][i].conjugate().cwiseProduct(cs.g[k]);
    }
  }
  return cs;
}

Scenario make_scenario(const SystemConfig& cfg, std::uint64_t seed) {
  RngStream rng(seed);
  Scenario scn;
  scn.cfg = cfg;
  scn.cfg.rng_seed = seed;
  scn.layout = sample_layout(scn.cfg, rng);
  scn.channels = sample_channels(scn.cfg, scn.layout, rng);
  return scn;
}

CVec normalized_cascade(const Scenario& scn, int k, int i) {
  return scn.channels.q[k][i] / std::sqrt(scn.cfg.noise_power);
}

}  // namespace staralloc
