#ifndef STARALLOC_SYSMODEL_HPP
#define STARALLOC_SYSMODEL_HPP

#include <vector>

#include "staralloc/config.hpp"
#include "staralloc/rng.hpp"
#include "staralloc/types.hpp"

namespace staralloc {

// Side of the surface a user sits on: T = transmission half-space (beyond the
// surface plane, seen from the AP), R = reflection half-space (AP side).
enum class Region { T, R };

struct UserLayout {
  std::vector<Vec3> positions;
  std::vector<Region> region;

  int users() const { return static_cast<int>(positions.size()); }
};

// Per-subchannel AP->surface vectors g[k], per-(subchannel, user)
// surface->user vectors f[k][i], and cascaded vectors
// q[k][i][m] = conj(f[k][i][m]) * g[k][m].
struct ChannelSet {
  std::vector<CVec> g;                // [K], each length M
  std::vector<std::vector<CVec>> f;   // [K][I], each length M
  std::vector<std::vector<CVec>> q;   // [K][I], each length M

  int subchannels() const { return static_cast<int>(g.size()); }
};

// Distance-dependent gain rho0 * (d / 1 m)^(-alpha). Throws std::domain_error
// for non-positive distance.
double path_loss(double d, double rho0, double alpha);

// I positions uniform on the circle of radius user_radius around the surface
// center (z = 0 plane). The first I/2 users are T (x beyond the surface
// plane), the rest R; angles are rejection-sampled per region so the split is
// exact and each region's marginal stays uniform.
UserLayout sample_layout(const SystemConfig& cfg, RngStream& rng);

// Rician draws per Eq.-style model: sqrt(L) * (sqrt(k/(k+1)) LoS +
// sqrt(1/(k+1)) NLoS), NLoS entries i.i.d. CN(0,1). The LoS component is a
// unit-modulus steering vector for a uniform linear array along the surface's
// local y-axis with half-wavelength spacing. Channels are drawn independently
// per subchannel.
ChannelSet sample_channels(const SystemConfig& cfg, const UserLayout& layout, RngStream& rng);

// Deterministic array response used for the LoS components; exposed for tests.
CVec steering_vector(int num_elements, double sin_phi);

// Convenience bundle: one realized instance of the system.
struct Scenario {
  SystemConfig cfg;
  UserLayout layout;
  ChannelSet channels;
};

Scenario make_scenario(const SystemConfig& cfg, std::uint64_t seed);

// Cascaded channel of user i on subchannel k scaled by 1/sqrt(noise_power),
// so |v^T q|^2 is an SNR-per-watt. Solvers work in this normalization.
CVec normalized_cascade(const Scenario& scn, int k, int i);

}  // namespace staralloc

#endif
