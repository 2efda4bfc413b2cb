#ifndef STARALLOC_CONFIG_HPP
#define STARALLOC_CONFIG_HPP

#include <cstdint>
#include <string>

#include "staralloc/types.hpp"

namespace staralloc {

// System-level parameters. Defaults reproduce the reference evaluation setup:
// AP at the origin, surface centered at (50, 0, 0) m, users on a 5 m circle,
// path-loss exponents 2.2 / 2.8, Rician factors 3 dB, noise -80 dBm,
// P_max = 1.5 W, QoS 0.1 bit/s/Hz, convergence tolerance 1e-4.
struct SystemConfig {
  int num_subchannels = 3;  // K
  int num_users = 6;        // I, must equal 2K
  int num_elements = 8;     // M

  double p_max = 1.5;        // W
  double qos_rate = 0.1;     // bit/s/Hz
  double noise_power = 1e-11;  // W per subchannel (-80 dBm)

  double pathloss_ref = 1e-3;          // linear gain at d0 = 1 m (-30 dB)
  double exponent_ap_surface = 2.2;    // alpha_AS
  double exponent_surface_user = 2.8;  // alpha_SU
  double rician_ap_surface = 1.9952623149688795;    // kappa_AS, linear (3 dB)
  double rician_surface_user = 1.9952623149688795;  // kappa_SU, linear (3 dB)

  Vec3 surface_center = Vec3(50.0, 0.0, 0.0);  // meters
  double user_radius = 5.0;                    // meters

  std::uint64_t rng_seed = 1;
  double tolerance = 1e-4;  // epsilon for iterative solvers

  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

// Flat key = value file; keys are the SystemConfig field names. Rician factors
// and the path-loss reference also accept *_db variants, converted on load.
// Unknown keys and malformed lines raise std::invalid_argument.
SystemConfig load_config(const std::string& path);

// Parses the same syntax from a string (used by load_config and tests).
SystemConfig parse_config(const std::string& text);

}  // namespace staralloc

#endif
