#include "staralloc/waterfill.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace staralloc {

Vec water_filling(const Vec& gains, double p_max, double noise) {
  if (!(p_max > 0.0)) throw std::domain_error("water_filling: p_max must be positive");
  if (!(noise > 0.0)) throw std::domain_error("water_filling: noise must be positive");
  const int n = static_cast<int>(gains.size());
  if (n == 0) throw std::domain_error("water_filling: no slots");
  for (int j = 0; j < n; ++j)
    if (!(gains[j] > 0.0)) throw std::domain_error("water_filling: gains must be positive");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return noise / gains[a] < noise / gains[b]; });

  // With the a lowest levels active, mu = (p_max + sum of those levels) / a.
  double level_sum = 0.0;
  double mu = 0.0;
  int active = 0;
  for (int a = 1; a <= n; ++a) {
    level_sum += noise / gains[order[a - 1]];
    const double candidate = (p_max + level_sum) / a;
    if (a < n && candidate > noise / gains[order[a]]) continue;  // next slot also active
    mu = candidate;
    active = a;
    break;
  }

  Vec p = Vec::Zero(n);
  for (int j = 0; j < active; ++j) {
    const int idx = order[j];
    p[idx] = mu - noise / gains[idx];
  }
  return p;
}

}  // namespace staralloc
