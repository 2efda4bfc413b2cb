#include "staralloc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace staralloc {

namespace {

constexpr double kStrictTol = 1e-12;  // strict-improvement tolerance for swaps

double oma_equal_rate(double p, double g, double omega) {
  return omega * std::log2(1.0 + p * g / omega);
}

}  // namespace

int Assignment::partner_of(int user) const {
  const auto& pr = pair[channel_of[user]];
  return pr[0] == user ? pr[1] : pr[0];
}

Assignment Assignment::from_pairs(const std::vector<std::array<int, 2>>& pairs, int num_users) {
  Assignment a;
  a.pair = pairs;
  a.channel_of.assign(num_users, -1);
  for (int k = 0; k < a.subchannels(); ++k)
    for (int user : a.pair[k]) {
      if (user < 0 || user >= num_users) throw std::invalid_argument("Assignment: user out of range");
      if (a.channel_of[user] != -1) throw std::invalid_argument("Assignment: user assigned twice");
      a.channel_of[user] = k;
    }
  a.validate();
  return a;
}

void Assignment::validate() const {
  const int num_users = users();
  if (num_users != 2 * subchannels())
    throw std::invalid_argument("Assignment: needs exactly two users per channel");
  for (int i = 0; i < num_users; ++i) {
    const int k = channel_of[i];
    if (k < 0 || k >= subchannels()) throw std::invalid_argument("Assignment: bad channel index");
    if (pair[k][0] != i && pair[k][1] != i)
      throw std::invalid_argument("Assignment: pair/channel_of inconsistent");
  }
  for (int k = 0; k < subchannels(); ++k) {
    if (pair[k][0] == pair[k][1]) throw std::invalid_argument("Assignment: duplicate user in pair");
    for (int user : pair[k])
      if (channel_of[user] != k) throw std::invalid_argument("Assignment: pair/channel_of inconsistent");
  }
}

double UtilityOracle::user_utility(const Assignment& phi, int user) const {
  const int k = phi.channel_of[user];
  const auto rates = channel_rates(phi, k);
  return phi.pair[k][0] == user ? rates[0] : rates[1];
}

double UtilityOracle::channel_utility(const Assignment& phi, int k) const {
  const auto rates = channel_rates(phi, k);
  return rates[0] + rates[1];
}

UtilityOracle oma_snapshot_oracle(const Mat& norm_gain, double p_each, double omega) {
  UtilityOracle u;
  u.channel_rates = [norm_gain, p_each, omega](const Assignment& phi, int k) {
    return std::array<double, 2>{oma_equal_rate(p_each, norm_gain(k, phi.pair[k][0]), omega),
                                 oma_equal_rate(p_each, norm_gain(k, phi.pair[k][1]), omega)};
  };
  return u;
}

UtilityOracle noma_snapshot_oracle(const Mat& norm_gain, double p_each) {
  UtilityOracle u;
  u.channel_rates = [norm_gain, p_each](const Assignment& phi, int k) {
    const int a = phi.pair[k][0];
    const int b = phi.pair[k][1];
    const double ga = norm_gain(k, a);
    const double gb = norm_gain(k, b);
    // Stronger user decoded second: interference-free; weaker sees the
    // stronger user's power as interference.
    std::array<double, 2> rates;
    const bool a_strong = ga >= gb;
    const double gs = a_strong ? ga : gb;
    const double gw = a_strong ? gb : ga;
    const double rs = std::log2(1.0 + p_each * gs);
    const double rw = std::log2(1.0 + p_each * gw / (p_each * gw + 1.0));
    rates[0] = a_strong ? rs : rw;
    rates[1] = a_strong ? rw : rs;
    return rates;
  };
  return u;
}

bool is_swap_blocking(const Assignment& phi, int user_i, int user_j, const UtilityOracle& u) {
  const int k = phi.channel_of[user_i];
  const int kj = phi.channel_of[user_j];
  if (k == kj) throw std::invalid_argument("is_swap_blocking: users share a channel");

  Assignment swapped = phi;
  auto replace = [](std::array<int, 2>& pr, int from, int to) {
    (pr[0] == from ? pr[0] : pr[1]) = to;
  };
  replace(swapped.pair[k], user_i, user_j);
  replace(swapped.pair[kj], user_j, user_i);
  swapped.channel_of[user_i] = kj;
  swapped.channel_of[user_j] = k;

  const double before[4] = {u.user_utility(phi, user_i), u.user_utility(phi, user_j),
                            u.channel_utility(phi, k), u.channel_utility(phi, kj)};
  const double after[4] = {u.user_utility(swapped, user_i), u.user_utility(swapped, user_j),
                           u.channel_utility(swapped, k), u.channel_utility(swapped, kj)};
  bool strict = false;
  for (int t = 0; t < 4; ++t) {
    if (after[t] < before[t]) return false;
    if (after[t] > before[t] + kStrictTol) strict = true;
  }
  return strict;
}

Assignment swap_match(const Assignment& phi0, const UtilityOracle& u, SwapScope scope,
                      const std::vector<Region>& regions, SwapMatchStats* stats) {
  phi0.validate();
  Assignment phi = phi0;
  const int num_users = phi.users();
  const int max_passes = 10 * num_users;
  SwapMatchStats local;

  for (int pass = 0; pass < max_passes; ++pass) {
    int swaps_this_pass = 0;
    for (int i = 0; i < num_users; ++i) {
      for (int j = i + 1; j < num_users; ++j) {
        if (phi.channel_of[i] == phi.channel_of[j]) continue;
        if (scope == SwapScope::SameRegion && regions[i] != regions[j]) continue;
        if (!is_swap_blocking(phi, i, j, u)) continue;
        const int ki = phi.channel_of[i];
        const int kj = phi.channel_of[j];
        auto replace = [](std::array<int, 2>& pr, int from, int to) {
          (pr[0] == from ? pr[0] : pr[1]) = to;
        };
        replace(phi.pair[ki], i, j);
        replace(phi.pair[kj], j, i);
        phi.channel_of[i] = kj;
        phi.channel_of[j] = ki;
        ++swaps_this_pass;
      }
    }
    local.swaps += swaps_this_pass;
    ++local.passes;
    if (swaps_this_pass == 0) break;
  }
  if (stats) *stats = local;
  return phi;
}

StarCoefficients matching_init_coefficients(const Scenario& scn, const SurfaceMode& mode) {
  const int big_k = scn.cfg.num_subchannels;
  const int num_users = scn.cfg.num_users;
  // Reference cascade per region: the (k, i) slot with the largest potential
  // gain sum_m |q[m]|^2 among that region's users.
  CVec ref_t, ref_r;
  double best_t = -1.0, best_r = -1.0;
  for (int k = 0; k < big_k; ++k)
    for (int i = 0; i < num_users; ++i) {
      const double pot = scn.channels.q[k][i].squaredNorm();
      if (scn.layout.region[i] == Region::T && pot > best_t) {
        best_t = pot;
        ref_t = scn.channels.q[k][i];
      } else if (scn.layout.region[i] == Region::R && pot > best_r) {
        best_r = pot;
        ref_r = scn.channels.q[k][i];
      }
    }
  return aligned_coefficients(ref_t, ref_r, mode);
}

Mat snapshot_gains(const Scenario& scn, const StarCoefficients& coeffs) {
  const int big_k = scn.cfg.num_subchannels;
  const int num_users = scn.cfg.num_users;
  Mat gain(big_k, num_users);
  for (int k = 0; k < big_k; ++k)
    for (int i = 0; i < num_users; ++i) {
      const Side side = scn.layout.region[i] == Region::T ? Side::T : Side::R;
      gain(k, i) = effective_gain(coeffs, normalized_cascade(scn, k, i), side);
    }
  return gain;
}

namespace {

// Deferred acceptance rounds shared by init_oma / LMA / SMA; the acceptance
// policy decides whether a channel takes a proposer.
struct ProposalState {
  std::vector<std::array<int, 2>> slots;       // accepted users per channel (-1 empty)
  std::vector<std::vector<char>> rejected;     // [user][channel]
  std::vector<int> channel_of;

  ProposalState(int num_users, int num_channels)
      : slots(num_channels, {-1, -1}),
        rejected(num_users, std::vector<char>(num_channels, 0)),
        channel_of(num_users, -1) {}

  int free_slots(int k) const { return (slots[k][0] < 0) + (slots[k][1] < 0); }
  void accept(int k, int user) {
    (slots[k][0] < 0 ? slots[k][0] : slots[k][1]) = user;
    channel_of[user] = k;
  }
};

// policy(k, user) -> true when the channel may still take this user.
Assignment propose_rounds(const Mat& gain, const std::function<bool(const ProposalState&, int, int)>& policy) {
  const int big_k = static_cast<int>(gain.rows());
  const int num_users = static_cast<int>(gain.cols());
  ProposalState st(num_users, big_k);

  for (int round = 0; round < num_users * big_k + 1; ++round) {
    // Collect proposals: each unmatched user proposes to its best-gain channel
    // that has not rejected it and still admits its kind.
    std::vector<std::vector<int>> proposals(big_k);
    bool any_unmatched = false;
    for (int i = 0; i < num_users; ++i) {
      if (st.channel_of[i] >= 0) continue;
      any_unmatched = true;
      int best = -1;
      for (int k = 0; k < big_k; ++k) {
        if (st.rejected[i][k]) continue;
        if (best < 0 || gain(k, i) > gain(best, i)) best = k;
      }
      if (best < 0) throw std::runtime_error("propose_rounds: user rejected everywhere");
      proposals[best].push_back(i);
    }
    if (!any_unmatched) break;

    for (int k = 0; k < big_k; ++k) {
      if (proposals[k].empty()) continue;
      // Best gain first; ties by user id for determinism.
      std::sort(proposals[k].begin(), proposals[k].end(), [&](int a, int b) {
        if (gain(k, a) != gain(k, b)) return gain(k, a) > gain(k, b);
        return a < b;
      });
      for (int user : proposals[k]) {
        if (st.free_slots(k) > 0 && policy(st, k, user)) {
          st.accept(k, user);
        } else {
          st.rejected[user][k] = 1;  // reject-new: occupants are never bumped
        }
      }
    }
  }
  return Assignment::from_pairs(st.slots, num_users);
}

UtilityOracle scheme_oracle(Scheme scheme, const Mat& gain, double p_each) {
  return scheme == Scheme::Oma ? oma_snapshot_oracle(gain, p_each) : noma_snapshot_oracle(gain, p_each);
}

}  // namespace

std::pair<Assignment, StarCoefficients> init_oma(const Scenario& scn, const SurfaceMode& mode) {
  const StarCoefficients coeffs = matching_init_coefficients(scn, mode);
  const Mat gain = snapshot_gains(scn, coeffs);
  const Assignment phi =
      propose_rounds(gain, [](const ProposalState&, int, int) { return true; });
  return {phi, coeffs};
}

LmaResult lma(const Scenario& scn, const SurfaceMode& mode, Scheme scheme) {
  const int half = scn.cfg.num_users / 2;
  int count_t = 0;
  for (Region r : scn.layout.region) count_t += (r == Region::T);
  if (count_t != half) throw std::invalid_argument("lma: regions must hold I/2 users each");

  LmaResult res;
  res.coeffs = matching_init_coefficients(scn, mode);
  const Mat gain = snapshot_gains(scn, res.coeffs);

  // One T and one R user per channel.
  const auto& regions = scn.layout.region;
  Assignment phi0 = propose_rounds(gain, [&regions](const ProposalState& st, int k, int user) {
    const Region mine = regions[user];
    for (int occupant : st.slots[k])
      if (occupant >= 0 && regions[occupant] == mine) return false;
    return true;
  });

  const double p_each = scn.cfg.p_max / scn.cfg.num_users;
  res.assignment = swap_match(phi0, scheme_oracle(scheme, gain, p_each), SwapScope::SameRegion,
                              scn.layout.region);

  res.order_hint.resize(scn.cfg.num_subchannels);
  for (int k = 0; k < scn.cfg.num_subchannels; ++k) {
    const auto& pr = res.assignment.pair[k];
    res.order_hint[k] = gain(k, pr[0]) >= gain(k, pr[1]) ? pr[0] : pr[1];
  }
  return res;
}

Assignment sma(const Scenario& scn, const SurfaceMode& mode, Scheme scheme) {
  const StarCoefficients coeffs = matching_init_coefficients(scn, mode);
  const Mat gain = snapshot_gains(scn, coeffs);
  const auto& regions = scn.layout.region;
  const int big_k = scn.cfg.num_subchannels;
  const int num_users = scn.cfg.num_users;

  // Same-region pairs while head-count allows; with an odd per-region count
  // the two leftovers share the last channel. Greedy by snapshot gain.
  std::vector<char> matched(num_users, 0);
  std::vector<char> channel_used(big_k, 0);
  std::vector<std::array<int, 2>> pairs(big_k, {-1, -1});

  auto place_region_pairs = [&](Region reg) {
    for (;;) {
      std::vector<int> free_users;
      for (int i = 0; i < num_users; ++i)
        if (!matched[i] && regions[i] == reg) free_users.push_back(i);
      if (free_users.size() < 2) break;
      // Lead user and channel with the best single gain, partner next-best
      // on that channel.
      int lead = -1, lead_k = -1;
      for (int i : free_users)
        for (int k = 0; k < big_k; ++k)
          if (!channel_used[k] && (lead < 0 || gain(k, i) > gain(lead_k, lead))) {
            lead = i;
            lead_k = k;
          }
      int partner = -1;
      for (int i : free_users)
        if (i != lead && (partner < 0 || gain(lead_k, i) > gain(lead_k, partner))) partner = i;
      pairs[lead_k] = {lead, partner};
      channel_used[lead_k] = 1;
      matched[lead] = matched[partner] = 1;
    }
  };
  place_region_pairs(Region::T);
  place_region_pairs(Region::R);

  // Odd leftovers (one per region) pair cross-region on the remaining channel.
  std::vector<int> leftovers;
  for (int i = 0; i < num_users; ++i)
    if (!matched[i]) leftovers.push_back(i);
  if (!leftovers.empty()) {
    int free_k = -1;
    for (int k = 0; k < big_k; ++k)
      if (!channel_used[k]) free_k = k;
    pairs[free_k] = {leftovers[0], leftovers[1]};
  }

  Assignment phi0 = Assignment::from_pairs(pairs, num_users);
  const double p_each = scn.cfg.p_max / num_users;
  return swap_match(phi0, scheme_oracle(scheme, gain, p_each), SwapScope::SameRegion, regions);
}

std::vector<Assignment> enumerate_assignments(int num_users, int num_subchannels) {
  if (num_users > 6) throw GuardError("enumerate_assignments: guarded to I <= 6");
  if (num_users != 2 * num_subchannels)
    throw std::invalid_argument("enumerate_assignments: needs I = 2K");

  // All partitions into unordered pairs, then all channel labelings.
  std::vector<std::vector<std::array<int, 2>>> pairings;
  std::vector<std::array<int, 2>> current;
  std::vector<char> used(num_users, 0);
  std::function<void()> rec = [&]() {
    int first = -1;
    for (int i = 0; i < num_users; ++i)
      if (!used[i]) {
        first = i;
        break;
      }
    if (first < 0) {
      pairings.push_back(current);
      return;
    }
    used[first] = 1;
    for (int j = first + 1; j < num_users; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current.push_back({first, j});
      rec();
      current.pop_back();
      used[j] = 0;
    }
    used[first] = 0;
  };
  rec();

  std::vector<Assignment> out;
  std::vector<int> perm(num_subchannels);
  std::iota(perm.begin(), perm.end(), 0);
  for (const auto& pairing : pairings) {
    std::vector<int> p = perm;
    do {
      std::vector<std::array<int, 2>> labeled(num_subchannels);
      for (int k = 0; k < num_subchannels; ++k) labeled[p[k]] = pairing[k];
      out.push_back(Assignment::from_pairs(labeled, num_users));
    } while (std::next_permutation(p.begin(), p.end()));
  }
  return out;
}

Assignment exhaustive_assignment(
    int num_users, int num_subchannels,
    const std::function<std::optional<double>(const Assignment&)>& inner) {
  const std::vector<Assignment> candidates = enumerate_assignments(num_users, num_subchannels);
  const Assignment* best = nullptr;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const Assignment& cand : candidates) {
    const std::optional<double> v = inner(cand);
    if (v && *v > best_value) {
      best_value = *v;
      best = &cand;
    }
  }
  if (!best) throw InfeasibleError("exhaustive_assignment: every candidate infeasible", "inner");
  return *best;
}

}  // namespace staralloc
