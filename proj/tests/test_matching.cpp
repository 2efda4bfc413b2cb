#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "staralloc/matching.hpp"

using namespace staralloc;

namespace {

Assignment two_by_two(int a0, int a1, int b0, int b1) {
  return Assignment::from_pairs({{a0, a1}, {b0, b1}}, 4);
}

// Full scan for any in-scope swap-blocking pair.
bool has_blocking_pair(const Assignment& phi, const UtilityOracle& u, SwapScope scope,
                       const std::vector<Region>& regions) {
  for (int i = 0; i < phi.users(); ++i)
    for (int j = i + 1; j < phi.users(); ++j) {
      if (phi.channel_of[i] == phi.channel_of[j]) continue;
      if (scope == SwapScope::SameRegion && regions[i] != regions[j]) continue;
      if (is_swap_blocking(phi, i, j, u)) return true;
    }
  return false;
}

Scenario desk_scenario(std::uint64_t seed, int k = 3, int m = 6) {
  SystemConfig cfg;
  cfg.num_subchannels = k;
  cfg.num_users = 2 * k;
  cfg.num_elements = m;
  return make_scenario(cfg, seed);
}

double snapshot_sum(const Assignment& phi, const UtilityOracle& u) {
  double s = 0.0;
  for (int k = 0; k < phi.subchannels(); ++k) s += u.channel_utility(phi, k);
  return s;
}

}  // namespace

TEST_CASE("assignment validation enforces the two-to-one conditions") {
  CHECK_NOTHROW(two_by_two(0, 1, 2, 3));
  CHECK_THROWS_AS(Assignment::from_pairs({{0, 1}, {1, 2}}, 4), std::invalid_argument);
  CHECK_THROWS_AS(Assignment::from_pairs({{0, 0}, {2, 3}}, 4), std::invalid_argument);
  const Assignment a = two_by_two(2, 0, 1, 3);
  CHECK(a.partner_of(2) == 0);
  CHECK(a.channel_of[3] == 1);
}

TEST_CASE("swap blocking requires mutual weak gain with one strict winner") {
  // Hand-built OMA gains: swapping users 1 and 2 helps both and hurts nobody.
  Mat gain(2, 4);
  gain << 2.0, 0.2, 2.0, 0.1,   // channel 0 favors users 0 and 2
          0.1, 2.0, 0.2, 2.0;   // channel 1 favors users 1 and 3
  const UtilityOracle u = oma_snapshot_oracle(gain, 1.0);
  const Assignment bad = two_by_two(0, 1, 2, 3);
  CHECK(is_swap_blocking(bad, 1, 2, u));

  const Assignment good = two_by_two(0, 2, 1, 3);
  CHECK_FALSE(is_swap_blocking(good, 2, 3, u));

  // Symmetric users: a swap changes nothing, so no strict improvement.
  Mat flat = Mat::Constant(2, 4, 1.0);
  const UtilityOracle uf = oma_snapshot_oracle(flat, 1.0);
  CHECK_FALSE(is_swap_blocking(bad, 1, 2, uf));

  CHECK_THROWS_AS(is_swap_blocking(bad, 0, 1, u), std::invalid_argument);
}

TEST_CASE("a swap that hurts a channel is not blocking") {
  // Swapping 1 and 3: user 1 jumps from gain 0.5 to 5.0, but channel 1 loses
  // its strong user (3.0 -> 0.2 for the incomer), so channel 1 objects.
  Mat gain(2, 4);
  gain << 1.0, 5.0, 1.0, 0.3,
          1.0, 0.5, 1.0, 3.0;
  const UtilityOracle u = oma_snapshot_oracle(gain, 1.0);
  const Assignment phi = two_by_two(0, 1, 2, 3);
  CHECK_FALSE(is_swap_blocking(phi, 1, 3, u));
}

TEST_CASE("swap matching reaches a two-sided exchange stable state") {
  Mat gain(2, 4);
  gain << 2.0, 0.2, 2.0, 0.1,
          0.1, 2.0, 0.2, 2.0;
  const UtilityOracle u = oma_snapshot_oracle(gain, 1.0);
  const std::vector<Region> regions{Region::T, Region::T, Region::R, Region::R};

  SwapMatchStats stats;
  const Assignment out = swap_match(two_by_two(0, 1, 2, 3), u, SwapScope::AllPairs, regions, &stats);
  CHECK_FALSE(has_blocking_pair(out, u, SwapScope::AllPairs, regions));
  CHECK(out.channel_of[0] == out.channel_of[2]);
  CHECK(out.channel_of[1] == out.channel_of[3]);
  CHECK(stats.swaps <= 4 * 3 / 2);  // per-pass bound

  // A stable state is a fixed point.
  const Assignment again = swap_match(out, u, SwapScope::AllPairs, regions);
  CHECK(again.channel_of == out.channel_of);
}

TEST_CASE("executed swaps strictly increase total utility on random instances") {
  RngStream rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const int big_k = 3;
    Mat gain(big_k, 2 * big_k);
    for (int k = 0; k < big_k; ++k)
      for (int i = 0; i < 2 * big_k; ++i) gain(k, i) = rng.uniform(0.05, 4.0);
    const UtilityOracle u = noma_snapshot_oracle(gain, 0.25);
    std::vector<Region> regions;
    for (int i = 0; i < 2 * big_k; ++i) regions.push_back(i % 2 ? Region::R : Region::T);

    Assignment phi = Assignment::from_pairs({{0, 1}, {2, 3}, {4, 5}}, 6);
    double total = snapshot_sum(phi, u);
    // Walk the scan manually: each executed swap must raise the total.
    for (int pass = 0; pass < 60; ++pass) {
      bool swapped = false;
      for (int i = 0; i < phi.users() && !swapped; ++i)
        for (int j = i + 1; j < phi.users() && !swapped; ++j) {
          if (phi.channel_of[i] == phi.channel_of[j]) continue;
          if (!is_swap_blocking(phi, i, j, u)) continue;
          Assignment next = phi;
          const int ki = next.channel_of[i], kj = next.channel_of[j];
          auto rep_slot = [](std::array<int, 2>& pr, int from, int to) {
            (pr[0] == from ? pr[0] : pr[1]) = to;
          };
          rep_slot(next.pair[ki], i, j);
          rep_slot(next.pair[kj], j, i);
          next.channel_of[i] = kj;
          next.channel_of[j] = ki;
          const double next_total = snapshot_sum(next, u);
          CHECK(next_total > total);
          phi = next;
          total = next_total;
          swapped = true;
        }
      if (!swapped) break;
    }
    CHECK_FALSE(has_blocking_pair(phi, u, SwapScope::AllPairs, regions));
  }
}

TEST_CASE("init_oma sends users to their argmax channels when capacity allows") {
  const Scenario scn = desk_scenario(5, 2, 4);
  auto [phi, coeffs] = init_oma(scn, SurfaceMode::star());
  phi.validate();
  const Mat gain = snapshot_gains(scn, coeffs);

  // Deterministic per seed.
  const Scenario scn2 = desk_scenario(5, 2, 4);
  auto [phi2, coeffs2] = init_oma(scn2, SurfaceMode::star());
  CHECK(phi.channel_of == phi2.channel_of);

  // When each channel is the argmax for exactly two users the greedy rounds
  // must give every user its argmax; verify on the realized gains.
  std::vector<int> argmax(scn.cfg.num_users);
  std::vector<int> count(scn.cfg.num_subchannels, 0);
  bool balanced = true;
  for (int i = 0; i < scn.cfg.num_users; ++i) {
    argmax[i] = gain(0, i) >= gain(1, i) ? 0 : 1;
    if (++count[argmax[i]] > 2) balanced = false;
  }
  if (balanced)
    for (int i = 0; i < scn.cfg.num_users; ++i) CHECK(phi.channel_of[i] == argmax[i]);
}

TEST_CASE("init_oma single channel puts both users on it") {
  const Scenario scn = desk_scenario(2, 1, 4);
  auto [phi, coeffs] = init_oma(scn, SurfaceMode::star());
  CHECK(phi.pair[0][0] + phi.pair[0][1] == 1);
}

TEST_CASE("lma pairs one T with one R user on every channel") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 9ULL, 77ULL}) {
    const Scenario scn = desk_scenario(seed);
    const LmaResult res = lma(scn, SurfaceMode::star());
    res.assignment.validate();
    for (int k = 0; k < scn.cfg.num_subchannels; ++k) {
      const Region r0 = scn.layout.region[res.assignment.pair[k][0]];
      const Region r1 = scn.layout.region[res.assignment.pair[k][1]];
      CHECK(r0 != r1);
    }
    // Stability within the same-region scope.
    const Mat gain = snapshot_gains(scn, res.coeffs);
    const UtilityOracle u = noma_snapshot_oracle(gain, scn.cfg.p_max / scn.cfg.num_users);
    CHECK_FALSE(has_blocking_pair(res.assignment, u, SwapScope::SameRegion, scn.layout.region));
    // Decoding hint names a member of each pair.
    for (int k = 0; k < scn.cfg.num_subchannels; ++k) {
      const auto& pr = res.assignment.pair[k];
      CHECK((res.order_hint[k] == pr[0] || res.order_hint[k] == pr[1]));
    }
  }
}

TEST_CASE("lma on one pair matches the single T-R pairing") {
  const Scenario scn = desk_scenario(4, 1, 4);
  const LmaResult res = lma(scn, SurfaceMode::star());
  CHECK(res.assignment.pair[0][0] + res.assignment.pair[0][1] == 1);
}

TEST_CASE("lma picks the best of the four pairings under its snapshot at I=4") {
  for (std::uint64_t seed : {3ULL, 8ULL, 21ULL, 34ULL}) {
    const Scenario scn = desk_scenario(seed, 2, 4);
    const LmaResult res = lma(scn, SurfaceMode::star());
    const Mat gain = snapshot_gains(scn, res.coeffs);
    const UtilityOracle u = noma_snapshot_oracle(gain, scn.cfg.p_max / scn.cfg.num_users);
    const double mine = snapshot_sum(res.assignment, u);

    // All four T-R pairings (2 matchings x 2 channel labelings).
    double best = 0.0;
    std::vector<int> ts, rs;
    for (int i = 0; i < 4; ++i)
      (scn.layout.region[i] == Region::T ? ts : rs).push_back(i);
    for (int swap_r = 0; swap_r < 2; ++swap_r)
      for (int label = 0; label < 2; ++label) {
        std::array<int, 2> pr0{ts[0], rs[swap_r]};
        std::array<int, 2> pr1{ts[1], rs[1 - swap_r]};
        const Assignment cand = label == 0 ? Assignment::from_pairs({pr0, pr1}, 4)
                                           : Assignment::from_pairs({pr1, pr0}, 4);
        best = std::max(best, snapshot_sum(cand, u));
      }
    CHECK(mine == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("sma pairs same-region users and mixes only the leftovers") {
  // I = 4: forced {T,T} and {R,R}.
  const Scenario scn4 = desk_scenario(13, 2, 4);
  const Assignment a4 = sma(scn4, SurfaceMode::star());
  for (int k = 0; k < 2; ++k)
    CHECK(scn4.layout.region[a4.pair[k][0]] == scn4.layout.region[a4.pair[k][1]]);

  // I = 6: exactly one mixed channel.
  for (std::uint64_t seed : {1ULL, 5ULL, 19ULL}) {
    const Scenario scn6 = desk_scenario(seed);
    const Assignment a6 = sma(scn6, SurfaceMode::star());
    int mixed = 0;
    for (int k = 0; k < 3; ++k)
      mixed += (scn6.layout.region[a6.pair[k][0]] != scn6.layout.region[a6.pair[k][1]]);
    CHECK(mixed == 1);

    const StarCoefficients coeffs = matching_init_coefficients(scn6, SurfaceMode::star());
    const Mat gain = snapshot_gains(scn6, coeffs);
    const UtilityOracle u = noma_snapshot_oracle(gain, scn6.cfg.p_max / scn6.cfg.num_users);
    CHECK_FALSE(has_blocking_pair(a6, u, SwapScope::SameRegion, scn6.layout.region));
  }
}

TEST_CASE("assignment enumeration counts channel-labeled pairings") {
  CHECK(enumerate_assignments(2, 1).size() == 1);
  CHECK(enumerate_assignments(4, 2).size() == 6);
  CHECK(enumerate_assignments(6, 3).size() == 90);
  CHECK_THROWS_AS(enumerate_assignments(8, 4), GuardError);

  // All candidates distinct and valid.
  std::set<std::vector<int>> seen;
  for (const Assignment& a : enumerate_assignments(4, 2)) {
    a.validate();
    seen.insert(a.channel_of);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("exhaustive assignment dominates the heuristics under a common score") {
  for (std::uint64_t seed : {2ULL, 6ULL, 10ULL}) {
    const Scenario scn = desk_scenario(seed, 2, 4);
    const StarCoefficients coeffs = matching_init_coefficients(scn, SurfaceMode::star());
    const Mat gain = snapshot_gains(scn, coeffs);
    const UtilityOracle u = noma_snapshot_oracle(gain, scn.cfg.p_max / scn.cfg.num_users);
    auto inner = [&](const Assignment& cand) -> std::optional<double> {
      return snapshot_sum(cand, u);
    };
    const Assignment best = exhaustive_assignment(4, 2, inner);
    const double best_value = *inner(best);

    const LmaResult l = lma(scn, SurfaceMode::star());
    CHECK(best_value >= *inner(l.assignment) - 1e-12);
    const Assignment s = sma(scn, SurfaceMode::star());
    CHECK(best_value >= *inner(s) - 1e-12);
  }

  // Unique candidate for a single channel.
  auto one = exhaustive_assignment(2, 1, [](const Assignment&) { return 1.0; });
  CHECK(one.pair[0][0] + one.pair[0][1] == 1);

  // Every candidate infeasible.
  CHECK_THROWS_AS(exhaustive_assignment(2, 1, [](const Assignment&) { return std::nullopt; }),
                  InfeasibleError);
}
