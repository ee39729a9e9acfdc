#include <doctest.h>

#include <cmath>
#include <vector>

#include "../oracles.hpp"
#include "rsop/chain.hpp"
#include "rsop/detector.hpp"
#include "rsop/model.hpp"
#include "rsop/rng.hpp"

using namespace rsop;

namespace {

NetworkConfig cfg(int ns, int np, double presence) { return symmetric_config(ns, np, presence, 0.1); }

constexpr double kT = 10e-3;
constexpr double kOneStage = 6e-3;  // delta = 1 for any N_p

oracle::EnumResult enumerate_for(const NetworkConfig& c, const SensingParams& params,
                                 const ChainResult& res) {
  oracle::StageInputs in;
  in.n_su = c.n_su;
  in.n_pu = c.n_pu;
  in.delta = res.occupancy.delta;
  in.p = params.p;
  in.slot = c.slot_duration;
  in.tau = params.tau;
  in.handoff = c.handoff_time;
  in.tx_rate = c.tx_rate;
  in.busy = res.occupancy.occ;
  in.p_d = res.occupancy.p_d;
  in.p_fa = res.occupancy.p_fa;
  return oracle::enumerate(in);
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("no sensing at p = 0") {
  const NetworkConfig c = cfg(4, 5, 0.3);
  const SensingParams params{1e-3, 0.0};
  const ChainResult res = analyze(c, params, DetectorConfig{1.05});
  for (const auto& row : res.occupancy.occ) {
    for (double x : row) CHECK(x == doctest::Approx(0.3));
  }
  CHECK(res.distribution.pi_te == doctest::Approx(1.0));
  for (double x : res.distribution.pi_t) CHECK(x == 0.0);
  for (double x : res.distribution.pi_i) CHECK(x == 0.0);
  CHECK(pruned_no_tx_prob(c, params, res.occupancy, 1, 1) == doctest::Approx(1.0));
  CHECK(res.perf.throughput == 0.0);
  CHECK(res.perf.interference_time == 0.0);
}

TEST_CASE("occupancy frozen when every sensor false-alarms") {
  const NetworkConfig c = cfg(6, 5, 0.4);
  const OccupancyTable occ = occupancy_evolution(c, {1e-3, 0.9}, FixedSensing{1.0, 0.9});
  for (const auto& row : occ.occ) {
    for (double x : row) CHECK(x == doctest::Approx(0.4));
  }
}

TEST_CASE("occupancy recursion by hand") {
  // One channel: L = (p / N_p) N_s = 2, U = 1 - 0.5^2.
  const OccupancyTable one = occupancy_evolution(cfg(2, 1, 0.0), {1e-3, 1.0}, FixedSensing{0.5, 1.0});
  CHECK(one.l[0] == doctest::Approx(2.0));
  CHECK(one.u[0][0] == doctest::Approx(0.75));
  CHECK(one.occ[0][0] == 0.0);
  // Two channels, two stages: L = 1, U = 0.5, occ at stage 2 = 0 + 1 * 0.5^0 * 0.5.
  const OccupancyTable two = occupancy_evolution(cfg(2, 2, 0.0), {1e-3, 1.0}, FixedSensing{0.5, 1.0});
  REQUIRE(two.delta == 2);
  CHECK(two.u[0][0] == doctest::Approx(0.5));
  CHECK(two.occ[0][1] == doctest::Approx(0.5));
  CHECK(two.occ[1][1] == doctest::Approx(0.5));
  CHECK(two.n_ho[0] == doctest::Approx(2.0));
}

TEST_CASE("stage distribution by hand") {
  const NetworkConfig c1 = cfg(1, 1, 0.0);
  const SensingParams half{kOneStage, 0.6};
  const OccupancyTable o1 = occupancy_evolution(c1, half, FixedSensing{0.0, 1.0});
  const ChainDistribution d1 = state_distribution(c1, half, o1);
  CHECK(d1.pi_ho[0] == 1.0);
  CHECK(d1.pi_t[0] == doctest::Approx(0.6));

  const NetworkConfig c2 = cfg(1, 2, 0.5);
  const SensingParams full{kOneStage, 1.0};
  const OccupancyTable o2 = occupancy_evolution(c2, full, FixedSensing{0.1, 0.9});
  CHECK(state_distribution(c2, full, o2).pi_t[0] == doctest::Approx(0.45));
}

TEST_CASE("pruned chain") {
  const SensingParams full{kOneStage, 1.0};
  const NetworkConfig c1 = cfg(1, 1, 0.0);
  const OccupancyTable o1 = occupancy_evolution(c1, full, FixedSensing{0.0, 1.0});
  // The lone channel is always used, so "never transmits on channel 1" has probability 0;
  // removed edges lose their mass (the two-channel cases below pin that reading down).
  CHECK(pruned_no_tx_prob(c1, full, o1, 1, 1) == doctest::Approx(0.0));
  CHECK(state_distribution(c1, full, o1, Pruning{1, 1}).pi_pruned == doctest::Approx(1.0));

  const NetworkConfig c2 = cfg(1, 2, 0.0);
  const SensingParams two_stage{1e-3, 1.0};
  const OccupancyTable o2 = occupancy_evolution(c2, two_stage, FixedSensing{0.0, 1.0});
  REQUIRE(o2.delta == 2);
  CHECK(pruned_no_tx_prob(c2, two_stage, o2, 1, 1) == doctest::Approx(0.5));
}

TEST_CASE("success probability and throughput on two channels") {
  const NetworkConfig c = cfg(2, 2, 0.0);
  const SensingParams params{kOneStage, 1.0};
  const ChainResult res = analyze(c, params, FixedSensing{0.0, 1.0});
  REQUIRE(res.occupancy.delta == 1);
  CHECK(res.perf.no_tx_prob[0][0] == doctest::Approx(0.5));
  CHECK(res.perf.success_prob[0][0] == doctest::Approx(0.25));
  CHECK(res.perf.success_prob[0][0] + res.perf.success_prob[1][0] == doctest::Approx(0.5));
  CHECK(res.perf.throughput == doctest::Approx(0.5 * (kT - kOneStage) / kT));
  CHECK(success_prob(c, res.occupancy, 1, 1, 0.0, res.distribution) == 0.0);
}

TEST_CASE("single user throughput and interference") {
  const SensingParams params{kOneStage, 1.0};
  const ChainResult free = analyze(cfg(1, 1, 0.0), params, FixedSensing{0.0, 1.0});
  CHECK(free.perf.throughput == doctest::Approx((kT - kOneStage) / kT));
  CHECK(free.perf.success_prob[0][0] == doctest::Approx(free.distribution.pi_t[0]));

  const ChainResult busy = analyze(cfg(1, 1, 1.0), params, FixedSensing{0.0, 0.9});
  CHECK(busy.perf.interference_time == doctest::Approx(0.1 * (kT - kOneStage) / kT));
  CHECK(busy.perf.throughput == 0.0);

  const ChainResult perfect = analyze(cfg(5, 3, 0.6), {1e-3, 0.8}, FixedSensing{0.1, 1.0});
  CHECK(perfect.perf.interference_time == 0.0);
}

TEST_CASE("property: distribution invariants over random scenarios") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int ns = 1 + static_cast<int>(uniform_index(rng, 30));
    const int np = 1 + static_cast<int>(uniform_index(rng, 12));
    NetworkConfig c = cfg(ns, np, 0.5);
    for (auto& x : c.presence_prob) x = uniform01(rng);
    for (auto& x : c.pu_power) x = 0.02 + 0.5 * uniform01(rng);
    const SensingParams params{(0.01 + 0.5 * uniform01(rng)) * kT, uniform01(rng)};
    const SensingModel model = trial % 2 == 0
                                   ? SensingModel{DetectorConfig{1.0 + 0.1 * uniform01(rng)}}
                                   : SensingModel{FixedSensing{0.3 * uniform01(rng), 0.5 + 0.5 * uniform01(rng)}};
    const ChainResult res = analyze(c, params, model);
    const auto& occ = res.occupancy;
    CAPTURE(trial);
    CHECK(res.distribution.pi_ho[0] == 1.0);
    CHECK(res.distribution.disposition_total() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(occ.n_ho[0] == doctest::Approx(ns));
    for (int m = 0; m < np; ++m) {
      const auto& row = occ.occ[static_cast<std::size_t>(m)];
      CHECK(row[0] == doctest::Approx(c.presence(m)));
      for (std::size_t n = 0; n < row.size(); ++n) {
        CHECK(row[n] >= 0.0);
        CHECK(row[n] <= 1.0);
        if (n > 0) CHECK(row[n] >= row[n - 1] - 1e-15);
      }
    }
    for (double h : occ.n_ho) {
      CHECK(h >= 0.0);
      CHECK(h <= ns + 1e-9);
    }
    for (int m = 1; m <= np; ++m) {
      for (int n = 1; n <= occ.delta; ++n) {
        const ChainDistribution pruned = state_distribution(c, params, occ, Pruning{m, n});
        CHECK(pruned.disposition_total() == doctest::Approx(1.0).epsilon(1e-9));
        const double y = res.perf.no_tx_prob[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(n - 1)];
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
      }
    }
    CHECK(res.perf.throughput >= 0.0);
    CHECK(res.perf.interference_time >= 0.0);
    // Stages are summed without a union, so the bound is sum_n RT_n / T rather than 1.
    double stage_time = 0.0;
    for (int n = 1; n <= occ.delta; ++n) stage_time += remaining_time(n, kT, params.tau, c.handoff_time) / kT;
    CHECK(res.perf.interference_time <= stage_time + 1e-12);
    if (occ.delta == 1) CHECK(res.perf.interference_time <= 1.0);
  }
}

TEST_CASE("enumeration oracle with the energy detector") {
  for (int ns : {1, 2, 3}) {
    for (int np : {2, 3}) {
      NetworkConfig c = cfg(ns, np, 0.4);
      c.presence_prob[0] = 0.1;
      const SensingParams params{0.4 * kT, 0.7};
      const ChainResult res = analyze(c, params, DetectorConfig{1.01});
      const oracle::EnumResult e = enumerate_for(c, params, res);
      CAPTURE(ns);
      CAPTURE(np);
      CHECK(res.perf.throughput == doctest::Approx(e.r).epsilon(1e-9));
      CHECK(res.perf.interference_time == doctest::Approx(e.t_i).epsilon(1e-9));
    }
  }
}

}  // TEST_SUITE
