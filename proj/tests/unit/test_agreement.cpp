#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsop/adaptive.hpp"
#include "rsop/chain.hpp"
#include "rsop/detector.hpp"
#include "rsop/model.hpp"
#include "rsop/simulator.hpp"

using namespace rsop;

// Long-run frame estimates against the analyzer, and the max(3 SE, 5%) agreement rule.
TEST_SUITE("agreement") {

TEST_CASE("frame estimates track the analyzer with two users on five channels") {
  const NetworkConfig c = symmetric_config(2, 5, 0.5, 0.1);
  const QosConstraints qos;
  const SensingModel model = calibrate_detector(c, qos);
  const SensingParams params{1e-3, 0.8};
  const auto sched = homogeneous(c, params);
  SimOptions o;
  o.sensing = model;
  Rng rng(31);
  std::vector<SlotOutcome> frame;
  std::vector<double> r;
  for (int f = 0; f < 4000; ++f) {
    frame.clear();
    for (int s = 0; s < 50; ++s) frame.push_back(run_slot(c, sched, o, rng));
    r.push_back(frame_estimate(frame, 0, 50, 0.0, c.n_pu).r);
  }
  double mean = 0.0, ss = 0.0;
  for (double x : r) mean += x / r.size();
  for (double x : r) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (r.size() - 1) / r.size());
  const double analytic = avg_throughput(c, params, model);
  CAPTURE(mean);
  CAPTURE(se);
  CAPTURE(analytic);
  CHECK(std::abs(mean - analytic) <= 3.0 * se);
}

TEST_CASE("simulator within max(3 SE, 5%) of the analyzer") {
  for (auto [ns, np] : {std::pair{3, 7}, std::pair{5, 7}, std::pair{7, 3}, std::pair{20, 5}}) {
    const NetworkConfig c = symmetric_config(ns, np, 0.5, 0.1);
    const QosConstraints qos;
    const SensingModel model = calibrate_detector(c, qos);
    const SensingParams params{1e-3, 0.8};
    SimOptions o;
    o.sensing = model;
    const RunMetrics m = run_replication(c, homogeneous(c, params), o, 100000, 17);
    const ChainResult a = analyze(c, params, model);
    CAPTURE(ns);
    CAPTURE(np);
    CAPTURE(m.throughput);
    CAPTURE(a.perf.throughput);
    CAPTURE(m.interference);
    CAPTURE(a.perf.interference_time);
    CHECK(std::abs(m.throughput - a.perf.throughput) <=
          std::max(3.0 * m.throughput_se, 0.05 * a.perf.throughput));
    CHECK(std::abs(m.interference - a.perf.interference_time) <=
          std::max(3.0 * m.interference_se, 0.05 * a.perf.interference_time));
  }
}

}  // TEST_SUITE
