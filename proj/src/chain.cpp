#include "rsop/chain.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "rsop/error.hpp"

namespace rsop {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

Table make_table(int rows, int cols) {
  return Table(idx(rows), std::vector<double>(idx(cols), 0.0));
}

struct StageQuality {
  double p_fa;
  double p_d;
  double snr;
};

// Sensing quality of channel m at stage n given the SNR the SU is exposed to.
StageQuality quality(const NetworkConfig& config, const SensingParams& params,
                     const SensingModel& sensing, double snr) {
  if (const auto* fixed = std::get_if<FixedSensing>(&sensing)) {
    return {fixed->p_fa, fixed->p_d, 0.0};
  }
  const auto& det = std::get<DetectorConfig>(sensing);
  return {false_alarm_prob(det.threshold_norm, params.tau, config.sampling_freq),
          1.0 - misdetection_prob(det.threshold_norm, params.tau, config.sampling_freq, snr), snr};
}

void check_stage(const OccupancyTable& occ, int m, int n) {
  if (n < 1 || n > occ.delta) throw Error(ErrorCode::kStageOutOfRange, "stage index");
  if (m < 1 || m > static_cast<int>(occ.occ.size())) {
    throw Error(ErrorCode::kInvalidConfig, "channel index out of range");
  }
}

}  // namespace

double clamp_probability(double x) {
  assert(x > -1e-9 && x < 1.0 + 1e-9);
  return std::clamp(x, 0.0, 1.0);
}

double OccupancyTable::max_misdetection() const {
  double worst = 0.0;
  for (const auto& row : p_d) {
    for (double pd : row) worst = std::max(worst, 1.0 - pd);
  }
  return worst;
}

OccupancyTable occupancy_evolution(const NetworkConfig& config, const SensingParams& params,
                                   const SensingModel& sensing, ChainOptions options) {
  const int delta = max_sensing_stages(config, params.tau);
  const int np = config.n_pu;
  const double p = params.p;
  const auto* det = std::get_if<DetectorConfig>(&sensing);
  const bool exact_snr = det != nullptr && det->snr_mode == SnrMode::kExactPerStage;

  OccupancyTable t;
  t.delta = delta;
  t.occ = make_table(np, delta);
  t.u = make_table(np, delta);
  t.q = make_table(np, delta);
  t.snr = make_table(np, delta);
  t.p_d = make_table(np, delta);
  t.p_fa.assign(idx(np), 0.0);
  t.l.assign(idx(delta), 0.0);
  t.n_ho.assign(idx(delta), 0.0);

  // Expected SU power accumulated on each channel by transmitters of earlier stages.
  std::vector<double> su_load(idx(np), 0.0);
  // Probability a free channel is still untaken at the start of stage n; with the
  // mean-field form this is P_fa^(L^(1) + ... + L^(n-1)).
  std::vector<double> untaken(idx(np), 1.0);

  t.n_ho[0] = config.n_su;
  for (int m = 0; m < np; ++m) t.occ[idx(m)][0] = config.presence(m);

  for (int n = 0; n < delta; ++n) {
    t.l[idx(n)] = p / np * t.n_ho[idx(n)];
    double q_sum = 0.0;
    for (int m = 0; m < np; ++m) {
      const auto mi = idx(m);
      double snr = config.pu_snr(m);
      if (n >= 1) {
        const bool reuse_stage2 = !exact_snr && n >= 2;
        snr = reuse_stage2 ? t.snr[mi][1]
                           : (config.presence(m) * config.pu_power[mi] +
                              su_load[mi] * config.su_power) /
                                 config.noise_power;
      }
      const StageQuality sq = quality(config, params, sensing, snr);
      t.p_fa[mi] = sq.p_fa;
      t.snr[mi][idx(n)] = sq.snr;
      t.p_d[mi][idx(n)] = sq.p_d;

      const double busy = t.occ[mi][idx(n)];
      const double q = clamp_probability((1.0 - busy) * sq.p_fa + busy * sq.p_d);
      t.q[mi][idx(n)] = q;
      q_sum += q;
      su_load[mi] += t.l[idx(n)] * (1.0 - q);

      // pow(0, 0) == 1: no sensors means nobody grabs the channel.
      const double u = options.occupancy == OccupancyMode::kMeanFieldPower
                           ? 1.0 - std::pow(sq.p_fa, t.l[idx(n)])
                           : 1.0 - std::pow(1.0 - p / np * (1.0 - sq.p_fa), t.n_ho[idx(n)]);
      t.u[mi][idx(n)] = clamp_probability(u);
      if (n + 1 < delta) {
        const double grabbed = (1.0 - config.presence(m)) * untaken[mi] * t.u[mi][idx(n)];
        t.occ[mi][idx(n + 1)] = clamp_probability(busy + grabbed);
      }
      untaken[mi] *= 1.0 - t.u[mi][idx(n)];
    }
    if (n + 1 < delta) {
      t.n_ho[idx(n + 1)] = ((1.0 - p) + p / np * q_sum) * t.n_ho[idx(n)];
    }
  }
  return t;
}

double ChainDistribution::disposition_total() const {
  double total = pi_te + pi_pruned;
  for (std::size_t n = 0; n < pi_t.size(); ++n) total += pi_t[n] + pi_i[n];
  return total;
}

ChainDistribution state_distribution(const NetworkConfig& config, const SensingParams& params,
                                     const OccupancyTable& occupancy,
                                     std::optional<Pruning> pruning) {
  const int delta = occupancy.delta;
  const int np = config.n_pu;
  const double p = params.p;
  if (pruning) check_stage(occupancy, pruning->channel, pruning->stage);

  ChainDistribution d;
  d.pi_ho.assign(idx(delta), 0.0);
  d.pi_channel = make_table(np, delta);
  d.pi_t.assign(idx(delta), 0.0);
  d.pi_i.assign(idx(delta), 0.0);

  double ho = 1.0;
  for (int n = 0; n < delta; ++n) {
    d.pi_ho[idx(n)] = ho;
    double moving_on = (1.0 - p) * ho;
    for (int m = 0; m < np; ++m) {
      const auto mi = idx(m);
      const double at_channel = p / np * ho;
      d.pi_channel[mi][idx(n)] = at_channel;
      const double busy = occupancy.occ[mi][idx(n)];
      const double to_t = at_channel * (1.0 - busy) * (1.0 - occupancy.p_fa[mi]);
      const double to_i = at_channel * busy * (1.0 - occupancy.p_d[mi][idx(n)]);
      moving_on += at_channel * occupancy.q[mi][idx(n)];
      const bool pruned = pruning && m == pruning->channel - 1 && n >= pruning->stage - 1;
      if (pruned) {
        d.pi_pruned += to_t + to_i;
      } else {
        d.pi_t[idx(n)] += to_t;
        d.pi_i[idx(n)] += to_i;
      }
    }
    ho = moving_on;
  }
  d.pi_te = ho;
  return d;
}

double pruned_no_tx_prob(const NetworkConfig& config, const SensingParams& params,
                         const OccupancyTable& occupancy, int m, int n) {
  const ChainDistribution pruned =
      state_distribution(config, params, occupancy, Pruning{m, n});
  double kept = pruned.pi_te;
  for (std::size_t i = 0; i < pruned.pi_t.size(); ++i) kept += pruned.pi_t[i] + pruned.pi_i[i];
  return clamp_probability(kept);
}

double success_prob(const NetworkConfig& config, const OccupancyTable& occupancy, int m, int n,
                    double no_tx, const ChainDistribution& dist) {
  check_stage(occupancy, m, n);
  const auto mi = idx(m - 1);
  const auto ni = idx(n - 1);
  const double to_t =
      dist.pi_channel[mi][ni] * (1.0 - occupancy.occ[mi][ni]) * (1.0 - occupancy.p_fa[mi]);
  return clamp_probability(to_t * std::pow(no_tx, config.n_su - 1));
}

ChainResult analyze(const NetworkConfig& config, const SensingParams& params,
                    const SensingModel& sensing, ChainOptions options) {
  ChainResult res;
  res.occupancy = occupancy_evolution(config, params, sensing, options);
  const auto& occ = res.occupancy;
  res.distribution = state_distribution(config, params, occ);
  const auto& dist = res.distribution;

  const int delta = occ.delta;
  const int np = config.n_pu;
  const double slot = config.slot_duration;
  auto& perf = res.perf;
  perf.success_prob = make_table(np, delta);
  perf.no_interf_prob = make_table(np, delta);
  perf.no_tx_prob = make_table(np, delta);

  double r = 0.0;
  double t_i = 0.0;
  for (int m = 1; m <= np; ++m) {
    const auto mi = idx(m - 1);
    for (int n = 1; n <= delta; ++n) {
      const auto ni = idx(n - 1);
      const double rt = remaining_time(n, slot, params.tau, config.handoff_time);
      const double y = pruned_no_tx_prob(config, params, occ, m, n);
      const double q = success_prob(config, occ, m, n, y, dist);
      const double to_i = dist.pi_channel[mi][ni] * occ.occ[mi][ni] * (1.0 - occ.p_d[mi][ni]);
      const double z = std::pow(1.0 - clamp_probability(to_i), config.n_su);
      perf.no_tx_prob[mi][ni] = y;
      perf.success_prob[mi][ni] = q;
      perf.no_interf_prob[mi][ni] = z;
      r += q * rt * config.tx_rate;
      t_i += (1.0 - z) * rt;
    }
  }
  perf.throughput = r / slot;
  perf.interference_time = t_i / (slot * np);
  return res;
}

double avg_throughput(const NetworkConfig& config, const SensingParams& params,
                      const SensingModel& sensing) {
  return analyze(config, params, sensing).perf.throughput;
}

double avg_interference(const NetworkConfig& config, const SensingParams& params,
                        const SensingModel& sensing) {
  return analyze(config, params, sensing).perf.interference_time;
}

}  // namespace rsop
