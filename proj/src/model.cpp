#include "rsop/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rsop/error.hpp"
#include "rsop/rng.hpp"

namespace rsop {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidTiming: return "invalid-timing";
    case ErrorCode::kStageOutOfRange: return "stage-out-of-range";
    case ErrorCode::kTooFewSamples: return "too-few-samples";
    case ErrorCode::kDegenerateSnr: return "degenerate-snr";
    case ErrorCode::kEmptyGrid: return "empty-grid";
    case ErrorCode::kShortFrame: return "short-frame";
    case ErrorCode::kInvalidSchedule: return "invalid-schedule";
    case ErrorCode::kConfigParse: return "config-parse";
    case ErrorCode::kUnwritableOutput: return "unwritable-output";
  }
  return "unknown";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
}

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void NetworkConfig::validate() const {
  require(n_su >= 1, "n_su must be >= 1");
  require(n_pu >= 1, "n_pu must be >= 1");
  require(slot_duration > 0.0, "slot_duration must be > 0");
  require(handoff_time >= 0.0, "handoff_time must be >= 0");
  require(sampling_freq > 0.0, "sampling_freq must be > 0");
  require(tx_rate > 0.0, "tx_rate must be > 0");
  require(presence_prob.size() == static_cast<std::size_t>(n_pu),
          "presence_prob needs one entry per channel");
  require(pu_power.size() == static_cast<std::size_t>(n_pu), "pu_power needs one entry per channel");
  require(std::all_of(presence_prob.begin(), presence_prob.end(), is_probability),
          "presence_prob entries must lie in [0, 1]");
  require(std::all_of(pu_power.begin(), pu_power.end(), [](double x) { return x > 0.0; }),
          "pu_power entries must be > 0");
  require(su_power > 0.0, "su_power must be > 0");
  require(noise_power > 0.0, "noise_power must be > 0");
}

void SensingParams::validate(const NetworkConfig& config) const {
  if (!(tau > 0.0 && tau <= config.slot_duration)) {
    throw Error(ErrorCode::kInvalidTiming, "tau must lie in (0, T]");
  }
  require(is_probability(p), "p must lie in [0, 1]");
}

void QosConstraints::validate() const {
  require(is_probability(t_i_max) && is_probability(p_md_max) && is_probability(p_fa_max) &&
              is_probability(p_d_min),
          "QoS limits must lie in [0, 1]");
}

int max_sensing_stages(double slot, double tau, double handoff, int n_pu) {
  if (!(tau > 0.0) || tau > slot) {
    throw Error(ErrorCode::kInvalidTiming, "sensing time must lie in (0, T]");
  }
  if (n_pu < 1 || handoff < 0.0) throw Error(ErrorCode::kInvalidConfig, "bad n_pu or handoff time");
  const double extra = std::floor((slot - tau) / (tau + handoff));
  const double capped = std::min(extra, static_cast<double>(n_pu - 1));
  return 1 + static_cast<int>(capped);
}

double remaining_time(int stage, double slot, double tau, double handoff) {
  const int delta = std::max(1, 1 + static_cast<int>(std::floor((slot - tau) / (tau + handoff))));
  if (stage < 1 || stage > delta) {
    throw Error(ErrorCode::kStageOutOfRange, "stage " + std::to_string(stage));
  }
  return slot - tau - (stage - 1) * (tau + handoff);
}

SensingOrder draw_sensing_order(Rng& rng, int n_pu, int delta) {
  SensingOrder order;
  order.channels.resize(static_cast<std::size_t>(std::max(delta, 0)));
  for (auto& c : order.channels) {
    c = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_pu)));
  }
  return order;
}

double upper_bound_throughput(int n_su, std::span<const double> presence_prob) {
  const double free_channels =
      std::accumulate(presence_prob.begin(), presence_prob.end(), 0.0,
                      [](double acc, double p1) { return acc + (1.0 - p1); });
  return std::min(static_cast<double>(n_su), free_channels);
}

NetworkConfig symmetric_config(int n_su, int n_pu, double presence, double pu_snr) {
  NetworkConfig c;
  c.n_su = n_su;
  c.n_pu = n_pu;
  c.presence_prob.assign(static_cast<std::size_t>(n_pu), presence);
  c.noise_power = 1.0;
  c.pu_power.assign(static_cast<std::size_t>(n_pu), pu_snr);
  c.su_power = pu_snr;
  return c;
}

}  // namespace rsop
