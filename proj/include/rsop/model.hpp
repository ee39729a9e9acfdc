#pragma once

// Scenario description, slot timing arithmetic and sensing-order generation.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rsop {

/// Static description of a cognitive radio scenario. Times in seconds, powers linear.
struct NetworkConfig {
  int n_su = 1;
  int n_pu = 1;
  double slot_duration = 10e-3;
  double handoff_time = 0.1e-6;
  double sampling_freq = 6.857e6;
  double tx_rate = 1.0;
  std::vector<double> presence_prob{0.5};  // P_{m,1}, one per channel
  std::vector<double> pu_power{0.1};       // sigma_p^2 per channel at the SU receiver
  double su_power = 0.1;
  double noise_power = 1.0;

  /// Throws Error(kInvalidConfig) on the first violated invariant.
  void validate() const;

  /// Presence probability of channel m (0-based), P_{m,0} = 1 - presence(m).
  double presence(int m) const { return presence_prob[static_cast<std::size_t>(m)]; }
  double pu_snr(int m) const { return pu_power[static_cast<std::size_t>(m)] / noise_power; }
  double su_snr() const { return su_power / noise_power; }
};

/// Homogeneous decision variables (tau, p).
struct SensingParams {
  double tau = 1e-3;
  double p = 0.8;

  void validate(const NetworkConfig& config) const;
};

struct QosConstraints {
  double t_i_max = 0.05;  // normalized interference time
  double p_md_max = 0.1;
  double p_fa_max = 0.1;
  double p_d_min = 0.9;

  void validate() const;
};

/// Channels visited by one SU in one slot, 1-based as in the model description.
struct SensingOrder {
  std::vector<int> channels;
};

/// delta = 1 + min(floor((T - tau) / (tau + tau_h)), N_p - 1).
int max_sensing_stages(double slot, double tau, double handoff, int n_pu);

inline int max_sensing_stages(const NetworkConfig& c, double tau) {
  return max_sensing_stages(c.slot_duration, tau, c.handoff_time, c.n_pu);
}

/// RT_n = T - tau - (n - 1)(tau + tau_h) for stage n in [1, delta].
double remaining_time(int stage, double slot, double tau, double handoff);

/// Uniform i.i.d. channel choice per stage, with replacement.
SensingOrder draw_sensing_order(std::mt19937_64& rng, int n_pu, int delta);

/// min(N_s, sum_m (1 - P_{m,1})): network throughput if every free channel were used.
double upper_bound_throughput(int n_su, std::span<const double> presence_prob);

/// Build a symmetric config: every channel gets the same presence probability and PU power.
NetworkConfig symmetric_config(int n_su, int n_pu, double presence, double pu_snr);

}  // namespace rsop
