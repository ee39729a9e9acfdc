#pragma once

// Analytical per-SU Markov chain model of random-order sequential sensing.
//
// Tables are stored 0-based as [channel][stage]. Functions that take a channel
// or stage index as an argument use the 1-based numbering of the model.

#include <optional>
#include <vector>

#include "rsop/detector.hpp"
#include "rsop/model.hpp"

namespace rsop {

using Table = std::vector<std::vector<double>>;  // [channel][stage]

/// How U_m^{(n)}, the chance that a free channel is grabbed at stage n, is formed.
enum class OccupancyMode {
  kMeanFieldPower,  // 1 - P_fa^L with the mean sensor count L as a real exponent
  kBinomial,        // 1 - (1 - (p / N_p)(1 - P_fa))^{N_HO}: each SU in HO_n grabs independently
};

struct ChainOptions {
  OccupancyMode occupancy = OccupancyMode::kMeanFieldPower;
};

/// Mean-field occupancy recursion and per-stage sensing quality.
struct OccupancyTable {
  int delta = 0;
  Table occ;                 // P_{m,1}^{(n)}
  Table u;                   // U_m^{(n)}
  Table q;                   // q_m^{(n)}: sensing SU moves on to the next handoff state
  Table snr;                 // gamma_m^{(n)} (0 under fixed sensing)
  Table p_d;                 // P_{d,m}^{(n)}
  std::vector<double> p_fa;  // per channel, identical across stages
  std::vector<double> l;     // mean SUs sensing each channel at stage n
  std::vector<double> n_ho;  // mean SUs in handoff state n

  double max_misdetection() const;
};

/// Channel m (1-based) loses its transmit/interfere exits from stage n (1-based) on.
struct Pruning {
  int channel = 1;
  int stage = 1;
};

struct ChainDistribution {
  std::vector<double> pi_ho;  // HO_n, n = 1..delta
  Table pi_channel;           // m^{(n)}
  std::vector<double> pi_t;
  std::vector<double> pi_i;
  double pi_te = 0.0;
  double pi_pruned = 0.0;  // mass sent down removed edges (zero for the full chain)

  /// pi_te + sum_n (pi_t + pi_i) + pi_pruned; equals 1 up to rounding.
  double disposition_total() const;
};

struct PerfMetrics {
  double throughput = 0.0;         // r, per SU
  double interference_time = 0.0;  // t_I, normalized by T * N_p
  Table success_prob;              // Q_{T_n,m}
  Table no_interf_prob;            // Z_{I_n,m}
  Table no_tx_prob;                // Y_{m,n}
};

struct ChainResult {
  OccupancyTable occupancy;
  ChainDistribution distribution;
  PerfMetrics perf;
};

OccupancyTable occupancy_evolution(const NetworkConfig& config, const SensingParams& params,
                                   const SensingModel& sensing, ChainOptions options = {});

ChainDistribution state_distribution(const NetworkConfig& config, const SensingParams& params,
                                     const OccupancyTable& occupancy,
                                     std::optional<Pruning> pruning = std::nullopt);

/// Y_{m,n}: probability that an SU never transmits on channel m in stages n..delta.
double pruned_no_tx_prob(const NetworkConfig& config, const SensingParams& params,
                         const OccupancyTable& occupancy, int m, int n);

/// Q_{T_n,m} = P_{T_n,m^{(n)}} * Y^{N_s - 1}.
double success_prob(const NetworkConfig& config, const OccupancyTable& occupancy, int m, int n,
                    double no_tx, const ChainDistribution& dist);

ChainResult analyze(const NetworkConfig& config, const SensingParams& params,
                    const SensingModel& sensing, ChainOptions options = {});

double avg_throughput(const NetworkConfig& config, const SensingParams& params,
                      const SensingModel& sensing);
double avg_interference(const NetworkConfig& config, const SensingParams& params,
                        const SensingModel& sensing);

/// Probability clamp; asserts in debug builds when the excursion exceeds 1e-9.
double clamp_probability(double x);

}  // namespace rsop
