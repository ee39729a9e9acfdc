#pragma once

// Slot-level Monte Carlo simulation of N_s SUs running random-order sequential
// sensing with p-persistent access.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rsop/chain.hpp"
#include "rsop/detector.hpp"
#include "rsop/model.hpp"
#include "rsop/rng.hpp"

namespace rsop {

enum class Protocol {
  kModified,      // coin flip before sensing, skip sensing on failure
  kConventional,  // always sense, coin flip only on a channel sensed free
};

enum class PuModel {
  kIid,    // fresh Bernoulli(P_{m,1}) every slot
  kOnOff,  // keep last slot's state with probability on_off_persistence, else redraw
};

enum class DetectionMode {
  kRealizedSnr,  // P_d at the SNR actually present on the channel
  kMeanField,    // P_d from the analyzer's stage table
};

/// Per-stage sensing time and probability for one SU. Stage 1 fixes the SU's delta;
/// stages beyond the vector length reuse the last entry.
struct SuSchedule {
  std::vector<double> tau;
  std::vector<double> p;

  static SuSchedule constant(const SensingParams& params) { return {{params.tau}, {params.p}}; }
  double tau_at(int stage) const;
  double p_at(int stage) const;
};

struct SimOptions {
  Protocol protocol = Protocol::kModified;
  SensingModel sensing = DetectorConfig{};
  DetectionMode detection = DetectionMode::kRealizedSnr;
  PuModel pu_model = PuModel::kIid;
  double on_off_persistence = 0.0;
};

enum class Disposition { kTerminated, kTransmitted, kInterfered };

struct SuOutcome {
  Disposition disposition = Disposition::kTerminated;
  int channel = 0;  // 1-based, 0 when nothing was sent
  int stage = 0;    // 1-based stage of the transmission
  bool acked = false;
  double throughput = 0.0;    // acked air time * C_R / T
  double interference = 0.0;  // air time on a busy channel / T
  int sensed = 0;
  int handoffs = 0;
  double delay = 0.0;  // seconds until the transmission starts, T if none
};

struct SlotOutcome {
  std::vector<SuOutcome> su;
  std::vector<bool> pu_present;
  double interference_time = 0.0;  // network level, normalized by T * N_p
  int collisions = 0;              // same-stage co-selections that both went on air
  int stages_run = 0;
};

/// PU activity carried across slots (only the ON-OFF model needs memory).
struct PuState {
  std::vector<bool> present;
};

SlotOutcome run_slot(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                     const SimOptions& options, Rng& rng, PuState* pu_state = nullptr);

struct RunMetrics {
  std::int64_t slots = 0;
  int reps = 1;
  double throughput = 0.0;  // mean per SU per slot
  double interference = 0.0;
  double overhead = 0.0;  // channels sensed per SU per slot
  double handoffs = 0.0;
  double delay = 0.0;
  double network_throughput = 0.0;  // N_s * throughput
  std::int64_t successes = 0;
  std::int64_t interfered = 0;
  std::int64_t collisions = 0;
  // Standard errors of the means; across replications when reps > 1,
  // otherwise from per-slot variation.
  double throughput_se = 0.0;
  double interference_se = 0.0;
  double overhead_se = 0.0;

  double throughput_ci() const { return 1.96 * throughput_se; }
  double interference_ci() const { return 1.96 * interference_se; }
};

/// Per-slot rows written while a replication runs; stops after row_cap rows.
struct TraceSink {
  std::ostream* out = nullptr;
  std::int64_t row_cap = 10000;
  std::int64_t rows = 0;
};

RunMetrics run_replication(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                           const SimOptions& options, std::int64_t n_slots, std::uint64_t seed,
                           TraceSink* trace = nullptr);

/// Replication r uses derive_seed(base_seed, r); results do not depend on parallelism.
std::vector<RunMetrics> replications(const NetworkConfig& config,
                                     const std::vector<SuSchedule>& schedules,
                                     const SimOptions& options, std::int64_t n_slots, int n_reps,
                                     std::uint64_t base_seed, int parallelism = 1);

/// Means over replications with across-replication standard errors.
RunMetrics aggregate(const NetworkConfig& config, const std::vector<RunMetrics>& reps);


RunMetrics monte_carlo(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                       const SimOptions& options, std::int64_t n_slots, int n_reps,
                       std::uint64_t base_seed, int parallelism = 1);

std::vector<SuSchedule> homogeneous(const NetworkConfig& config, const SensingParams& params);

void write_trace_header(std::ostream& out);

}  // namespace rsop
