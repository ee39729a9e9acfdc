#include "rsop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "rsop/error.hpp"

namespace rsop {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

const char* disposition_name(Disposition d) {
  switch (d) {
    case Disposition::kTransmitted: return "transmitted";
    case Disposition::kInterfered: return "interfered";
    case Disposition::kTerminated: return "terminated";
  }
  return "?";
}

// Per-SU quantities that only change when the schedule does.
struct SuContext {
  int delta = 1;
  std::vector<double> p_fa;  // per stage, at that stage's tau
  std::optional<OccupancyTable> table;
};

struct Context {
  std::vector<SuContext> su;
  int max_delta = 1;
};

Context build_context(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                      const SimOptions& options) {
  if (schedules.size() != idx(config.n_su)) {
    throw Error(ErrorCode::kInvalidConfig, "need one schedule per SU");
  }
  Context ctx;
  ctx.su.resize(schedules.size());
  for (std::size_t k = 0; k < schedules.size(); ++k) {
    const SuSchedule& s = schedules[k];
    if (s.tau.empty() || s.p.empty()) throw Error(ErrorCode::kInvalidConfig, "empty schedule");
    SuContext& c = ctx.su[k];
    c.delta = max_sensing_stages(config, s.tau_at(1));
    ctx.max_delta = std::max(ctx.max_delta, c.delta);
    c.p_fa.resize(idx(c.delta));
    for (int n = 1; n <= c.delta; ++n) {
      if (const auto* fixed = std::get_if<FixedSensing>(&options.sensing)) {
        c.p_fa[idx(n - 1)] = fixed->p_fa;
      } else {
        const auto& det = std::get<DetectorConfig>(options.sensing);
        c.p_fa[idx(n - 1)] = false_alarm_prob(det.threshold_norm, s.tau_at(n), config.sampling_freq);
      }
    }
    if (options.detection == DetectionMode::kMeanField) {
      c.table = occupancy_evolution(config, SensingParams{s.tau_at(1), s.p_at(1)}, options.sensing);
    }
  }
  return ctx;
}

void draw_pu(const NetworkConfig& config, const SimOptions& options, Rng& rng, PuState* state,
             std::vector<bool>& present) {
  present.assign(idx(config.n_pu), false);
  const bool keep_memory = options.pu_model == PuModel::kOnOff && state != nullptr &&
                           state->present.size() == idx(config.n_pu);
  for (int m = 0; m < config.n_pu; ++m) {
    if (keep_memory && bernoulli(rng, options.on_off_persistence)) {
      present[idx(m)] = state->present[idx(m)];
    } else {
      present[idx(m)] = bernoulli(rng, config.presence(m));
    }
  }
  if (state != nullptr) state->present = present;
}

double detection_prob(const NetworkConfig& config, const SimOptions& options, const SuContext& su,
                      const SuSchedule& sched, int channel0, int stage, bool pu, int su_on_air) {
  if (const auto* fixed = std::get_if<FixedSensing>(&options.sensing)) return fixed->p_d;
  if (su.table) return su.table->p_d[idx(channel0)][idx(stage - 1)];
  const auto& det = std::get<DetectorConfig>(options.sensing);
  const double power = (pu ? config.pu_power[idx(channel0)] : 0.0) + su_on_air * config.su_power;
  return 1.0 - misdetection_prob(det.threshold_norm, sched.tau_at(stage), config.sampling_freq,
                                 power / config.noise_power);
}

struct Tx {
  int su;
  int channel0;
  int stage;
  bool interfering;
  double air_time;
};

SlotOutcome simulate_slot(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                          const SimOptions& options, const Context& ctx, Rng& rng,
                          PuState* pu_state) {
  const int ns = config.n_su;
  const double slot = config.slot_duration;
  SlotOutcome out;
  out.su.resize(idx(ns));
  draw_pu(config, options, rng, pu_state, out.pu_present);

  std::vector<bool> active(idx(ns), true);
  std::vector<int> on_air(idx(config.n_pu), 0);  // SUs that started in earlier stages
  std::vector<Tx> txs;
  std::vector<Tx> started;
  double clock = 0.0;

  for (int n = 1; n <= ctx.max_delta; ++n) {
    double duration = 0.0;
    for (int k = 0; k < ns; ++k) {
      if (active[idx(k)] && n <= ctx.su[idx(k)].delta) {
        duration = std::max(duration, schedules[idx(k)].tau_at(n));
      }
    }
    if (duration == 0.0) break;
    const double start = clock + (n > 1 ? config.handoff_time : 0.0);
    const double end = start + duration;
    if (end >= slot) break;
    out.stages_run = n;

    started.clear();
    for (int k = 0; k < ns; ++k) {
      const auto ki = idx(k);
      const SuContext& su = ctx.su[ki];
      if (!active[ki] || n > su.delta) continue;
      const SuSchedule& sched = schedules[ki];
      SuOutcome& o = out.su[ki];
      const double p = sched.p_at(n);

      const bool modified = options.protocol == Protocol::kModified;
      if (modified && !bernoulli(rng, p)) continue;  // skip this stage

      const int c = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(config.n_pu)));
      ++o.sensed;
      const bool pu = out.pu_present[idx(c)];
      const int busy_su = on_air[idx(c)];
      bool sensed_free;
      if (pu || busy_su > 0) {
        sensed_free = !bernoulli(rng, detection_prob(config, options, su, sched, c, n, pu, busy_su));
      } else {
        sensed_free = !bernoulli(rng, su.p_fa[idx(n - 1)]);
      }
      if (!sensed_free) {
        ++o.handoffs;
        continue;
      }
      if (!modified && !bernoulli(rng, p)) continue;  // sensed free but declined

      active[ki] = false;
      started.push_back(Tx{k, c, n, pu || busy_su > 0, slot - end});
      o.channel = c + 1;
      o.stage = n;
      o.delay = end;
    }
    for (const Tx& t : started) {
      ++on_air[idx(t.channel0)];
      txs.push_back(t);
    }
    // Same-stage co-selection: several SUs went on air together on an idle channel.
    std::vector<int> fresh(idx(config.n_pu), 0);
    for (const Tx& t : started) {
      if (!t.interfering) ++fresh[idx(t.channel0)];
    }
    for (int f : fresh) {
      if (f > 1) out.collisions += f;
    }
    clock = end;
  }

  // Interference time counts each (channel, stage) with at least one SU in I_n once.
  std::vector<std::vector<bool>> hit(idx(config.n_pu), std::vector<bool>(idx(ctx.max_delta), false));
  for (const Tx& t : txs) {
    SuOutcome& o = out.su[idx(t.su)];
    const bool alone = on_air[idx(t.channel0)] == 1;
    // Collisions mark every party as interfered; only PU/earlier-SU overlap adds to t_I.
    o.disposition = t.interfering || !alone ? Disposition::kInterfered : Disposition::kTransmitted;
    o.acked = !out.pu_present[idx(t.channel0)] && alone;
    o.throughput = o.acked ? t.air_time * config.tx_rate / slot : 0.0;
    if (t.interfering) {
      o.interference = t.air_time / slot;
      auto cell = hit[idx(t.channel0)][idx(t.stage - 1)];
      if (!cell) {
        hit[idx(t.channel0)][idx(t.stage - 1)] = true;
        out.interference_time += t.air_time / (slot * config.n_pu);
      }
    }
  }
  for (int k = 0; k < ns; ++k) {
    if (active[idx(k)]) out.su[idx(k)].delay = slot;
  }
  return out;
}

// Welford accumulator.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

}  // namespace

double SuSchedule::tau_at(int stage) const {
  return tau[std::min(idx(stage - 1), tau.size() - 1)];
}

double SuSchedule::p_at(int stage) const { return p[std::min(idx(stage - 1), p.size() - 1)]; }

std::vector<SuSchedule> homogeneous(const NetworkConfig& config, const SensingParams& params) {
  return std::vector<SuSchedule>(idx(config.n_su), SuSchedule::constant(params));
}

SlotOutcome run_slot(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                     const SimOptions& options, Rng& rng, PuState* pu_state) {
  const Context ctx = build_context(config, schedules, options);
  return simulate_slot(config, schedules, options, ctx, rng, pu_state);
}

void write_trace_header(std::ostream& out) {
  out << "slot,su,pu_present,channel,stage,disposition,acked,throughput,interference,sensed,"
         "handoffs,delay\n";
}

RunMetrics run_replication(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                           const SimOptions& options, std::int64_t n_slots, std::uint64_t seed,
                           TraceSink* trace) {
  if (n_slots < 1) throw Error(ErrorCode::kInvalidConfig, "n_slots must be >= 1");
  config.validate();
  const Context ctx = build_context(config, schedules, options);
  Rng rng(seed);
  PuState pu;
  Moments thr, intf, ovh;
  double handoffs = 0.0, delay = 0.0;
  RunMetrics m;
  const double ns = config.n_su;

  for (std::int64_t s = 0; s < n_slots; ++s) {
    const SlotOutcome o = simulate_slot(config, schedules, options, ctx, rng, &pu);
    double slot_thr = 0.0, slot_sensed = 0.0;
    for (std::size_t k = 0; k < o.su.size(); ++k) {
      const SuOutcome& u = o.su[k];
      slot_thr += u.throughput;
      slot_sensed += u.sensed;
      handoffs += u.handoffs;
      delay += u.delay;
      if (u.acked) ++m.successes;
      if (u.disposition == Disposition::kInterfered) ++m.interfered;
      if (trace != nullptr && trace->out != nullptr && trace->rows < trace->row_cap) {
        *trace->out << s << ',' << k + 1 << ',' << (u.channel > 0 && o.pu_present[idx(u.channel - 1)])
                    << ',' << u.channel << ',' << u.stage << ',' << disposition_name(u.disposition)
                    << ',' << u.acked << ',' << u.throughput << ',' << u.interference << ','
                    << u.sensed << ',' << u.handoffs << ',' << u.delay << '\n';
        ++trace->rows;
      }
    }
    m.collisions += o.collisions;
    thr.add(slot_thr / ns);
    intf.add(o.interference_time);
    ovh.add(slot_sensed / ns);
  }
  const double denom = static_cast<double>(n_slots) * ns;
  m.slots = n_slots;
  m.throughput = thr.mean;
  m.interference = intf.mean;
  m.overhead = ovh.mean;
  m.handoffs = handoffs / denom;
  m.delay = delay / denom;
  m.network_throughput = ns * m.throughput;
  m.throughput_se = thr.se();
  m.interference_se = intf.se();
  m.overhead_se = ovh.se();
  return m;
}

std::vector<RunMetrics> replications(const NetworkConfig& config,
                                     const std::vector<SuSchedule>& schedules,
                                     const SimOptions& options, std::int64_t n_slots, int n_reps,
                                     std::uint64_t base_seed, int parallelism) {
  if (n_reps < 1) throw Error(ErrorCode::kInvalidConfig, "n_reps must be >= 1");
  std::vector<RunMetrics> reps(idx(n_reps));
  const int workers = std::clamp(parallelism, 1, n_reps);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(idx(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int r = w; r < n_reps; r += workers) {
          reps[idx(r)] = run_replication(config, schedules, options, n_slots,
                                         derive_seed(base_seed, static_cast<std::uint64_t>(r)));
        }
      } catch (...) {
        errors[idx(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reps;
}

RunMetrics aggregate(const NetworkConfig& config, const std::vector<RunMetrics>& reps) {
  const int n_reps = static_cast<int>(reps.size());
  if (n_reps < 1) throw Error(ErrorCode::kInvalidConfig, "nothing to aggregate");
  if (n_reps == 1) return reps[0];

  // Aggregate in replication order so the result is independent of scheduling.
  RunMetrics agg;
  agg.reps = n_reps;
  Moments thr, intf, ovh;
  for (const RunMetrics& r : reps) {
    agg.slots += r.slots;
    agg.successes += r.successes;
    agg.interfered += r.interfered;
    agg.collisions += r.collisions;
    agg.handoffs += r.handoffs / n_reps;
    agg.delay += r.delay / n_reps;
    thr.add(r.throughput);
    intf.add(r.interference);
    ovh.add(r.overhead);
  }
  agg.throughput = thr.mean;
  agg.interference = intf.mean;
  agg.overhead = ovh.mean;
  agg.network_throughput = config.n_su * agg.throughput;
  agg.throughput_se = thr.se();
  agg.interference_se = intf.se();
  agg.overhead_se = ovh.se();
  return agg;
}

RunMetrics monte_carlo(const NetworkConfig& config, const std::vector<SuSchedule>& schedules,
                       const SimOptions& options, std::int64_t n_slots, int n_reps,
                       std::uint64_t base_seed, int parallelism) {
  return aggregate(config,
                   replications(config, schedules, options, n_slots, n_reps, base_seed, parallelism));
}

}  // namespace rsop
