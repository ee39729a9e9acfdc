#pragma once

// Distributed sign-feedback adaptation of (tau, p) per SU, the per-stage fine
// tuning schedule, and the convergence diagnostics that go with them.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rsop/detector.hpp"
#include "rsop/model.hpp"
#include "rsop/simulator.hpp"

namespace rsop {

/// alpha_k = scale / k^exponent.
struct StepSize {
  double scale = 1.0;
  double exponent = 1.0;

  double at(int k) const;
  /// Square-summable and not summable: 0.5 < exponent <= 1.
  bool valid() const { return scale > 0.0 && exponent > 0.5 && exponent <= 1.0; }
  /// sum_{i>=1} alpha_i^2; throws kInvalidSchedule when it diverges.
  double square_sum() const;
  double partial_sum(int k) const;
};

struct AdaptiveSettings {
  int n_ep = 50;
  double d_tau = 1e-4;  // 0.01 T at T = 10 ms
  double d_p = 0.025;
  double d_tau1 = 1e-4;
  double d_p1 = 0.025;
  StepSize step;
  double tau_min = 0.0;
  double slot_duration = 10e-3;
};

/// Per-SU controller state: x^k, x^{k-1}, the previous frame's estimate and k.
struct AdaptiveState {
  AdaptiveSettings settings;
  double tau = 0.0;
  double p = 0.0;
  double tau_prev = 0.0;
  double p_prev = 0.0;
  double r_prev = 0.0;
  int k = 1;
  // Outcome of the last update, for logging.
  bool event_a = false;
  bool event_d = false;
  bool event_e = false;
  double g_tau = 0.0;  // g~ = (1_D d_tau, 1_E d_p)
  double g_p = 0.0;

  double alpha() const { return settings.step.at(k); }
};

/// Previous point at (tau_min, 0) and r~ = 0 before the first frame.
AdaptiveState initial_state(const AdaptiveSettings& settings, double tau1, double p1);

struct FrameEstimate {
  double r = 0.0;      // mean acked throughput of this SU per slot
  double t_i = 0.0;    // network interference time reported to the SU
  double t_i_own = 0.0;  // share caused by this SU, normalized like t_i
  double p_md = 0.0;   // analytic worst-case misdetection at the SU's schedule
};

/// Throws kShortFrame when fewer than n_ep outcomes are supplied; uses the last n_ep.
FrameEstimate frame_estimate(std::span<const SlotOutcome> frame, int su, int n_ep, double p_md,
                             int n_pu);

AdaptiveState alg1_update(const AdaptiveState& state, const FrameEstimate& est,
                          const QosConstraints& qos);

/// tau[n] = max(tau_min, tau^k - (n-1) d_tau1), p[n] = min(1, p^k + (n-1) d_p1).
SuSchedule alg2_stage_schedule(const AdaptiveState& state, int delta);

/// Worst misdetection over channels and stages for an SU following this schedule.
double analytic_misdetection(const NetworkConfig& config, const SuSchedule& schedule,
                             const SensingModel& sensing);

struct ConvergenceConstants {
  double g2 = 0.0;
  double r2 = 0.0;
};

ConvergenceConstants convergence_constants(int n_su, double slot, double d_tau, double d_p);

/// (R^2 + G^2 sum alpha^2) / (2 sum_{i<=k} alpha_i).
double convergence_bound(double g2, double r2, const StepSize& step, int k);

/// sum_{i<=k} alpha_i (2 eps - G^2 alpha_i).
double corollary_sum(double g2, double epsilon, const StepSize& step, int k);
bool corollary_check(double g2, double epsilon, const StepSize& step, int k);

enum class Algorithm { kNone, kAlg1, kAlg2 };

struct AdaptiveRunConfig {
  Algorithm algorithm = Algorithm::kAlg1;
  AdaptiveSettings settings;
  double tau1 = 1e-3;
  double p1 = 0.8;
  int frames = 1000;
  bool asynchronous = false;  // per-SU random frame offsets
  SimOptions sim;
};

struct FrameLog {
  int frame = 0;  // k
  int su = 0;     // 1-based
  double tau = 0.0;
  double p = 0.0;
  double r = 0.0;
  double t_i = 0.0;
  double p_md = 0.0;
  bool a = false;
  bool d = false;
  bool e = false;
  double g_norm2 = 0.0;  // this SU's ||g~||^2
};

struct NetworkFrame {
  int frame = 0;
  double mean_tau = 0.0;
  double mean_p = 0.0;
  double r = 0.0;    // simulated mean per-SU throughput in the frame
  double t_i = 0.0;  // simulated network interference in the frame
  double g_norm2 = 0.0;
  double f = 0.0;       // analyzer -r at the mean iterate
  double f_best = 0.0;  // min over frames so far
};

struct AdaptiveRun {
  std::vector<FrameLog> su_log;
  std::vector<NetworkFrame> frames;
  std::vector<AdaptiveState> final_states;
  // Means over the last quarter of frames, with frame-to-frame standard errors.
  double converged_r = 0.0;
  double converged_r_se = 0.0;
  double converged_t_i = 0.0;
  double converged_t_i_se = 0.0;
};

AdaptiveRun run_adaptive(const NetworkConfig& config, const QosConstraints& qos,
                         const AdaptiveRunConfig& run, std::uint64_t seed);

void write_trajectory_csv(std::ostream& out, const AdaptiveRun& run);

struct FieldPoint {
  double tau = 0.0;
  double p = 0.0;
  double g_tau = 0.0;  // E[g~ | x], tau component
  double g_p = 0.0;
  double grad_tau = 0.0;  // numerical gradient of f = -r
  double grad_p = 0.0;
  double inner = 0.0;  // <E[g~], grad f>, tau in seconds
  bool feasible = false;
  double r = 0.0;  // analyzer throughput at x
};

/// For every x, n_realizations independent single frames; g~ averaged over SUs then
/// realizations. The previous point of each realization is one random +-step away.
std::vector<FieldPoint> subgradient_field(const NetworkConfig& config, const QosConstraints& qos,
                                          const SensingModel& sensing,
                                          const AdaptiveSettings& settings,
                                          const std::vector<std::pair<double, double>>& points,
                                          int n_realizations, std::uint64_t seed,
                                          int parallelism = 1);

}  // namespace rsop
