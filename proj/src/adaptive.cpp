#include "rsop/adaptive.hpp"

#include <algorithm>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "rsop/chain.hpp"
#include "rsop/error.hpp"
#include "rsop/optimizer.hpp"

namespace rsop {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

double sign_indicator(bool event) { return event ? 1.0 : -1.0; }

// The projection allows tau = 0, but a detector needs at least one sample.
double simulable_tau(double tau, double sampling_freq) {
  return std::max(tau, 1.0 / sampling_freq);
}

SuSchedule schedule_for(const NetworkConfig& config, const AdaptiveState& s, Algorithm alg) {
  const double tau = simulable_tau(s.tau, config.sampling_freq);
  if (alg != Algorithm::kAlg2) return SuSchedule{{tau}, {s.p}};
  AdaptiveState floored = s;
  floored.tau = tau;
  return alg2_stage_schedule(floored, max_sensing_stages(config, tau));
}

double mean(const std::vector<double>& v, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) acc += v[i];
  return acc / static_cast<double>(v.size() - from);
}

double std_error(const std::vector<double>& v, std::size_t from) {
  const std::size_t n = v.size() - from;
  if (n < 2) return 0.0;
  const double m = mean(v, from);
  double ss = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) ss += (v[i] - m) * (v[i] - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

double StepSize::at(int k) const { return scale / std::pow(static_cast<double>(k), exponent); }

double StepSize::square_sum() const {
  if (!(exponent > 0.5)) throw Error(ErrorCode::kInvalidSchedule, "sum of alpha^2 diverges");
  return scale * scale * boost::math::zeta(2.0 * exponent);
}

double StepSize::partial_sum(int k) const {
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) acc += at(i);
  return acc;
}

AdaptiveState initial_state(const AdaptiveSettings& settings, double tau1, double p1) {
  AdaptiveState s;
  s.settings = settings;
  s.tau = std::clamp(tau1, 0.0, settings.slot_duration);
  s.p = std::clamp(p1, 0.0, 1.0);
  s.tau_prev = settings.tau_min;
  s.p_prev = 0.0;
  s.r_prev = 0.0;
  s.k = 1;
  return s;
}

FrameEstimate frame_estimate(std::span<const SlotOutcome> frame, int su, int n_ep, double p_md,
                             int n_pu) {
  if (n_ep < 1 || static_cast<int>(frame.size()) < n_ep) {
    throw Error(ErrorCode::kShortFrame, "frame holds " + std::to_string(frame.size()) +
                                            " slots, need " + std::to_string(n_ep));
  }
  FrameEstimate est;
  est.p_md = p_md;
  const auto window = frame.last(idx(n_ep));
  for (const SlotOutcome& o : window) {
    const SuOutcome& u = o.su.at(idx(su));
    est.r += u.throughput;
    est.t_i_own += u.interference / n_pu;
    est.t_i += o.interference_time;
  }
  est.r /= n_ep;
  est.t_i /= n_ep;
  est.t_i_own /= n_ep;
  return est;
}

AdaptiveState alg1_update(const AdaptiveState& state, const FrameEstimate& est,
                          const QosConstraints& qos) {
  AdaptiveState next = state;
  const AdaptiveSettings& cfg = state.settings;
  const bool a = est.r >= state.r_prev && est.t_i <= qos.t_i_max && est.p_md <= qos.p_md_max;
  const bool b = state.tau >= state.tau_prev;
  const bool c = state.p >= state.p_prev;
  const bool d = a != b;
  const bool e = a != c;
  const double alpha = state.alpha();

  next.g_tau = sign_indicator(d) * cfg.d_tau;
  next.g_p = sign_indicator(e) * cfg.d_p;
  next.tau = std::clamp(state.tau - next.g_tau * alpha, 0.0, cfg.slot_duration);
  next.p = std::clamp(state.p - next.g_p * alpha, 0.0, 1.0);
  next.tau_prev = state.tau;
  next.p_prev = state.p;
  next.r_prev = est.r;
  next.k = state.k + 1;
  next.event_a = a;
  next.event_d = d;
  next.event_e = e;
  return next;
}

SuSchedule alg2_stage_schedule(const AdaptiveState& state, int delta) {
  if (delta < 1) throw Error(ErrorCode::kStageOutOfRange, "delta must be >= 1");
  SuSchedule s;
  for (int n = 1; n <= delta; ++n) {
    s.tau.push_back(std::max(state.settings.tau_min, state.tau - (n - 1) * state.settings.d_tau1));
    s.p.push_back(std::min(1.0, state.p + (n - 1) * state.settings.d_p1));
  }
  return s;
}

double analytic_misdetection(const NetworkConfig& config, const SuSchedule& schedule,
                             const SensingModel& sensing) {
  if (const auto* fixed = std::get_if<FixedSensing>(&sensing)) return 1.0 - fixed->p_d;
  const auto& det = std::get<DetectorConfig>(sensing);
  const OccupancyTable t =
      occupancy_evolution(config, SensingParams{schedule.tau_at(1), schedule.p_at(1)}, sensing);
  double worst = 0.0;
  for (std::size_t m = 0; m < t.snr.size(); ++m) {
    for (int n = 1; n <= t.delta; ++n) {
      worst = std::max(worst, misdetection_prob(det.threshold_norm, schedule.tau_at(n),
                                                config.sampling_freq, t.snr[m][idx(n - 1)]));
    }
  }
  return worst;
}

ConvergenceConstants convergence_constants(int n_su, double slot, double d_tau, double d_p) {
  return {n_su * (d_tau * d_tau + d_p * d_p), n_su * (slot * slot + 1.0)};
}

double convergence_bound(double g2, double r2, const StepSize& step, int k) {
  if (!step.valid()) {
    throw Error(ErrorCode::kInvalidSchedule, "step sizes must be square-summable, not summable");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidSchedule, "k must be >= 1");
  return (r2 + g2 * step.square_sum()) / (2.0 * step.partial_sum(k));
}

double corollary_sum(double g2, double epsilon, const StepSize& step, int k) {
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double a = step.at(i);
    acc += a * (2.0 * epsilon - g2 * a);
  }
  return acc;
}

bool corollary_check(double g2, double epsilon, const StepSize& step, int k) {
  return corollary_sum(g2, epsilon, step, k) >= 0.0;
}

AdaptiveRun run_adaptive(const NetworkConfig& config, const QosConstraints& qos,
                         const AdaptiveRunConfig& run, std::uint64_t seed) {
  config.validate();
  const int ns = config.n_su;
  const int n_ep = run.settings.n_ep;
  if (n_ep < 1 || run.frames < 1) throw Error(ErrorCode::kInvalidConfig, "frames and n_ep >= 1");
  Rng rng(seed);
  PuState pu;

  std::vector<AdaptiveState> states(idx(ns), initial_state(run.settings, run.tau1, run.p1));
  std::vector<int> offset(idx(ns), 0);
  if (run.asynchronous) {
    for (int& o : offset) o = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_ep)));
  }

  std::vector<SuSchedule> schedules(idx(ns));
  std::vector<double> p_md(idx(ns), 0.0);
  auto refresh = [&](int k) {
    schedules[idx(k)] = schedule_for(config, states[idx(k)], run.algorithm);
    p_md[idx(k)] = analytic_misdetection(config, schedules[idx(k)], run.sim.sensing);
  };
  for (int k = 0; k < ns; ++k) refresh(k);

  AdaptiveRun out;
  std::vector<SlotOutcome> window;  // last n_ep slots, oldest first
  std::vector<double> frame_r, frame_ti;
  double f_best = 0.0;
  const std::int64_t total_slots = static_cast<std::int64_t>(run.frames) * n_ep;

  for (std::int64_t t = 0; t < total_slots; ++t) {
    if (static_cast<int>(window.size()) == n_ep) window.erase(window.begin());
    window.push_back(run_slot(config, schedules, run.sim, rng, &pu));
    const std::int64_t done = t + 1;

    for (int k = 0; k < ns; ++k) {
      const bool boundary = done >= n_ep + offset[idx(k)] && (done - offset[idx(k)]) % n_ep == 0;
      if (!boundary) continue;
      AdaptiveState& s = states[idx(k)];
      const FrameEstimate est =
          frame_estimate(window, k, n_ep, p_md[idx(k)], config.n_pu);
      FrameLog log{s.k, k + 1, s.tau, s.p, est.r, est.t_i, est.p_md};
      if (run.algorithm != Algorithm::kNone) {
        s = alg1_update(s, est, qos);
        log.a = s.event_a;
        log.d = s.event_d;
        log.e = s.event_e;
        log.g_norm2 = s.g_tau * s.g_tau + s.g_p * s.g_p;
        refresh(k);
      } else {
        ++s.k;
      }
      out.su_log.push_back(log);
    }

    if (done % n_ep == 0) {
      NetworkFrame nf;
      nf.frame = static_cast<int>(done / n_ep);
      double r = 0.0, ti = 0.0;
      for (const SlotOutcome& o : window) {
        for (const SuOutcome& u : o.su) r += u.throughput;
        ti += o.interference_time;
      }
      nf.r = r / (static_cast<double>(n_ep) * ns);
      nf.t_i = ti / n_ep;
      // Iterate that produced this frame: the logged pre-update values.
      double tau_sum = 0.0, p_sum = 0.0, g2 = 0.0;
      const std::size_t first = out.su_log.size() - std::min(out.su_log.size(), idx(ns));
      for (std::size_t i = first; i < out.su_log.size(); ++i) {
        tau_sum += out.su_log[i].tau;
        p_sum += out.su_log[i].p;
        g2 += out.su_log[i].g_norm2;
      }
      const double cnt = static_cast<double>(out.su_log.size() - first);
      nf.mean_tau = cnt > 0 ? tau_sum / cnt : run.tau1;
      nf.mean_p = cnt > 0 ? p_sum / cnt : run.p1;
      nf.g_norm2 = g2;
      const double tau_eval = simulable_tau(nf.mean_tau, config.sampling_freq);
      nf.f = -analyze(config, SensingParams{tau_eval, nf.mean_p}, run.sim.sensing).perf.throughput;
      f_best = out.frames.empty() ? nf.f : std::min(f_best, nf.f);
      nf.f_best = f_best;
      out.frames.push_back(nf);
      frame_r.push_back(nf.r);
      frame_ti.push_back(nf.t_i);
    }
  }

  const std::size_t from = frame_r.size() - std::max<std::size_t>(1, frame_r.size() / 4);
  out.converged_r = mean(frame_r, from);
  out.converged_r_se = std_error(frame_r, from);
  out.converged_t_i = mean(frame_ti, from);
  out.converged_t_i_se = std_error(frame_ti, from);
  out.final_states = states;
  return out;
}

void write_trajectory_csv(std::ostream& out, const AdaptiveRun& run) {
  out << "k,su,tau,p,r_est,t_i_est,p_md,event_a,event_d,event_e,g_norm2\n";
  char line[200];
  for (const FrameLog& l : run.su_log) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,%.9g\n", l.frame,
                  l.su, l.tau, l.p, l.r, l.t_i, l.p_md, l.a, l.d, l.e, l.g_norm2);
    out << line;
  }
}

std::vector<FieldPoint> subgradient_field(const NetworkConfig& config, const QosConstraints& qos,
                                          const SensingModel& sensing,
                                          const AdaptiveSettings& settings,
                                          const std::vector<std::pair<double, double>>& points,
                                          int n_realizations, std::uint64_t seed,
                                          int parallelism) {
  if (n_realizations < 1) throw Error(ErrorCode::kInvalidConfig, "n_realizations must be >= 1");
  const int ns = config.n_su;
  const int n_ep = settings.n_ep;
  SimOptions sim;
  sim.sensing = sensing;
  std::vector<FieldPoint> field(points.size());

  auto analyzer_r = [&](double tau, double p) {
    tau = std::clamp(tau, 1.0 / config.sampling_freq, config.slot_duration);
    return analyze(config, SensingParams{tau, std::clamp(p, 0.0, 1.0)}, sensing).perf.throughput;
  };

  auto one_point = [&](std::size_t i) {
    const auto [tau, p] = points[i];
    FieldPoint fp;
    fp.tau = tau;
    fp.p = p;
    const PointEval here = evaluate_point(config, tau, p, qos, sensing);
    fp.r = here.r;
    fp.feasible = here.feasible;

    // Central differences at the algorithm's own step sizes, one-sided at the box edges.
    const double t_lo = std::max(tau - settings.d_tau, 1.0 / config.sampling_freq);
    const double t_hi = std::min(tau + settings.d_tau, config.slot_duration);
    const double p_lo = std::max(p - settings.d_p, 0.0);
    const double p_hi = std::min(p + settings.d_p, 1.0);
    fp.grad_tau = -(analyzer_r(t_hi, p) - analyzer_r(t_lo, p)) / (t_hi - t_lo);
    fp.grad_p = -(analyzer_r(tau, p_hi) - analyzer_r(tau, p_lo)) / (p_hi - p_lo);

    Rng rng(derive_seed(seed, i));
    const SuSchedule here_sched{{tau}, {p}};
    const double p_md_here = analytic_misdetection(config, here_sched, sensing);
    double sum_tau = 0.0, sum_p = 0.0;
    std::vector<SlotOutcome> prev_frame(idx(n_ep)), cur_frame(idx(n_ep));
    for (int rep = 0; rep < n_realizations; ++rep) {
      // Previous iterate: one unit step back along random signs, projected.
      const double s_tau = bernoulli(rng, 0.5) ? 1.0 : -1.0;
      const double s_p = bernoulli(rng, 0.5) ? 1.0 : -1.0;
      const double tau_prev =
          std::clamp(tau - s_tau * settings.d_tau, 1.0 / config.sampling_freq, config.slot_duration);
      const double p_prev = std::clamp(p - s_p * settings.d_p, 0.0, 1.0);
      const auto prev_sched = std::vector<SuSchedule>(idx(ns), SuSchedule{{tau_prev}, {p_prev}});
      const auto cur_sched = std::vector<SuSchedule>(idx(ns), here_sched);
      PuState pu;
      for (auto& o : prev_frame) o = run_slot(config, prev_sched, sim, rng, &pu);
      for (auto& o : cur_frame) o = run_slot(config, cur_sched, sim, rng, &pu);

      double g_tau = 0.0, g_p = 0.0;
      for (int k = 0; k < ns; ++k) {
        AdaptiveState s = initial_state(settings, tau, p);
        s.tau_prev = tau_prev;
        s.p_prev = p_prev;
        s.r_prev = frame_estimate(prev_frame, k, n_ep, 0.0, config.n_pu).r;
        const FrameEstimate est = frame_estimate(cur_frame, k, n_ep, p_md_here, config.n_pu);
        const AdaptiveState next = alg1_update(s, est, qos);
        g_tau += next.g_tau;
        g_p += next.g_p;
      }
      sum_tau += g_tau / ns;
      sum_p += g_p / ns;
    }
    fp.g_tau = sum_tau / n_realizations;
    fp.g_p = sum_p / n_realizations;
    fp.inner = fp.g_tau * fp.grad_tau + fp.g_p * fp.grad_p;
    field[i] = fp;
  };

  const int workers = std::clamp(parallelism, 1, std::max(1, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(idx(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = idx(w); i < points.size(); i += idx(workers)) one_point(i);
      } catch (...) {
        errors[idx(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return field;
}

}  // namespace rsop
