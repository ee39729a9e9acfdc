#include "rsop/optimizer.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <thread>

#include "rsop/error.hpp"

namespace rsop {

namespace {

double lerp(double lo, double hi, int i, int steps) {
  if (steps == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

// a beats b: higher r, then smaller tau, then smaller p.
bool better(const PointEval& a, const PointEval& b) {
  if (a.r != b.r) return a.r > b.r;
  if (a.tau != b.tau) return a.tau < b.tau;
  return a.p < b.p;
}

}  // namespace

void GridSpec::validate(const NetworkConfig& config) const {
  if (tau_steps < 1 || p_steps < 1) throw Error(ErrorCode::kEmptyGrid, "grid needs steps >= 1");
  if (!(tau_lo > 0.0 && tau_lo <= tau_hi && tau_hi <= config.slot_duration)) {
    throw Error(ErrorCode::kEmptyGrid, "tau range must satisfy 0 < lo <= hi <= T");
  }
  if (!(p_lo >= 0.0 && p_lo <= p_hi && p_hi <= 1.0)) {
    throw Error(ErrorCode::kEmptyGrid, "p range must satisfy 0 <= lo <= hi <= 1");
  }
}

double GridSpec::tau_at(int i) const { return lerp(tau_lo, tau_hi, i, tau_steps); }
double GridSpec::p_at(int j) const { return lerp(p_lo, p_hi, j, p_steps); }

GridSpec GridSpec::standard(const NetworkConfig& config, const QosConstraints& qos, int steps) {
  GridSpec g;
  g.tau_lo = std::max(min_sensing_time(min_pu_snr(config), config.sampling_freq, qos.p_fa_max,
                                       qos.p_d_min),
                      1.0 / config.sampling_freq);
  g.tau_hi = 0.5 * config.slot_duration;
  g.tau_steps = steps;
  g.p_steps = steps;
  return g;
}

PointEval evaluate_point(const NetworkConfig& config, double tau, double p,
                         const QosConstraints& qos, const SensingModel& sensing,
                         ChainOptions options) {
  const ChainResult res = analyze(config, SensingParams{tau, p}, sensing, options);
  PointEval e;
  e.tau = tau;
  e.p = p;
  e.r = res.perf.throughput;
  e.t_i = res.perf.interference_time;
  e.p_md_max = res.occupancy.max_misdetection();
  e.feasible = e.t_i <= qos.t_i_max && e.p_md_max <= qos.p_md_max + kMisdetectionSlack;
  return e;
}

OptResult brute_force_optimize(const GridSpec& grid, const PointEvaluator& evaluate,
                               int parallelism) {
  if (grid.tau_steps < 1 || grid.p_steps < 1) throw Error(ErrorCode::kEmptyGrid, "empty grid");
  OptResult res;
  res.tau_steps = grid.tau_steps;
  res.p_steps = grid.p_steps;
  const int total = grid.tau_steps * grid.p_steps;
  res.grid.resize(static_cast<std::size_t>(total));

  const int workers = std::clamp(parallelism, 1, total);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < total; k += workers) {
          res.grid[static_cast<std::size_t>(k)] =
              evaluate(grid.tau_at(k / grid.p_steps), grid.p_at(k % grid.p_steps));
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const PointEval* best_feasible = nullptr;
  const PointEval* best_any = nullptr;
  for (const PointEval& e : res.grid) {
    if (best_any == nullptr || better(e, *best_any)) best_any = &e;
    if (e.feasible && (best_feasible == nullptr || better(e, *best_feasible))) best_feasible = &e;
  }
  const PointEval& star = best_feasible != nullptr ? *best_feasible : *best_any;
  res.feasible = best_feasible != nullptr;
  res.tau_star = star.tau;
  res.p_star = star.p;
  res.r_star = star.r;
  res.t_i_at_star = star.t_i;
  res.p_md_at_star = star.p_md_max;
  return res;
}

OptResult brute_force_optimize(const NetworkConfig& config, const GridSpec& grid,
                               const QosConstraints& qos, const SensingModel& sensing,
                               int parallelism) {
  grid.validate(config);
  return brute_force_optimize(
      grid,
      [&](double tau, double p) { return evaluate_point(config, tau, p, qos, sensing); },
      parallelism);
}

void write_grid_csv(std::ostream& out, const OptResult& result) {
  out << "tau,p,r,t_I,p_md_max,feasible\n";
  char line[160];
  for (const PointEval& e : result.grid) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", e.tau, e.p, e.r, e.t_i,
                  e.p_md_max, e.feasible ? 1 : 0);
    out << line;
  }
}

}  // namespace rsop
