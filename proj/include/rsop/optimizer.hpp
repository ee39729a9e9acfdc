#pragma once

// Exhaustive (tau, p) grid search for the constrained throughput maximum.

#include <functional>
#include <iosfwd>
#include <vector>

#include "rsop/chain.hpp"
#include "rsop/detector.hpp"
#include "rsop/model.hpp"

namespace rsop {

struct GridSpec {
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  int tau_steps = 64;
  double p_lo = 0.01;
  double p_hi = 1.0;
  int p_steps = 64;

  void validate(const NetworkConfig& config) const;
  double tau_at(int i) const;
  double p_at(int j) const;

  /// tau in [tau_min, T/2], p in [0.01, 1], 64 x 64.
  static GridSpec standard(const NetworkConfig& config, const QosConstraints& qos, int steps = 64);
};

struct PointEval {
  double tau = 0.0;
  double p = 0.0;
  double r = 0.0;
  double t_i = 0.0;
  double p_md_max = 0.0;
  bool feasible = false;
};

using PointEvaluator = std::function<PointEval(double tau, double p)>;

struct OptResult {
  double tau_star = 0.0;
  double p_star = 0.0;
  double r_star = 0.0;
  double t_i_at_star = 0.0;
  double p_md_at_star = 0.0;
  bool feasible = false;
  int tau_steps = 0;
  int p_steps = 0;
  std::vector<PointEval> grid;  // row-major, tau outer

  const PointEval& at(int i, int j) const {
    return grid[static_cast<std::size_t>(i * p_steps + j)];
  }
};

/// Rounding slack on the misdetection limit; the interference limit has none.
inline constexpr double kMisdetectionSlack = 1e-12;

PointEval evaluate_point(const NetworkConfig& config, double tau, double p,
                         const QosConstraints& qos, const SensingModel& sensing,
                         ChainOptions options = {});

/// Best feasible point; ties go to smaller tau, then smaller p. When nothing is feasible
/// the best infeasible point is reported with feasible = false.
OptResult brute_force_optimize(const GridSpec& grid, const PointEvaluator& evaluate,
                               int parallelism = 1);

OptResult brute_force_optimize(const NetworkConfig& config, const GridSpec& grid,
                               const QosConstraints& qos, const SensingModel& sensing,
                               int parallelism = 1);

void write_grid_csv(std::ostream& out, const OptResult& result);

}  // namespace rsop
