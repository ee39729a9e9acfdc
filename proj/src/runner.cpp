#include "rsop/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rsop/chain.hpp"
#include "rsop/error.hpp"
#include "rsop/optimizer.hpp"
#include "rsop/output.hpp"
#include "rsop/rng.hpp"

namespace rsop {

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// Collects the files of one run and writes the manifest last.
class Outputs {
 public:
  Outputs(const ExperimentSpec& spec, const Scenario& sc, std::string kind)
      : dir_(spec.out_dir), prov_{sc.content_hash, sc.sim.seed} {
    ensure_writable_dir(dir_);
    manifest_["tool"] = "rsop";
    manifest_["version"] = kToolVersion;
    manifest_["kind"] = kind;
    manifest_["scenario"] = sc.name;
    manifest_["scenario_hash"] = hex(sc.content_hash);
    manifest_["seed"] = sc.sim.seed;
    manifest_["files"] = Json::array();
    result_.kind = std::move(kind);
  }

  void table(const std::string& file, const CsvTable& t) {
    const fs::path path = dir_ / file;
    t.write(path, prov_);
    manifest_["files"].push_back({{"file", file}, {"schema", t.schema()}, {"columns", t.columns()},
                                  {"rows", t.size()}});
    result_.files.push_back(path);
  }

  // Raw CSV text whose header row is checked against a registered schema.
  void raw_table(const std::string& file, const std::string& schema, const std::string& body) {
    const auto& cols = csv_schema(schema);
    std::string expected;
    for (std::size_t c = 0; c < cols.size(); ++c) expected += (c ? "," : "") + cols[c];
    if (body.compare(0, expected.size(), expected) != 0) {
      throw Error(ErrorCode::kInvalidConfig, file + ": header does not match schema " + schema);
    }
    const fs::path path = dir_ / file;
    write_text(path, header_line(prov_) + "\n" + body);
    manifest_["files"].push_back({{"file", file}, {"schema", schema}, {"columns", cols}});
    result_.files.push_back(path);
  }

  Json& summary() { return manifest_["summary"]; }
  void say(const std::string& line) { result_.summary += line + "\n"; }

  ExperimentResult finish() {
    const fs::path path = dir_ / "manifest.json";
    write_text(path, manifest_.dump(2) + "\n");
    result_.files.push_back(path);
    return result_;
  }

 private:
  fs::path dir_;
  Provenance prov_;
  Json manifest_;
  ExperimentResult result_;
};

double network_bound(const NetworkConfig& c) {
  return upper_bound_throughput(c.n_su, c.presence_prob);
}

// One evaluation point of a sweep after the axis value has been applied.
struct Point {
  NetworkConfig config;
  SensingParams params;
  SensingModel sensing;
};

Point apply_axis(const Scenario& sc, Point pt, const std::string& axis, double value) {
  if (axis == "p") {
    pt.params.p = value;
  } else if (axis == "tau") {
    pt.params.tau = value;
  } else if (axis == "n_pu" || axis == "n_su") {
    pt.config = with_field(pt.config, axis, value);
    if (!sc.detector.fixed_p_fa && !sc.detector.threshold_norm) {
      pt.sensing = sc.sensing_model_for(pt.config);
    }
  } else if (axis == "p_fa") {
    const double p_d = sc.detector.fixed_p_d.value_or(sc.qos.p_d_min);
    pt.sensing = FixedSensing{value, p_d};
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown sweep axis '" + axis + "'");
  }
  return pt;
}

std::vector<double> default_p_axis() {
  std::vector<double> v;
  for (int i = 1; i <= 50; ++i) v.push_back(0.02 * i);
  return v;
}

ExperimentResult run_analyze(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "analyze");
  SweepAxis axis{"p", default_p_axis()};
  if (sc.sweep) axis = sc.sweep->inner;
  CsvTable table("analyze");
  CsvTable stages("stages");
  const Point base{sc.network, sc.sensing, sc.sensing_model()};
  double best_r = -1.0, best_at = 0.0;
  for (double v : axis.values) {
    const Point pt = apply_axis(sc, base, axis.axis, v);
    const ChainResult res = analyze(pt.config, pt.params, pt.sensing);
    const OccupancyTable& occ = res.occupancy;
    table.add({pt.params.tau, pt.params.p, static_cast<std::int64_t>(occ.delta),
               res.perf.throughput, res.perf.interference_time, occ.max_misdetection(),
               network_bound(pt.config)});
    for (int m = 0; m < pt.config.n_pu; ++m) {
      for (int n = 0; n < occ.delta; ++n) {
        const auto mi = static_cast<std::size_t>(m), ni = static_cast<std::size_t>(n);
        stages.add({pt.params.tau, pt.params.p, static_cast<std::int64_t>(m + 1),
                    static_cast<std::int64_t>(n + 1), occ.occ[mi][ni], occ.u[mi][ni],
                    occ.snr[mi][ni], occ.p_d[mi][ni], occ.p_fa[mi],
                    res.perf.success_prob[mi][ni], res.perf.no_tx_prob[mi][ni]});
      }
    }
    if (res.perf.throughput > best_r) {
      best_r = res.perf.throughput;
      best_at = v;
    }
  }
  out.table("analyze.csv", table);
  out.table("stages.csv", stages);
  out.summary() = {{"axis", axis.axis}, {"points", axis.values.size()}, {"max_r", best_r},
                   {"max_at", best_at}};
  out.say("analyze: " + std::to_string(axis.values.size()) + " points over " + axis.axis +
          ", max r = " + fmt("%.6g", best_r) + " at " + axis.axis + " = " + fmt("%.6g", best_at));
  return out.finish();
}

ExperimentResult run_simulate(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "simulate");
  const auto schedules = homogeneous(sc.network, sc.sensing);
  const SimOptions opts = sc.sim_options(sc.network);
  const auto reps = replications(sc.network, schedules, opts, sc.sim.slots, sc.sim.reps,
                                 sc.sim.seed, spec.parallelism);
  CsvTable table("replications");
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const RunMetrics& m = reps[r];
    table.add({static_cast<std::int64_t>(r), static_cast<std::int64_t>(derive_seed(sc.sim.seed, r)),
               m.slots, m.throughput, m.interference, m.overhead, m.handoffs, m.delay,
               m.successes, m.interfered, m.collisions});
  }
  const RunMetrics agg = aggregate(sc.network, reps);
  CsvTable summary("summary");
  summary.add({std::string("throughput"), agg.throughput, agg.throughput_se, agg.throughput_ci()});
  summary.add({std::string("interference"), agg.interference, agg.interference_se,
               agg.interference_ci()});
  summary.add({std::string("overhead"), agg.overhead, agg.overhead_se, 1.96 * agg.overhead_se});
  summary.add({std::string("network_throughput"), agg.network_throughput,
               sc.network.n_su * agg.throughput_se, sc.network.n_su * agg.throughput_ci()});
  out.table("replications.csv", table);
  out.table("summary.csv", summary);

  if (sc.sim.trace_rows > 0) {
    std::ostringstream os;
    write_trace_header(os);
    TraceSink sink{&os, sc.sim.trace_rows, 0};
    run_replication(sc.network, schedules, opts, sc.sim.slots, derive_seed(sc.sim.seed, 0), &sink);
    out.raw_table("trace.csv", "trace", os.str());
  }

  const double r_ana = avg_throughput(sc.network, sc.sensing, opts.sensing);
  out.summary() = {{"throughput", agg.throughput}, {"throughput_se", agg.throughput_se},
                   {"interference", agg.interference}, {"overhead", agg.overhead},
                   {"analyzer_r", r_ana}, {"upper_bound", network_bound(sc.network)}};
  out.say("simulate: r = " + fmt("%.6g", agg.throughput) + " +- " +
          fmt("%.3g", agg.throughput_ci()) + " (analyzer " + fmt("%.6g", r_ana) +
          "), t_I = " + fmt("%.6g", agg.interference) + ", overhead = " +
          fmt("%.6g", agg.overhead));
  return out.finish();
}

OptResult optimize_for(const Scenario& sc, const NetworkConfig& config, const SensingModel& sensing,
                       int parallelism) {
  return brute_force_optimize(config, sc.grid_spec(config), sc.qos, sensing, parallelism);
}

ExperimentResult run_optimize(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "optimize");
  const OptResult res = optimize_for(sc, sc.network, sc.sensing_model(), spec.parallelism);
  CsvTable grid("grid");
  for (const PointEval& e : res.grid) {
    grid.add({e.tau, e.p, e.r, e.t_i, e.p_md_max, static_cast<std::int64_t>(e.feasible)});
  }
  CsvTable best("optimum");
  best.add({res.tau_star, res.p_star, res.r_star, res.t_i_at_star, res.p_md_at_star,
            static_cast<std::int64_t>(res.feasible)});
  out.table("grid.csv", grid);
  out.table("optimum.csv", best);
  out.summary() = {{"tau_star", res.tau_star}, {"p_star", res.p_star}, {"r_star", res.r_star},
                   {"t_I", res.t_i_at_star}, {"feasible", res.feasible},
                   {"grid", {res.tau_steps, res.p_steps}}};
  out.say("optimize: r* = " + fmt("%.6g", res.r_star) + " at tau = " + fmt("%.6g", res.tau_star) +
          " s, p = " + fmt("%.4g", res.p_star) + (res.feasible ? "" : " (no feasible point)"));
  return out.finish();
}

ExperimentResult run_adapt(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "adapt");
  AdaptiveRunConfig run;
  run.algorithm = sc.adaptive.algorithm;
  run.settings = sc.adaptive_settings(sc.network);
  run.tau1 = sc.adaptive.tau1.value_or(0.1 * sc.network.slot_duration);
  run.p1 = sc.adaptive.p1;
  run.frames = sc.adaptive.frames;
  run.asynchronous = sc.adaptive.asynchronous;
  run.sim = sc.sim_options(sc.network);
  const AdaptiveRun res = run_adaptive(sc.network, sc.qos, run, sc.sim.seed);
  const OptResult opt = optimize_for(sc, sc.network, run.sim.sensing, spec.parallelism);
  const auto cc = convergence_constants(sc.network.n_su, sc.network.slot_duration,
                                        run.settings.d_tau, run.settings.d_p);

  CsvTable traj("trajectory");
  for (const FrameLog& l : res.su_log) {
    traj.add({static_cast<std::int64_t>(l.frame), static_cast<std::int64_t>(l.su), l.tau, l.p, l.r,
              l.t_i, l.p_md, static_cast<std::int64_t>(l.a), static_cast<std::int64_t>(l.d),
              static_cast<std::int64_t>(l.e), l.g_norm2});
  }
  CsvTable frames("frames");
  const bool bounded = run.settings.step.valid();
  for (const NetworkFrame& f : res.frames) {
    const double bound =
        bounded ? convergence_bound(cc.g2, cc.r2, run.settings.step, f.frame) : 0.0;
    frames.add({static_cast<std::int64_t>(f.frame), f.mean_tau, f.mean_p, f.r, f.t_i, f.g_norm2,
                f.f, f.f_best, -opt.r_star, bound});
  }
  out.table("trajectory.csv", traj);
  out.table("frames.csv", frames);
  out.summary() = {{"converged_r", res.converged_r},     {"converged_r_se", res.converged_r_se},
                   {"converged_t_I", res.converged_t_i}, {"converged_t_I_se", res.converged_t_i_se},
                   {"r_star", opt.r_star},               {"frames", run.frames}};
  out.say("adapt: converged r = " + fmt("%.6g", res.converged_r) + " +- " +
          fmt("%.3g", res.converged_r_se) + ", t_I = " + fmt("%.6g", res.converged_t_i) +
          ", grid r* = " + fmt("%.6g", opt.r_star));
  return out.finish();
}

ExperimentResult run_sweep(const ExperimentSpec& spec, const Scenario& sc) {
  if (!sc.sweep) throw Error(ErrorCode::kInvalidConfig, sc.name + ": sweep kind needs a sweep section");
  Outputs out(spec, sc, "sweep");
  const SweepSpec& sw = *sc.sweep;
  const SweepAxis outer = sw.outer.value_or(SweepAxis{"", {0.0}});
  const Point base{sc.network, sc.sensing, sc.sensing_model()};
  CsvTable table("sweep");
  std::uint64_t stream = 0;
  for (double ov : outer.values) {
    const Point op = outer.axis.empty() ? base : apply_axis(sc, base, outer.axis, ov);
    for (double iv : sw.inner.values) {
      Point pt = apply_axis(sc, op, sw.inner.axis, iv);
      if (sw.at_optimum) {
        const OptResult opt = optimize_for(sc, pt.config, pt.sensing, spec.parallelism);
        pt.params = {opt.tau_star, opt.p_star};
      }
      const ChainResult ana = analyze(pt.config, pt.params, pt.sensing);
      SimOptions opts = sc.sim_options(pt.config);
      opts.sensing = pt.sensing;
      const RunMetrics sim =
          monte_carlo(pt.config, homogeneous(pt.config, pt.params), opts, sc.sim.slots,
                      sc.sim.reps, derive_seed(sc.sim.seed, stream++), spec.parallelism);
      table.add({outer.axis.empty() ? std::string("none") : outer.axis, ov, sw.inner.axis, iv,
                 pt.params.tau, pt.params.p, ana.perf.throughput, ana.perf.interference_time,
                 sim.throughput, sim.throughput_se, sim.interference, sim.overhead,
                 network_bound(pt.config)});
      out.say("sweep: " + (outer.axis.empty() ? "" : outer.axis + " = " + fmt("%g", ov) + ", ") +
              sw.inner.axis + " = " + fmt("%g", iv) + ": r_sim = " + fmt("%.6g", sim.throughput) +
              ", r_analyzer = " + fmt("%.6g", ana.perf.throughput));
    }
  }
  out.table("sweep.csv", table);
  out.summary() = {{"inner_axis", sw.inner.axis}, {"outer_axis", outer.axis},
                   {"points", table.size()}, {"at_optimum", sw.at_optimum}};
  return out.finish();
}

ExperimentResult run_ppersistent(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "ppersistent-compare");
  const auto schedules = homogeneous(sc.network, sc.sensing);
  CsvTable table("ppersistent");
  RunMetrics res[2];
  const Protocol protocols[2] = {Protocol::kModified, Protocol::kConventional};
  const char* names[2] = {"modified", "conventional"};
  for (int i = 0; i < 2; ++i) {
    SimOptions opts = sc.sim_options(sc.network);
    opts.protocol = protocols[i];
    res[i] = monte_carlo(sc.network, schedules, opts, sc.sim.slots, sc.sim.reps,
                         derive_seed(sc.sim.seed, static_cast<std::uint64_t>(i)), spec.parallelism);
    table.add({std::string(names[i]), static_cast<std::int64_t>(sc.network.n_su),
               static_cast<std::int64_t>(sc.network.n_pu), sc.sensing.tau, sc.sensing.p,
               res[i].throughput, res[i].throughput_se, res[i].overhead, res[i].overhead_se,
               res[i].interference});
  }
  out.table("ppersistent.csv", table);
  const double reduction = 1.0 - res[0].overhead / res[1].overhead;
  const double thr_diff = std::abs(res[0].throughput - res[1].throughput) / res[1].throughput;
  out.summary() = {{"overhead_reduction", reduction}, {"throughput_rel_diff", thr_diff}};
  out.say("ppersistent-compare: overhead " + fmt("%.4g", res[0].overhead) + " vs " +
          fmt("%.4g", res[1].overhead) + " (" + fmt("%.1f", 100 * reduction) +
          "% lower), throughput differs by " + fmt("%.3f", 100 * thr_diff) + "%");
  return out.finish();
}

ExperimentResult run_field(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "subgradient-field");
  const GridSpec g = sc.grid_spec(sc.network);
  const FieldSpec& f = sc.field;
  if (f.tau_points < 1 || f.p_points < 1 || f.realizations < 1) {
    throw Error(ErrorCode::kInvalidConfig, "field needs positive point and realization counts");
  }
  // Interior points of an evenly spaced lattice over the optimizer's box.
  std::vector<std::pair<double, double>> points;
  for (int i = 1; i <= f.tau_points; ++i) {
    for (int j = 1; j <= f.p_points; ++j) {
      points.emplace_back(g.tau_lo + (g.tau_hi - g.tau_lo) * i / (f.tau_points + 1),
                          g.p_lo + (g.p_hi - g.p_lo) * j / (f.p_points + 1));
    }
  }
  const SensingModel sensing = sc.sensing_model();
  const AdaptiveSettings settings = sc.adaptive_settings(sc.network);
  const auto field = subgradient_field(sc.network, sc.qos, sensing, settings, points,
                                       f.realizations, sc.sim.seed, spec.parallelism);
  CsvTable table("field");
  int feasible = 0, aligned = 0;
  for (const FieldPoint& fp : field) {
    table.add({fp.tau, fp.p, fp.g_tau, fp.g_p, fp.grad_tau, fp.grad_p, fp.inner,
               static_cast<std::int64_t>(fp.feasible), fp.r});
    if (fp.feasible) {
      ++feasible;
      aligned += fp.inner >= 0.0;
    }
  }
  out.table("field.csv", table);
  out.summary() = {{"points", field.size()}, {"feasible", feasible}, {"nonnegative", aligned}};
  out.say("subgradient-field: " + std::to_string(aligned) + " of " + std::to_string(feasible) +
          " feasible points have <E[g], grad(-r)> >= 0");
  return out.finish();
}

ExperimentResult run_upper_bound(const ExperimentSpec& spec, const Scenario& sc) {
  Outputs out(spec, sc, "upper-bound");
  CsvTable table("upper_bound");
  std::vector<NetworkConfig> configs{sc.network};
  if (sc.sweep && (sc.sweep->inner.axis == "n_su" || sc.sweep->inner.axis == "n_pu")) {
    configs.clear();
    for (double v : sc.sweep->inner.values) {
      configs.push_back(with_field(sc.network, sc.sweep->inner.axis, v));
    }
  }
  for (const NetworkConfig& c : configs) {
    double free_channels = 0.0;
    for (double p1 : c.presence_prob) free_channels += 1.0 - p1;
    const double ub = network_bound(c);
    table.add({static_cast<std::int64_t>(c.n_su), static_cast<std::int64_t>(c.n_pu), free_channels,
               ub});
    out.say("upper-bound: N_s = " + std::to_string(c.n_su) + ", N_p = " +
            std::to_string(c.n_pu) + " -> " + fmt("%.6g", ub));
  }
  out.table("upper_bound.csv", table);
  out.summary() = {{"rows", table.size()}};
  return out.finish();
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kKinds{
      "analyze", "simulate", "optimize", "adapt", "sweep", "ppersistent-compare",
      "subgradient-field", "upper-bound"};
  return kKinds;
}

Scenario apply_overrides(Scenario sc, const ExperimentSpec& spec) {
  if (spec.seed) sc.sim.seed = *spec.seed;
  if (spec.reps) sc.sim.reps = *spec.reps;
  if (spec.slots) sc.sim.slots = *spec.slots;
  if (spec.grid) sc.grid.tau_steps = sc.grid.p_steps = *spec.grid;
  if (spec.protocol) sc.sim.protocol = *spec.protocol;
  if (spec.algorithm) sc.adaptive.algorithm = *spec.algorithm;
  if (sc.sim.reps < 1 || sc.sim.slots < 1) {
    throw Error(ErrorCode::kInvalidConfig, "reps and slots must be >= 1");
  }
  if (sc.grid.tau_steps < 1 || sc.grid.p_steps < 1) {
    throw Error(ErrorCode::kEmptyGrid, "grid needs at least one step per axis");
  }
  return sc;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  return run_experiment(spec, load_scenario(spec.scenario_path));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Scenario& loaded) {
  const Scenario sc = apply_overrides(loaded, spec);
  const std::string kind = spec.kind.empty() ? sc.kind : spec.kind;
  if (kind == "analyze") return run_analyze(spec, sc);
  if (kind == "simulate") return run_simulate(spec, sc);
  if (kind == "optimize") return run_optimize(spec, sc);
  if (kind == "adapt") return run_adapt(spec, sc);
  if (kind == "sweep") return run_sweep(spec, sc);
  if (kind == "ppersistent-compare") return run_ppersistent(spec, sc);
  if (kind == "subgradient-field") return run_field(spec, sc);
  if (kind == "upper-bound") return run_upper_bound(spec, sc);
  throw Error(ErrorCode::kInvalidConfig,
              "unknown experiment kind '" + kind + "'" + (kind.empty() ? " (scenario sets none)" : ""));
}

}  // namespace rsop
