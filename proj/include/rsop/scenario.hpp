#pragma once

// Scenario files: YAML with sections mirroring the library types. Times accept
// s/ms/us/µs/ns suffixes and frequencies Hz/kHz/MHz/GHz; everything is stored in SI.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsop/adaptive.hpp"
#include "rsop/detector.hpp"
#include "rsop/model.hpp"
#include "rsop/optimizer.hpp"
#include "rsop/simulator.hpp"

namespace rsop {

struct DetectorSpec {
  std::optional<double> threshold_norm;  // calibrated from the QoS limits when absent
  SnrMode snr_mode = SnrMode::kStage2Approx;
  std::optional<double> fixed_p_fa;  // both set: bypass the energy detector
  std::optional<double> fixed_p_d;
};

struct SimSpec {
  std::int64_t slots = 10000;
  int reps = 1;
  std::uint64_t seed = 1;
  Protocol protocol = Protocol::kModified;
  DetectionMode detection = DetectionMode::kRealizedSnr;
  PuModel pu_model = PuModel::kIid;
  double on_off_persistence = 0.0;
  std::int64_t trace_rows = 0;
};

struct GridOverrides {
  std::optional<double> tau_lo;
  std::optional<double> tau_hi;
  int tau_steps = 64;
  double p_lo = 0.01;
  double p_hi = 1.0;
  int p_steps = 64;
};

struct AdaptiveSpec {
  Algorithm algorithm = Algorithm::kAlg1;
  int frames = 1000;
  int n_ep = 50;
  std::optional<double> d_tau;  // 0.01 T when absent
  double d_p = 0.025;
  std::optional<double> d_tau1;
  double d_p1 = 0.025;
  std::optional<double> tau1;  // 0.1 T when absent
  double p1 = 0.8;
  bool asynchronous = false;
};

struct SweepAxis {
  std::string axis;  // p | tau | n_pu | n_su | p_fa
  std::vector<double> values;
};

struct SweepSpec {
  SweepAxis inner;
  std::optional<SweepAxis> outer;
  bool at_optimum = false;  // evaluate each point at its own grid optimum
};

struct FieldSpec {
  int realizations = 5000;
  int tau_points = 6;
  int p_points = 6;
};

struct Scenario {
  std::string name;
  std::string kind;  // default experiment kind
  NetworkConfig network;
  SensingParams sensing;
  QosConstraints qos;
  DetectorSpec detector;
  SimSpec sim;
  GridOverrides grid;
  AdaptiveSpec adaptive;
  std::optional<SweepSpec> sweep;
  FieldSpec field;
  std::uint64_t content_hash = 0;  // FNV-1a of the file bytes

  SensingModel sensing_model() const;
  SensingModel sensing_model_for(const NetworkConfig& config) const;
  GridSpec grid_spec(const NetworkConfig& config) const;
  AdaptiveSettings adaptive_settings(const NetworkConfig& config) const;
  SimOptions sim_options(const NetworkConfig& config) const;
};

/// Throws Error(kConfigParse) naming the source, line and field on any problem,
/// including unknown keys.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);

/// "10ms" -> 0.01, "6.857MHz" -> 6.857e6; plain numbers pass through.
double parse_quantity(const std::string& text);

std::uint64_t fnv1a(const std::string& bytes);

/// Copy of base with one sweepable field replaced (n_pu resizes per-channel vectors
/// using the first channel's values).
NetworkConfig with_field(const NetworkConfig& base, const std::string& axis, double value);

}  // namespace rsop
