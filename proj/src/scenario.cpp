#include "rsop/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rsop/error.hpp"

namespace rsop {

namespace {

struct Unit {
  const char* suffix;
  double scale;
};

// Longest suffixes first so "ms" is not read as "s".
constexpr Unit kUnits[] = {
    {"GHz", 1e9}, {"MHz", 1e6}, {"kHz", 1e3}, {"Hz", 1.0},   {"\xC2\xB5s", 1e-6},
    {"us", 1e-6}, {"ms", 1e-3}, {"ns", 1e-9}, {"s", 1.0},
};

class Reader {
 public:
  Reader(std::string source, double slot) : source_(std::move(source)), slot_(slot) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ':' << node.Mark().line + 1;
    os << ": " << field << ": " << msg;
    throw Error(ErrorCode::kConfigParse, os.str());
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& section) const {
    if (!map.IsMap()) fail(map, section, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (allowed.count(key) == 0) fail(kv.first, section + "." + key, "unknown key");
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a scalar");
    try {
      return parse_quantity(node.as<std::string>());
    } catch (const Error& e) {
      fail(node, field, e.what());
    }
  }

  // Times may also be written as a fraction of the slot, e.g. "0.1T".
  double time(const YAML::Node& node, const std::string& field) const {
    if (node.IsScalar()) {
      const auto text = node.as<std::string>();
      if (!text.empty() && text.back() == 'T') {
        try {
          return parse_quantity(text.substr(0, text.size() - 1)) * slot_;
        } catch (const Error& e) {
          fail(node, field, e.what());
        }
      }
    }
    return number(node, field);
  }

  int integer(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (v != std::floor(v) || std::abs(v) > 2e9) fail(node, field, "expected an integer");
    return static_cast<int>(v);
  }

  bool boolean(const YAML::Node& node, const std::string& field) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, field, "expected true or false");
    }
  }

  std::string text(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a scalar");
    return node.as<std::string>();
  }

  std::vector<double> list(const YAML::Node& node, const std::string& field, int size) const {
    if (node.IsSequence()) {
      std::vector<double> out;
      for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(number(node[i], field + "[" + std::to_string(i) + "]"));
      }
      if (static_cast<int>(out.size()) != size) {
        fail(node, field, "expected " + std::to_string(size) + " entries");
      }
      return out;
    }
    return std::vector<double>(static_cast<std::size_t>(size), number(node, field));
  }

  void set_slot(double slot) { slot_ = slot; }

 private:
  std::string source_;
  double slot_;
};

template <typename F>
void with(const YAML::Node& map, const char* key, F&& f) {
  const YAML::Node n = map[key];
  if (n.IsDefined() && !n.IsNull()) f(n);
}

std::vector<double> axis_values(const Reader& rd, const YAML::Node& node, const std::string& field) {
  std::vector<double> values;
  if (node["values"]) {
    const YAML::Node v = node["values"];
    if (!v.IsSequence()) rd.fail(v, field + ".values", "expected a list");
    for (std::size_t i = 0; i < v.size(); ++i) {
      values.push_back(rd.time(v[i], field + ".values"));
    }
  } else if (node["from"] && node["to"] && node["step"]) {
    const double from = rd.time(node["from"], field + ".from");
    const double to = rd.time(node["to"], field + ".to");
    const double step = rd.time(node["step"], field + ".step");
    if (!(step > 0.0) || to < from) rd.fail(node, field, "need step > 0 and to >= from");
    const auto count = static_cast<int>(std::floor((to - from) / step + 1e-9));
    for (int i = 0; i <= count; ++i) values.push_back(from + i * step);
  } else {
    rd.fail(node, field, "give either values or from/to/step");
  }
  if (values.empty()) rd.fail(node, field, "no sweep values");
  return values;
}

SweepAxis read_axis(const Reader& rd, const YAML::Node& node, const std::string& field,
                    bool allow_nested) {
  std::set<std::string> keys{"axis", "values", "from", "to", "step"};
  if (allow_nested) {
    keys.insert("outer");
    keys.insert("at_optimum");
  }
  rd.check_keys(node, keys, field);
  if (!node["axis"]) rd.fail(node, field + ".axis", "missing");
  SweepAxis a;
  a.axis = rd.text(node["axis"], field + ".axis");
  static const std::set<std::string> kAxes{"p", "tau", "n_pu", "n_su", "p_fa"};
  if (kAxes.count(a.axis) == 0) {
    rd.fail(node["axis"], field + ".axis", "must be one of p, tau, n_pu, n_su, p_fa");
  }
  a.values = axis_values(rd, node, field);
  return a;
}

}  // namespace

double parse_quantity(const std::string& raw) {
  std::string s = raw;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  double scale = 1.0;
  for (const Unit& u : kUnits) {
    const std::string suf = u.suffix;
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
      scale = u.scale;
      s.resize(s.size() - suf.size());
      break;
    }
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kConfigParse, "cannot read '" + raw + "' as a number");
  }
  return v * scale;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::kConfigParse,
                source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Scenario sc;
  sc.content_hash = fnv1a(text);
  Reader rd(source, sc.network.slot_duration);
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping");
  rd.check_keys(root, {"name", "kind", "network", "sensing", "qos", "detector", "simulation",
                       "grid", "adaptive", "sweep", "field"},
                "<root>");
  with(root, "name", [&](auto n) { sc.name = rd.text(n, "name"); });
  with(root, "kind", [&](auto n) { sc.kind = rd.text(n, "kind"); });

  NetworkConfig& net = sc.network;
  YAML::Node presence, pu_power;
  with(root, "network", [&](const YAML::Node& n) {
    rd.check_keys(n, {"n_su", "n_pu", "slot_duration", "handoff_time", "sampling_freq", "tx_rate",
                      "presence_prob", "pu_power", "su_power", "noise_power"},
                  "network");
    with(n, "n_su", [&](auto v) { net.n_su = rd.integer(v, "network.n_su"); });
    with(n, "n_pu", [&](auto v) { net.n_pu = rd.integer(v, "network.n_pu"); });
    with(n, "slot_duration", [&](auto v) { net.slot_duration = rd.number(v, "network.slot_duration"); });
    with(n, "handoff_time", [&](auto v) { net.handoff_time = rd.number(v, "network.handoff_time"); });
    with(n, "sampling_freq", [&](auto v) { net.sampling_freq = rd.number(v, "network.sampling_freq"); });
    with(n, "tx_rate", [&](auto v) { net.tx_rate = rd.number(v, "network.tx_rate"); });
    with(n, "su_power", [&](auto v) { net.su_power = rd.number(v, "network.su_power"); });
    with(n, "noise_power", [&](auto v) { net.noise_power = rd.number(v, "network.noise_power"); });
    with(n, "presence_prob", [&](auto v) { presence.reset(v); });
    with(n, "pu_power", [&](auto v) { pu_power.reset(v); });
  });
  if (net.n_pu < 1) rd.fail(root["network"], "network.n_pu", "must be >= 1");
  net.presence_prob = presence.IsDefined() && !presence.IsNull() ? rd.list(presence, "network.presence_prob", net.n_pu)
                               : std::vector<double>(static_cast<std::size_t>(net.n_pu), 0.5);
  net.pu_power = pu_power.IsDefined() && !pu_power.IsNull() ? rd.list(pu_power, "network.pu_power", net.n_pu)
                          : std::vector<double>(static_cast<std::size_t>(net.n_pu), 0.1);
  try {
    net.validate();
  } catch (const Error& e) {
    rd.fail(root["network"], "network", e.what());
  }
  rd.set_slot(net.slot_duration);

  sc.sensing.tau = 0.1 * net.slot_duration;
  with(root, "sensing", [&](const YAML::Node& n) {
    rd.check_keys(n, {"tau", "p"}, "sensing");
    with(n, "tau", [&](auto v) { sc.sensing.tau = rd.time(v, "sensing.tau"); });
    with(n, "p", [&](auto v) { sc.sensing.p = rd.number(v, "sensing.p"); });
  });
  try {
    sc.sensing.validate(net);
  } catch (const Error& e) {
    rd.fail(root["sensing"], "sensing", e.what());
  }

  with(root, "qos", [&](const YAML::Node& n) {
    rd.check_keys(n, {"t_i_max", "p_md_max", "p_fa_max", "p_d_min"}, "qos");
    with(n, "t_i_max", [&](auto v) { sc.qos.t_i_max = rd.number(v, "qos.t_i_max"); });
    with(n, "p_md_max", [&](auto v) { sc.qos.p_md_max = rd.number(v, "qos.p_md_max"); });
    with(n, "p_fa_max", [&](auto v) { sc.qos.p_fa_max = rd.number(v, "qos.p_fa_max"); });
    with(n, "p_d_min", [&](auto v) { sc.qos.p_d_min = rd.number(v, "qos.p_d_min"); });
  });
  try {
    sc.qos.validate();
  } catch (const Error& e) {
    rd.fail(root["qos"], "qos", e.what());
  }

  with(root, "detector", [&](const YAML::Node& n) {
    rd.check_keys(n, {"threshold_norm", "snr_mode", "fixed_p_fa", "fixed_p_d"}, "detector");
    with(n, "threshold_norm", [&](auto v) {
      sc.detector.threshold_norm = rd.number(v, "detector.threshold_norm");
    });
    with(n, "snr_mode", [&](auto v) {
      const auto m = rd.text(v, "detector.snr_mode");
      if (m == "stage2") sc.detector.snr_mode = SnrMode::kStage2Approx;
      else if (m == "exact") sc.detector.snr_mode = SnrMode::kExactPerStage;
      else rd.fail(v, "detector.snr_mode", "must be stage2 or exact");
    });
    with(n, "fixed_p_fa", [&](auto v) { sc.detector.fixed_p_fa = rd.number(v, "detector.fixed_p_fa"); });
    with(n, "fixed_p_d", [&](auto v) { sc.detector.fixed_p_d = rd.number(v, "detector.fixed_p_d"); });
    if (sc.detector.fixed_p_fa.has_value() != sc.detector.fixed_p_d.has_value()) {
      rd.fail(n, "detector", "fixed_p_fa and fixed_p_d go together");
    }
  });

  with(root, "simulation", [&](const YAML::Node& n) {
    rd.check_keys(n, {"slots", "reps", "seed", "protocol", "detection", "pu_model",
                      "on_off_persistence", "trace_rows"},
                  "simulation");
    SimSpec& s = sc.sim;
    with(n, "slots", [&](auto v) { s.slots = rd.integer(v, "simulation.slots"); });
    with(n, "reps", [&](auto v) { s.reps = rd.integer(v, "simulation.reps"); });
    with(n, "seed", [&](auto v) { s.seed = static_cast<std::uint64_t>(rd.integer(v, "simulation.seed")); });
    with(n, "protocol", [&](auto v) {
      const auto p = rd.text(v, "simulation.protocol");
      if (p == "modified") s.protocol = Protocol::kModified;
      else if (p == "conventional") s.protocol = Protocol::kConventional;
      else rd.fail(v, "simulation.protocol", "must be modified or conventional");
    });
    with(n, "detection", [&](auto v) {
      const auto d = rd.text(v, "simulation.detection");
      if (d == "realized") s.detection = DetectionMode::kRealizedSnr;
      else if (d == "mean-field") s.detection = DetectionMode::kMeanField;
      else rd.fail(v, "simulation.detection", "must be realized or mean-field");
    });
    with(n, "pu_model", [&](auto v) {
      const auto m = rd.text(v, "simulation.pu_model");
      if (m == "iid") s.pu_model = PuModel::kIid;
      else if (m == "on-off") s.pu_model = PuModel::kOnOff;
      else rd.fail(v, "simulation.pu_model", "must be iid or on-off");
    });
    with(n, "on_off_persistence", [&](auto v) {
      s.on_off_persistence = rd.number(v, "simulation.on_off_persistence");
    });
    with(n, "trace_rows", [&](auto v) { s.trace_rows = rd.integer(v, "simulation.trace_rows"); });
    if (s.slots < 1 || s.reps < 1) rd.fail(n, "simulation", "slots and reps must be >= 1");
  });

  with(root, "grid", [&](const YAML::Node& n) {
    rd.check_keys(n, {"tau_lo", "tau_hi", "tau_steps", "p_lo", "p_hi", "p_steps"}, "grid");
    GridOverrides& g = sc.grid;
    with(n, "tau_lo", [&](auto v) { g.tau_lo = rd.time(v, "grid.tau_lo"); });
    with(n, "tau_hi", [&](auto v) { g.tau_hi = rd.time(v, "grid.tau_hi"); });
    with(n, "tau_steps", [&](auto v) { g.tau_steps = rd.integer(v, "grid.tau_steps"); });
    with(n, "p_lo", [&](auto v) { g.p_lo = rd.number(v, "grid.p_lo"); });
    with(n, "p_hi", [&](auto v) { g.p_hi = rd.number(v, "grid.p_hi"); });
    with(n, "p_steps", [&](auto v) { g.p_steps = rd.integer(v, "grid.p_steps"); });
  });

  with(root, "adaptive", [&](const YAML::Node& n) {
    rd.check_keys(n, {"algorithm", "frames", "n_ep", "d_tau", "d_p", "d_tau1", "d_p1", "tau1", "p1",
                      "asynchronous"},
                  "adaptive");
    AdaptiveSpec& a = sc.adaptive;
    with(n, "algorithm", [&](auto v) {
      const auto s = rd.text(v, "adaptive.algorithm");
      if (s == "1") a.algorithm = Algorithm::kAlg1;
      else if (s == "2") a.algorithm = Algorithm::kAlg2;
      else if (s == "none") a.algorithm = Algorithm::kNone;
      else rd.fail(v, "adaptive.algorithm", "must be 1, 2 or none");
    });
    with(n, "frames", [&](auto v) { a.frames = rd.integer(v, "adaptive.frames"); });
    with(n, "n_ep", [&](auto v) { a.n_ep = rd.integer(v, "adaptive.n_ep"); });
    with(n, "d_tau", [&](auto v) { a.d_tau = rd.time(v, "adaptive.d_tau"); });
    with(n, "d_p", [&](auto v) { a.d_p = rd.number(v, "adaptive.d_p"); });
    with(n, "d_tau1", [&](auto v) { a.d_tau1 = rd.time(v, "adaptive.d_tau1"); });
    with(n, "d_p1", [&](auto v) { a.d_p1 = rd.number(v, "adaptive.d_p1"); });
    with(n, "tau1", [&](auto v) { a.tau1 = rd.time(v, "adaptive.tau1"); });
    with(n, "p1", [&](auto v) { a.p1 = rd.number(v, "adaptive.p1"); });
    with(n, "asynchronous", [&](auto v) { a.asynchronous = rd.boolean(v, "adaptive.asynchronous"); });
  });

  with(root, "sweep", [&](const YAML::Node& n) {
    SweepSpec s;
    s.inner = read_axis(rd, n, "sweep", true);
    with(n, "outer", [&](auto v) { s.outer = read_axis(rd, v, "sweep.outer", false); });
    with(n, "at_optimum", [&](auto v) { s.at_optimum = rd.boolean(v, "sweep.at_optimum"); });
    sc.sweep = s;
  });

  with(root, "field", [&](const YAML::Node& n) {
    rd.check_keys(n, {"realizations", "tau_points", "p_points"}, "field");
    with(n, "realizations", [&](auto v) { sc.field.realizations = rd.integer(v, "field.realizations"); });
    with(n, "tau_points", [&](auto v) { sc.field.tau_points = rd.integer(v, "field.tau_points"); });
    with(n, "p_points", [&](auto v) { sc.field.p_points = rd.integer(v, "field.p_points"); });
  });
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigParse, path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

SensingModel Scenario::sensing_model_for(const NetworkConfig& config) const {
  if (detector.fixed_p_fa) return FixedSensing{*detector.fixed_p_fa, *detector.fixed_p_d};
  if (detector.threshold_norm) return DetectorConfig{*detector.threshold_norm, detector.snr_mode};
  return calibrate_detector(config, qos, detector.snr_mode);
}

SensingModel Scenario::sensing_model() const { return sensing_model_for(network); }

GridSpec Scenario::grid_spec(const NetworkConfig& config) const {
  GridSpec g = GridSpec::standard(config, qos);
  if (grid.tau_lo) g.tau_lo = *grid.tau_lo;
  if (grid.tau_hi) g.tau_hi = *grid.tau_hi;
  g.tau_steps = grid.tau_steps;
  g.p_lo = grid.p_lo;
  g.p_hi = grid.p_hi;
  g.p_steps = grid.p_steps;
  return g;
}

AdaptiveSettings Scenario::adaptive_settings(const NetworkConfig& config) const {
  AdaptiveSettings s;
  const double slot = config.slot_duration;
  s.n_ep = adaptive.n_ep;
  s.d_tau = adaptive.d_tau.value_or(0.01 * slot);
  s.d_p = adaptive.d_p;
  s.d_tau1 = adaptive.d_tau1.value_or(0.01 * slot);
  s.d_p1 = adaptive.d_p1;
  s.slot_duration = slot;
  s.tau_min = GridSpec::standard(config, qos).tau_lo;
  return s;
}

SimOptions Scenario::sim_options(const NetworkConfig& config) const {
  SimOptions o;
  o.protocol = sim.protocol;
  o.sensing = sensing_model_for(config);
  o.detection = sim.detection;
  o.pu_model = sim.pu_model;
  o.on_off_persistence = sim.on_off_persistence;
  return o;
}

NetworkConfig with_field(const NetworkConfig& base, const std::string& axis, double value) {
  NetworkConfig c = base;
  if (axis == "n_su") {
    c.n_su = static_cast<int>(std::lround(value));
  } else if (axis == "n_pu") {
    c.n_pu = static_cast<int>(std::lround(value));
    c.presence_prob.assign(static_cast<std::size_t>(c.n_pu), base.presence_prob.front());
    c.pu_power.assign(static_cast<std::size_t>(c.n_pu), base.pu_power.front());
  } else {
    throw Error(ErrorCode::kInvalidConfig, "'" + axis + "' is not a network field");
  }
  c.validate();
  return c;
}

}  // namespace rsop
