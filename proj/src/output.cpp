#include "rsop/output.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "rsop/error.hpp"

namespace rsop {

namespace {

using Schemas = std::map<std::string, std::vector<std::string>>;

const Schemas& schemas() {
  static const Schemas kSchemas{
      {"analyze", {"tau", "p", "delta", "r", "t_I", "p_md_max", "upper_bound"}},
      {"stages", {"tau", "p", "m", "n", "occupancy", "u", "snr", "p_d", "p_fa", "q_success", "y"}},
      {"replications",
       {"rep", "seed", "slots", "throughput", "interference", "overhead", "handoffs", "delay",
        "successes", "interfered", "collisions"}},
      {"summary", {"metric", "mean", "se", "ci95"}},
      {"grid", {"tau", "p", "r", "t_I", "p_md_max", "feasible"}},
      {"optimum", {"tau_star", "p_star", "r_star", "t_I", "p_md_max", "feasible"}},
      {"trajectory",
       {"k", "su", "tau", "p", "r_est", "t_i_est", "p_md", "event_a", "event_d", "event_e",
        "g_norm2"}},
      {"frames", {"k", "mean_tau", "mean_p", "r", "t_I", "g_norm2", "f", "f_best", "f_star",
                  "bound"}},
      {"sweep",
       {"outer_axis", "outer", "inner_axis", "inner", "tau", "p", "r_analyzer", "t_I_analyzer",
        "r_sim", "r_sim_se", "t_I_sim", "overhead", "upper_bound"}},
      {"ppersistent",
       {"protocol", "n_su", "n_pu", "tau", "p", "throughput", "throughput_se", "overhead",
        "overhead_se", "interference"}},
      {"field", {"tau", "p", "g_tau", "g_p", "grad_tau", "grad_p", "inner", "feasible", "r"}},
      {"upper_bound", {"n_su", "n_pu", "free_channels", "upper_bound"}},
      {"trace",
       {"slot", "su", "pu_present", "channel", "stage", "disposition", "acked", "throughput",
        "interference", "sensed", "handoffs", "delay"}},
  };
  return kSchemas;
}

}  // namespace

const std::vector<std::string>& csv_schema(const std::string& table) {
  const auto it = schemas().find(table);
  if (it == schemas().end()) {
    throw Error(ErrorCode::kInvalidConfig, "no CSV schema named '" + table + "'");
  }
  return it->second;
}

std::vector<std::string> csv_schema_names() {
  std::vector<std::string> out;
  for (const auto& kv : schemas()) out.push_back(kv.first);
  return out;
}

std::string header_line(const Provenance& prov) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# rsop %s scenario_hash=%016" PRIx64 " seed=%" PRIu64,
                kToolVersion, prov.scenario_hash, prov.seed);
  return buf;
}

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    char buf[32];
    // Avoid "-0" so sign noise in zero results does not change the bytes.
    std::snprintf(buf, sizeof buf, "%.9g", *d == 0.0 ? 0.0 : *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  return std::get<std::string>(cell);
}

CsvTable::CsvTable(std::string schema) : schema_(std::move(schema)), columns_(csv_schema(schema_)) {}

void CsvTable::add(std::vector<Cell> row) { rows_.push_back(std::move(row)); }

void CsvTable::validate() const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    const std::string where = schema_ + " row " + std::to_string(r + 1);
    if (row.size() != columns_.size()) {
      throw Error(ErrorCode::kInvalidConfig, where + ": " + std::to_string(row.size()) +
                                                 " cells for " + std::to_string(columns_.size()) +
                                                 " columns");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (const auto* d = std::get_if<double>(&row[c]); d && !std::isfinite(*d)) {
        throw Error(ErrorCode::kInvalidConfig, where + ": " + columns_[c] + " is not finite");
      }
      if (const auto* s = std::get_if<std::string>(&row[c]);
          s && s->find_first_of(",\n\"") != std::string::npos) {
        throw Error(ErrorCode::kInvalidConfig, where + ": " + columns_[c] + " needs quoting");
      }
    }
  }
}

std::string CsvTable::render(const Provenance& prov) const {
  std::string out = header_line(prov) + "\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += columns_[c];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::filesystem::path& path, const Provenance& prov) const {
  validate();
  write_text(path, render(prov));
}

void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kUnwritableOutput, dir.string() + ": cannot create directory");
  }
  const auto probe = dir / ".rsop-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw Error(ErrorCode::kUnwritableOutput, dir.string() + ": not writable");
  }
  std::filesystem::remove(probe, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kUnwritableOutput, path.string() + ": cannot open for writing");
  f << text;
  f.flush();
  if (!f) throw Error(ErrorCode::kUnwritableOutput, path.string() + ": write failed");
}

}  // namespace rsop
