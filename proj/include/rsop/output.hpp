#pragma once

// Tidy CSV tables with declared schemas, and the small JSON manifest written next
// to them. Numbers are printed with %.9g and nothing time-dependent is written, so
// identical runs give identical bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace rsop {

inline constexpr const char* kToolVersion = "0.1.0";

using Cell = std::variant<double, std::int64_t, std::string>;

/// Registered column list for a table name; throws kInvalidConfig for unknown names.
const std::vector<std::string>& csv_schema(const std::string& table);
std::vector<std::string> csv_schema_names();

struct Provenance {
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
};

/// "# rsop <version> scenario_hash=<16 hex> seed=<n>"
std::string header_line(const Provenance& prov);

std::string format_cell(const Cell& cell);

class CsvTable {
 public:
  explicit CsvTable(std::string schema);

  void add(std::vector<Cell> row);
  const std::string& schema() const { return schema_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }

  /// Checks every row against the schema (width, finite numbers, no separators in
  /// text) and throws kInvalidConfig naming the first bad row.
  void validate() const;
  std::string render(const Provenance& prov) const;
  /// Validates, then writes; kUnwritableOutput when the file cannot be written.
  void write(const std::filesystem::path& path, const Provenance& prov) const;

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Creates the directory if needed and checks that a file can be created in it.
void ensure_writable_dir(const std::filesystem::path& dir);

/// Writes text verbatim; kUnwritableOutput on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rsop
