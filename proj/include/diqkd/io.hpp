// Export formats and data ingestion for the command-line tools.
//
// Output stability contract: a given table and provenance always serialize
// to the same bytes.  Floats are printed with 9 significant digits, headers
// carry no timestamps or host details, and row order is fixed by the caller.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "diqkd/bound.hpp"
#include "diqkd/keyrate.hpp"
#include "diqkd/protocol.hpp"

namespace diqkd::io {

// "%.9g" rendering used for every floating-point cell and summary line.
std::string format_double(double x);

// Run metadata written at the top of every output: tool name and version,
// the subcommand, and the effective settings in insertion order.
class Provenance {
 public:
  explicit Provenance(std::string command);

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value);
  void add(const std::string& key, double value);
  void add(const std::string& key, int value);
  void add(const std::string& key, std::uint64_t value);

  const std::string& command() const { return command_; }
  const std::vector<std::pair<std::string, std::string>>& settings() const {
    return settings_;
  }

  // "# key=value" lines for CSV files and terminal output.
  std::string comment_block() const;

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> settings_;
};

// A rendered table: cells are final strings; numeric columns are emitted
// unquoted in JSON.
struct Table {
  struct Column {
    std::string name;
    bool numeric = true;
  };
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const Provenance& prov, const Table& table);
// {"provenance": {...}, "rows": [{column: value, ...}, ...]}
void write_json(std::ostream& out, const Provenance& prov, const Table& table);

// Table builders.  Gap and slack columns carry the certification metadata
// of the underlying dual certificates.
Table curve_table(const bound::BoundCurve& curve);
Table grid_table(const keyrate::FeasibilityGrid& grid);
Table contour_table(const keyrate::FeasibilityGrid& grid);
Table region_bounds_table(const bound::UncertaintyRegion& region);
Table region_boundary_table(const bound::UncertaintyRegion& region);
Table experiments_table(const std::vector<keyrate::ExperimentResult>& results);
Table transcript_table(const std::vector<protocol::RoundRecord>& rounds);

// Largest duality gap and charged slack among a curve's reported points;
// attached to rows derived from envelope evaluations.
std::pair<double, double> curve_certification(const bound::BoundCurve& curve);

// Protocol result as a JSON document (all result fields; keys as 0/1
// strings).
std::string result_json(const Provenance& prov,
                        const protocol::ProtocolResult& result);

// experiments.csv ingestion: header `label,year,S,qber,source` required.
// Malformed rows are reported in rowErrors ("line N: message") and skipped;
// valid rows load.  A file without data rows yields empty records plus a
// warning.  A missing or wrong header throws std::invalid_argument.
struct ExperimentLoad {
  std::vector<keyrate::ExperimentRecord> records;
  std::vector<std::string> rowErrors;
};

ExperimentLoad load_experiments(std::istream& in);
ExperimentLoad load_experiments_file(const std::string& path);

} // namespace diqkd::io
