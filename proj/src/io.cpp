#include "diqkd/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "diqkd/version.hpp"

namespace diqkd::io {

namespace {

// CSV fields are quoted only when needed, so numeric cells stay bare.
std::string csv_escape(const std::string& field) {
  const bool needsQuotes =
      field.find_first_of(",\"\n\r") != std::string::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needsQuotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string json_escape(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
  return out;
}

std::string fate_name(protocol::RoundFate fate) {
  switch (fate) {
    case protocol::RoundFate::key: return "key";
    case protocol::RoundFate::test: return "test";
    default: return "discarded";
  }
}

std::string bits_string(const std::vector<std::uint8_t>& bits) {
  std::string out;
  out.reserve(bits.size());
  for (std::uint8_t b : bits) out += b ? '1' : '0';
  return out;
}

// Splits one CSV line into fields, honouring double-quote escaping.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_double(const std::string& s, double* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

bool parse_int(const std::string& s, int* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) return false;
  *out = static_cast<int>(v);
  return true;
}

} // namespace

std::string format_double(double x) {
  if (x == 0.0) return "0";  // fold the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

Provenance::Provenance(std::string command) : command_(std::move(command)) {}

void Provenance::add(const std::string& key, const std::string& value) {
  settings_.emplace_back(key, value);
}
void Provenance::add(const std::string& key, const char* value) {
  settings_.emplace_back(key, std::string(value));
}
void Provenance::add(const std::string& key, double value) {
  settings_.emplace_back(key, format_double(value));
}
void Provenance::add(const std::string& key, int value) {
  settings_.emplace_back(key, std::to_string(value));
}
void Provenance::add(const std::string& key, std::uint64_t value) {
  settings_.emplace_back(key, std::to_string(value));
}

std::string Provenance::comment_block() const {
  std::string out;
  out += "# tool=";
  out += kToolName;
  out += " ";
  out += kToolVersion;
  out += "\n# command=";
  out += command_;
  out += "\n";
  for (const auto& [k, v] : settings_) {
    out += "# ";
    out += k;
    out += "=";
    out += v;
    out += "\n";
  }
  return out;
}

void write_csv(std::ostream& out, const Provenance& prov, const Table& table) {
  out << prov.comment_block();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << csv_escape(table.columns[c].name);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << csv_escape(row[c]);
    }
    out << '\n';
  }
}

void write_json(std::ostream& out, const Provenance& prov, const Table& table) {
  out << "{\n  \"provenance\": {\n    \"tool\": " << json_escape(kToolName)
      << ",\n    \"version\": " << json_escape(kToolVersion)
      << ",\n    \"command\": " << json_escape(prov.command());
  for (const auto& [k, v] : prov.settings())
    out << ",\n    " << json_escape(k) << ": " << json_escape(v);
  out << "\n  },\n  \"rows\": [";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << (r ? ",\n    {" : "\n    {");
    const auto& row = table.rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ", ";
      out << json_escape(table.columns[c].name) << ": ";
      if (table.columns[c].numeric)
        out << row[c];
      else
        out << json_escape(row[c]);
    }
    out << "}";
  }
  out << "\n  ]\n}\n";
}

Table curve_table(const bound::BoundCurve& curve) {
  Table t;
  t.columns = {{"s", true},      {"t_star", true}, {"c_qubit", true},
               {"c_hull", true}, {"slack", true},  {"gap", true}};
  for (const auto& p : curve.points)
    t.rows.push_back({format_double(p.s), format_double(p.tStar),
                      format_double(p.cQubit), format_double(curve.value(p.s)),
                      format_double(p.slackUsed),
                      format_double(p.certificate.gap)});
  return t;
}

Table grid_table(const keyrate::FeasibilityGrid& grid) {
  Table t;
  t.columns = {{"S", true},
               {"qber", true},
               {"best_lambda", true},
               {"key_rate", true},
               {"status", false}};
  const std::size_t sCount = grid.sValues.size();
  for (std::size_t iq = 0; iq < grid.qValues.size(); ++iq)
    for (std::size_t is = 0; is < sCount; ++is) {
      const std::size_t k = iq * sCount + is;
      t.rows.push_back({format_double(grid.sValues[is]),
                        format_double(grid.qValues[iq]),
                        format_double(grid.bestLambda[k]),
                        format_double(grid.rate[k]), "ok"});
    }
  return t;
}

Table contour_table(const keyrate::FeasibilityGrid& grid) {
  Table t;
  t.columns = {{"S", true}, {"qber", true}};
  for (const auto& [s, q] : grid.zeroContour)
    t.rows.push_back({format_double(s), format_double(q)});
  return t;
}

Table region_bounds_table(const bound::UncertaintyRegion& region) {
  Table t;
  t.columns = {{"lambda", true}, {"c_bound", true}};
  for (std::size_t i = 0; i < region.lambdas.size(); ++i)
    t.rows.push_back(
        {format_double(region.lambdas[i]), format_double(region.bounds[i])});
  return t;
}

Table region_boundary_table(const bound::UncertaintyRegion& region) {
  Table t;
  t.columns = {{"h_a0", true}, {"h_a1", true}};
  for (const auto& [x, y] : region.boundary)
    t.rows.push_back({format_double(x), format_double(y)});
  return t;
}

Table experiments_table(const std::vector<keyrate::ExperimentResult>& results) {
  Table t;
  t.columns = {{"label", false},       {"year", true},
               {"S", true},            {"qber", true},
               {"source", false},      {"best_lambda", true},
               {"key_rate", true}};
  for (const auto& r : results)
    t.rows.push_back({r.record.label, std::to_string(r.record.year),
                      format_double(r.record.s), format_double(r.record.qber),
                      r.record.source, format_double(r.choice.lambda),
                      format_double(r.rate)});
  return t;
}

Table transcript_table(const std::vector<protocol::RoundRecord>& rounds) {
  Table t;
  t.columns = {{"round", true}, {"x", true}, {"y", true},
               {"a", true},     {"b", true}, {"kept_as", false}};
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& r = rounds[i];
    t.rows.push_back({std::to_string(i), std::to_string(r.x),
                      std::to_string(r.y), std::to_string(r.a),
                      std::to_string(r.b), fate_name(r.fate)});
  }
  return t;
}

std::pair<double, double> curve_certification(const bound::BoundCurve& curve) {
  double maxGap = 0.0, maxSlack = 0.0;
  for (const auto& p : curve.points) {
    maxGap = std::max(maxGap, p.certificate.gap);
    maxSlack = std::max(maxSlack, p.slackUsed);
  }
  return {maxGap, maxSlack};
}

std::string result_json(const Provenance& prov,
                        const protocol::ProtocolResult& result) {
  std::ostringstream out;
  out << "{\n  \"provenance\": {\n    \"tool\": " << json_escape(kToolName)
      << ",\n    \"version\": " << json_escape(kToolVersion)
      << ",\n    \"command\": " << json_escape(prov.command());
  for (const auto& [k, v] : prov.settings())
    out << ",\n    " << json_escape(k) << ": " << json_escape(v);
  out << "\n  },\n  \"result\": {\n";
  out << "    \"aborted\": " << (result.aborted ? "true" : "false") << ",\n";
  out << "    \"abort_reason\": " << json_escape(result.abortReason) << ",\n";
  out << "    \"raw_key_length\": " << result.rawKeyLength << ",\n";
  out << "    \"pe_count\": " << result.peCount << ",\n";
  out << "    \"s_hat\": " << format_double(result.sHat) << ",\n";
  out << "    \"leak_ec\": " << result.leakEc << ",\n";
  out << "    \"qhat00\": " << format_double(result.qhat00) << ",\n";
  out << "    \"qhat11\": " << format_double(result.qhat11) << ",\n";
  out << "    \"lambda_hat\": " << format_double(result.lambdaHat) << ",\n";
  out << "    \"c_star_at_tol\": " << format_double(result.cStarAtTol)
      << ",\n";
  out << "    \"final_key_length\": " << result.finalKeyA.size() << ",\n";
  out << "    \"final_key_a\": " << json_escape(bits_string(result.finalKeyA))
      << ",\n";
  out << "    \"final_key_b\": " << json_escape(bits_string(result.finalKeyB))
      << ",\n";
  out << "    \"empirical_rate\": " << format_double(result.empiricalRate)
      << "\n  }\n}\n";
  return out.str();
}

ExperimentLoad load_experiments(std::istream& in) {
  ExperimentLoad load;
  std::string line;
  int lineNo = 0;
  bool sawHeader = false;
  bool sawData = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineNo == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
    if (trim(line).empty() || line[0] == '#') continue;
    if (!sawHeader) {
      if (trim(line) != "label,year,S,qber,source")
        throw std::invalid_argument(
            "experiments file: missing or malformed header (expected "
            "label,year,S,qber,source)");
      sawHeader = true;
      continue;
    }
    sawData = true;
    const auto fields = split_csv_line(line);
    const std::string where = "line " + std::to_string(lineNo) + ": ";
    if (fields.size() != 5) {
      load.rowErrors.push_back(where + "expected 5 fields, got " +
                               std::to_string(fields.size()));
      continue;
    }
    keyrate::ExperimentRecord rec;
    rec.label = trim(fields[0]);
    rec.source = trim(fields[4]);
    if (!parse_int(fields[1], &rec.year)) {
      load.rowErrors.push_back(where + "year is not an integer");
      continue;
    }
    if (!parse_double(fields[2], &rec.s)) {
      load.rowErrors.push_back(where + "S is not a number");
      continue;
    }
    if (!parse_double(fields[3], &rec.qber)) {
      load.rowErrors.push_back(where + "qber is not a number");
      continue;
    }
    if (rec.s < 2.0 || rec.s > quantum::kTsirelson + 1e-9) {
      load.rowErrors.push_back(where + "S out of [2, 2*sqrt(2)]");
      continue;
    }
    rec.s = std::min(rec.s, quantum::kTsirelson);
    if (rec.qber < 0.0 || rec.qber > 0.5) {
      load.rowErrors.push_back(where + "qber out of [0, 0.5]");
      continue;
    }
    load.records.push_back(std::move(rec));
  }
  // A malformed header throws inside the loop, so reaching here without one
  // means the file had no content lines at all.
  if (!sawHeader)
    load.rowErrors.push_back("warning: empty file");
  else if (!sawData)
    load.rowErrors.push_back("warning: no data rows");
  return load;
}

ExperimentLoad load_experiments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open experiments file: " + path);
  return load_experiments(in);
}

} // namespace diqkd::io
