#include "unirec/csv.hpp"

#include "unirec/errors.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace unirec {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].find_first_of(",\n") != std::string::npos) {
      throw ArgumentError("csv: field contains a separator: " + fields[i]);
    }
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

double parse_real(const std::string& s, const char* col) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError(std::string("csv: bad number in column ") + col + ": '" + s + "'");
  }
}

template <class T>
T parse_int(const std::string& s, const char* col) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ArgumentError(std::string("csv: bad integer in column ") + col + ": '" + s + "'");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> cols{
      "experiment_id", "setting",    "link",  "n",           "k",
      "m",             "trial",      "signal_id", "corruption", "corruption_param",
      "iters",         "final_error", "diverged", "seed",      "wall_ms"};
  return cols;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_provenance(std::ostream& out, const Provenance& prov) {
  for (const auto& [k, v] : prov.entries) out << "# " << k << ": " << v << '\n';
}

void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, const Provenance& prov) {
  write_provenance(out, prov);
  write_row(out, header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw ArgumentError("csv: row width differs from header");
    write_row(out, r);
  }
}

void write_trial_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                     const Provenance& prov) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    rows.push_back({r.experiment_id, r.setting, r.link, std::to_string(r.n), std::to_string(r.k),
                    std::to_string(r.m), std::to_string(r.trial), std::to_string(r.signal_id),
                    r.corruption, format_real(r.corruption_param), std::to_string(r.iters),
                    format_real(r.final_error), r.diverged ? "1" : "0", std::to_string(r.seed),
                    format_real(r.wall_ms)});
  }
  write_table(out, trial_columns(), rows, prov);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ArgumentError("csv: missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw ArgumentError("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                          std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ArgumentError("csv: missing header row");
  return t;
}

std::vector<TrialRecord> read_trial_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  if (t.header != trial_columns()) throw ArgumentError("csv: header does not match sweep columns");
  std::vector<TrialRecord> out;
  for (const auto& f : t.rows) {
    TrialRecord r;
    r.experiment_id = f[0];
    r.setting = f[1];
    r.link = f[2];
    r.n = parse_int<Eigen::Index>(f[3], "n");
    r.k = parse_int<Eigen::Index>(f[4], "k");
    r.m = parse_int<Eigen::Index>(f[5], "m");
    r.trial = parse_int<int>(f[6], "trial");
    r.signal_id = parse_int<int>(f[7], "signal_id");
    r.corruption = f[8];
    r.corruption_param = parse_real(f[9], "corruption_param");
    r.iters = parse_int<int>(f[10], "iters");
    r.final_error = parse_real(f[11], "final_error");
    if (f[12] != "0" && f[12] != "1") throw ArgumentError("csv: diverged must be 0 or 1");
    r.diverged = f[12] == "1";
    r.seed = parse_int<std::uint64_t>(f[13], "seed");
    r.wall_ms = parse_real(f[14], "wall_ms");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace unirec
