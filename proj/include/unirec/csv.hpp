#pragma once

#include "unirec/experiments.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace unirec {

/// Column order of sweep output.
const std::vector<std::string>& trial_columns();

/// "# key: value" comment lines written before the header row.
struct Provenance {
  std::vector<std::pair<std::string, std::string>> entries;
  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
};

/// printf("%.9g").
std::string format_real(double v);

void write_provenance(std::ostream& out, const Provenance& prov);
void write_trial_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                     const Provenance& prov);

/// Parsed CSV: comment lines, header, rows of raw fields.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws ArgumentError when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

/// Reads sweep output, checking the exact column order.
std::vector<TrialRecord> read_trial_csv(std::istream& in);

/// Generic writer for derived tables.
void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, const Provenance& prov);

}  // namespace unirec
