#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "loadsim/error.hpp"
#include "loadsim/sim.hpp"

namespace loadsim::csv {

// Shortest round-trip decimal form via to_chars: locale-free and
// deterministic, so repeated runs produce byte-identical files.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_trace(std::ostream& os, const Trace& trace) {
  os << "t";
  for (const auto& c : trace.columns) os << ',' << c;
  os << '\n';
  for (const auto& row : trace.rows) {
    os << format_double(row.t);
    for (double v : row.values) os << ',' << format_double(v);
    os << '\n';
  }
}

inline void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SpecError(path, "cannot open for writing");
  write_trace(os, trace);
}

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Numeric CSV with a mandatory header row. Lines starting with '#' are
// ignored.
inline CsvData read_numeric_csv(std::istream& is, std::size_t expect_cols,
                                const std::string& what) {
  CsvData data;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (!have_header) {
      bool all_numeric = true;
      while (std::getline(ss, cell, ',')) {
        data.header.push_back(cell);
        double dummy = 0.0;
        const char* b = cell.data();
        auto res = std::from_chars(b, b + cell.size(), dummy);
        if (res.ec != std::errc() || res.ptr != b + cell.size()) all_numeric = false;
      }
      if (all_numeric && !data.header.empty())
        throw SpecError(what, "missing header row (first line is numeric)");
      if (data.header.size() != expect_cols)
        throw SpecError(what, "expected " + std::to_string(expect_cols) + " columns in header");
      have_header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* b = cell.data();
      const char* e = b + cell.size();
      while (b < e && (*b == ' ' || *b == '\t')) ++b;
      auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc())
        throw SpecError(what, "bad number '" + cell + "' at line " + std::to_string(lineno));
      row.push_back(v);
    }
    if (row.size() != expect_cols)
      throw SpecError(what, "expected " + std::to_string(expect_cols) + " columns at line " +
                                std::to_string(lineno));
    data.rows.push_back(std::move(row));
  }
  if (!have_header) throw SpecError(what, "missing header row");
  return data;
}

inline CsvData read_numeric_csv_file(const std::string& path, std::size_t expect_cols) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SpecError(path, "cannot open");
  return read_numeric_csv(is, expect_cols, path);
}

}  // namespace loadsim::csv
