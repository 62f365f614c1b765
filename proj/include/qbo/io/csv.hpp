#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qbo/error.hpp"
#include "qbo/experiments.hpp"

namespace qbo::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance block written at the top of every output file.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  ///< resolved, defaults included
  std::string version = kToolVersion;
  std::string timestamp;
  std::vector<std::uint64_t> seeds;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// 17 significant digits; reads back to the same double.
inline std::string format_value(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Shortest text that reads back to the same double.
inline std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_manifest(std::ostream& os, const RunManifest& m) {
  os << "# command: " << m.command << '\n';
  os << "# version: " << m.version << '\n';
  os << "# timestamp: " << m.timestamp << '\n';
  for (std::uint64_t s : m.seeds) os << "# seed: " << s << '\n';
  for (const auto& [k, v] : m.config) os << "# config: " << k << '=' << v << '\n';
}

inline void write_csv(std::ostream& os, const Dataset& d, const RunManifest& m) {
  write_manifest(os, m);
  if (!d.name.empty()) os << "# dataset: " << d.name << '\n';
  for (const auto& [k, v] : d.meta) os << "# meta: " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < d.columns.size(); ++i) os << (i ? "," : "") << d.columns[i];
  os << '\n';
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_value(row[i]);
    os << '\n';
  }
}

inline void emit_csv(const Dataset& d, const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_csv(out, d, m);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

/// Parsed CSV: manifest and meta lines, header and numeric rows.
struct CsvFile {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvFile read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  CsvFile f;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      f.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (f.columns.empty()) {
      f.columns = std::move(cells);
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} && c != "nan" && c != "-nan")
        throw Error(ErrorCode::Io, "bad number '" + c + "' in '" + path + "'");
      if (res.ec != std::errc{}) v = std::numeric_limits<double>::quiet_NaN();
      row.push_back(v);
    }
    f.rows.push_back(std::move(row));
  }
  return f;
}

}  // namespace qbo::io
