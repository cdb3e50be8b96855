#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "series.hpp"

namespace llpb {

/// Shortest text that parses back to the same double, at most 17 significant
/// digits. Non-finite values print as nan / inf / -inf.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return x;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Keys that vary between equivalent runs and stay out of the hash.
inline const std::vector<std::string>& manifest_volatile_keys() {
  static const std::vector<std::string> keys = {"timestamp", "threads", "out_dir"};
  return keys;
}

/// Hash of the canonical (sorted-key, compact) manifest without volatile keys.
inline std::string manifest_hash(nlohmann::json manifest) {
  for (const auto& k : manifest_volatile_keys()) manifest.erase(k);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(manifest.dump())));
  return buf;
}

inline constexpr const char* kHashPrefix = "# manifest_hash=";

struct CsvTable {
  std::string manifest_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  if (!t.manifest_hash.empty()) out << kHashPrefix << t.manifest_hash << '\n';
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  if (!out) throw Error("write failed: " + path);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(kHashPrefix, 0) == 0) {
      t.manifest_hash = line.substr(std::string(kHashPrefix).size());
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw InvalidArgument(path + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw InvalidArgument(path + ": missing header");
  return t;
}

// tau,g2,stderr -----------------------------------------------------------

inline CsvTable series_table(const CorrelationSeries& s, const std::string& hash) {
  CsvTable t{hash, {"tau", "g2", "stderr"}, {}};
  for (std::size_t k = 0; k < s.size(); ++k)
    t.rows.push_back({format_double(s.tau[k]), format_double(s.values[k]),
                      s.has_errors() ? format_double(s.std_errors[k]) : std::string()});
  return t;
}

inline void write_series_csv(const std::string& path, const CorrelationSeries& s, const std::string& hash = {}) {
  write_csv(path, series_table(s, hash));
}

inline CorrelationSeries read_series_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"tau", "g2", "stderr"})
    throw InvalidArgument(path + ": expected header tau,g2,stderr");
  CorrelationSeries s;
  bool any_err = false, all_err = true;
  std::vector<double> errs;
  for (const auto& r : t.rows) {
    s.tau.push_back(parse_double(r[0]));
    s.values.push_back(parse_double(r[1]));
    if (r[2].empty()) {
      all_err = false;
      errs.push_back(0.0);
    } else {
      any_err = true;
      errs.push_back(parse_double(r[2]));
    }
  }
  if (any_err && !all_err) throw InvalidArgument(path + ": stderr column is partially filled");
  if (any_err) s.std_errors = std::move(errs);
  s.metadata["manifest_hash"] = t.manifest_hash;
  s.status = std::all_of(s.values.begin(), s.values.end(), [](double v) { return std::isfinite(v); })
                 ? SeriesStatus::ok
                 : SeriesStatus::diverging_denominator;
  s.validate();
  return s;
}

}  // namespace llpb
