#pragma once

#include <bit>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "enkf_lstm/errors.hpp"

namespace enkf_lstm::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are unsupported");

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? (std::ios::binary | std::ios::trunc) : std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

// Files with a one-line JSON header followed by a raw little-endian payload.
inline void write_json_header(std::ostream& out, const nlohmann::json& header) {
  out << header.dump() << '\n';
}

inline nlohmann::json read_json_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing header line: " + path);
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON header: " + path);
  return j;
}

inline void write_doubles(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::istream& in, double* data, std::size_t n, const std::string& path) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
    throw IoError("truncated binary payload: " + path);
}

// Shortest exact decimal form; used everywhere a double lands in text output
// so that reruns are byte-identical and values round-trip.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_i64(std::int64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%" PRId64, v);
  return buf;
}

// --- ISO 8601 UTC timestamps ("2013-04-15T14:49:00Z") ---

inline std::int64_t parse_iso8601(const std::string& s) {
  std::tm tm = {};
  int y, mo, d, h, mi, se;
  char sep;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se) != 7 ||
      (sep != 'T' && sep != ' '))
    throw DataError("cannot parse ISO 8601 timestamp: '" + s + "'");
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = se;
  return static_cast<std::int64_t>(timegm(&tm));
}

inline std::string format_iso8601(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm = {};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

// Split one CSV line on commas. The formats here never quote fields.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline double parse_double_field(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("cannot parse number '" + s + "' in " + context);
  }
}

inline std::int64_t parse_i64_field(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::int64_t>(v);
  } catch (const std::exception&) {
    throw DataError("cannot parse integer '" + s + "' in " + context);
  }
}

}  // namespace enkf_lstm::detail
