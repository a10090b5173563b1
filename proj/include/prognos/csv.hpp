#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prognos::csv {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("bad numeric field '" + s + "' in " + ctx);
  return v;
}

// Shortest round-trip decimal representation; stable across runs so emitted
// files are byte-identical for identical inputs.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file " + path);
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != t.header.size())
      throw DataError("row width mismatch in " + path + " near line " +
                      std::to_string(t.rows.size() + 2));
    t.rows.push_back(std::move(f));
  }
  return t;
}

inline void write_table(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (size_t j = 0; j < t.header.size(); ++j)
    out << (j ? "," : "") << t.header[j];
  out << "\n";
  for (const auto& r : t.rows) {
    for (size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
    out << "\n";
  }
}

}  // namespace prognos::csv
