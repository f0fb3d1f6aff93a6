#ifndef BMMIX_CSV_HPP
#define BMMIX_CSV_HPP

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bmmix/common.hpp"

namespace bmmix {

// Minimal CSV support for the plain numeric tables this project reads and
// writes: comma separated, first row is the header, no quoting or escapes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t require_column(const std::string& name, const std::string& path) const {
    const auto idx = find(name);
    if (!idx) throw parse_error(path + ": missing required column '" + name + "'");
    return *idx;
  }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}
}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open file");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw parse_error(path + ": row " + std::to_string(lineno) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw parse_error(path + ": empty file (no header row)");
  return t;
}

// strtod with full-token validation; the row number makes parse failures
// actionable.
inline double parse_double(const std::string& s, const std::string& path, std::size_t row) {
  if (s.empty())
    throw parse_error(path + ": row " + std::to_string(row) + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw parse_error(path + ": row " + std::to_string(row) + ": malformed number '" + s + "'");
  if (!std::isfinite(v))
    throw parse_error(path + ": row " + std::to_string(row) + ": non-finite value '" + s + "'");
  return v;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw error("cannot open for writing: " + path);
    out_.precision(17);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }
  void header(const std::vector<std::string>& fields) { row(fields); }
  void numeric_row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) out_ << ',';
      out_ << fmt(vals[i]);
    }
    out_ << '\n';
  }
  template <typename... Ts>
  void numeric_row(Ts... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fmt(vals), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string fmt(const std::string& s) { return s; }
  static std::string fmt(const char* s) { return s; }
  static std::string fmt(long v) { return std::to_string(v); }
  static std::string fmt(int v) { return std::to_string(v); }
  static std::string fmt(std::size_t v) { return std::to_string(v); }
  std::ofstream out_;
};

}  // namespace bmmix

#endif  // BMMIX_CSV_HPP
