#pragma once

// Report and field serialization.
//
// JSON numbers are written with 17 significant digits so that parsing a
// report recovers every double bit for bit; integral-valued doubles keep a
// trailing ".0" to stay floats.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsmass/errors.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad_end(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent, depth + 1);
      }
      os << "\n" << pad_end << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          write_json(os, j[i], indent, depth + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(os, j[i], indent, depth + 1);
      }
      os << "\n" << pad_end << "]";
      return;
    }
    case Json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// Pretty JSON with stable key order and 17-digit floats.
inline std::string to_json_text(const Json& j) {
  std::ostringstream os;
  detail::write_json(os, j, 2, 0);
  os << "\n";
  return os.str();
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_report(const Json& report, const std::string& path) { write_text_file(path, to_json_text(report)); }

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, std::vector<std::string>& header) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!have_header) {
      header = std::move(cells);
      have_header = true;
    } else {
      rows.push_back(std::move(cells));
    }
  }
  return rows;
}

inline double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigurationError("not a number '" + s + "' in " + where);
  }
}

}  // namespace detail

/// Field as rows `theta,lambda,value`, colatitude-major, 17 significant digits.
inline std::string field_to_csv(const ScalarField& f) {
  std::string out = "theta,lambda,value\n";
  const GridPtr& g = f.grid();
  for (std::size_t i = 0; i < g->size(); ++i)
    out += format_double(g->theta(i)) + "," + format_double(g->lambda(i)) + "," + format_double(f[i]) + "\n";
  return out;
}

inline void write_field_csv(const ScalarField& f, const std::string& path) { write_text_file(path, field_to_csv(f)); }

/// Reads a field written by write_field_csv; node coordinates must match `g`.
inline ScalarField read_field_csv(const GridPtr& g, const std::string& path) {
  std::vector<std::string> header;
  const auto rows = detail::read_csv_rows(path, header);
  if (header != std::vector<std::string>{"theta", "lambda", "value"})
    throw ConfigurationError("field file '" + path + "' must have header theta,lambda,value");
  if (rows.size() != g->size())
    throw ConfigurationError("field file '" + path + "' has " + std::to_string(rows.size()) + " rows, grid has " +
                             std::to_string(g->size()) + " nodes (band limit " + std::to_string(g->band_limit()) + ")");
  ScalarField f(g);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw ConfigurationError("field file '" + path + "': row " + std::to_string(i + 2) + " needs 3 cells");
    const double th = detail::parse_number(rows[i][0], path), la = detail::parse_number(rows[i][1], path);
    if (std::abs(th - g->theta(i)) > 1e-9 || std::abs(la - g->lambda(i)) > 1e-9)
      throw ConfigurationError("field file '" + path + "': row " + std::to_string(i + 2) +
                               " does not match the grid node ordering");
    f[i] = detail::parse_number(rows[i][2], path);
  }
  return f;
}

/// Harmonic list `l,m,re,im`.
inline std::vector<HarmonicTerm> read_harmonics_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = detail::read_csv_rows(path, header);
  if (header != std::vector<std::string>{"l", "m", "re", "im"})
    throw ConfigurationError("harmonic file '" + path + "' must have header l,m,re,im");
  std::vector<HarmonicTerm> out;
  for (const auto& r : rows) {
    if (r.size() != 4) throw ConfigurationError("harmonic file '" + path + "': rows need 4 cells");
    out.push_back({static_cast<int>(detail::parse_number(r[0], path)), static_cast<int>(detail::parse_number(r[1], path)),
                   detail::parse_number(r[2], path), detail::parse_number(r[3], path)});
  }
  return out;
}

}  // namespace qsmass
