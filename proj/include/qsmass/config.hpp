#pragma once

// Run configuration. Files are either JSON or a TOML subset:
//   [table] / [table.sub] headers, key = value pairs, # comments,
//   values: numbers, "strings", 'literal strings', true/false, and
//   (nested, possibly multi-line) arrays.
// Both parse into the same JSON tree, which is then validated into a
// RunConfig. Relative file paths resolve against the config's directory.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsmass/errors.hpp"
#include "qsmass/io.hpp"
#include "qsmass/sphere_grid.hpp"

namespace qsmass {

namespace detail {

class TomlParser {
 public:
  TomlParser(const std::string& text, std::string name) : s_(text), name_(std::move(name)) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        ++i_;
        if (!eof() && peek() == '[') fail("arrays of tables are not supported");
        std::vector<std::string> path;
        do {
          skip_inline_ws();
          path.push_back(parse_key());
          skip_inline_ws();
        } while (consume('.'));
        expect(']');
        table = &root;
        for (const auto& k : path) {
          if (!table->contains(k)) (*table)[k] = Json::object();
          table = &(*table)[k];
          if (!table->is_object()) fail("'" + k + "' is not a table");
        }
        end_of_line();
        continue;
      }
      std::vector<std::string> path;
      do {
        skip_inline_ws();
        path.push_back(parse_key());
        skip_inline_ws();
      } while (consume('.'));
      expect('=');
      skip_inline_ws();
      Json value = parse_value();
      Json* target = table;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        if (!target->contains(path[k])) (*target)[path[k]] = Json::object();
        target = &(*target)[path[k]];
      }
      if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
      (*target)[path.back()] = std::move(value);
      end_of_line();
    }
    return root;
  }

 private:
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }
  bool consume(char c) {
    if (!eof() && peek() == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1;
    for (std::size_t k = 0; k < i_ && k < s_.size(); ++k)
      if (s_[k] == '\n') ++line;
    throw ConfigurationError(name_ + ":" + std::to_string(line) + ": " + msg);
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++i_;
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') ++i_;
      else if (c == '#') skip_comment();
      else break;
    }
  }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++i_;
    if (!consume('\n')) fail("unexpected trailing characters");
  }

  std::string parse_key() {
    if (!eof() && (peek() == '"' || peek() == '\'')) return parse_string();
    const std::size_t start = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++i_;
    if (i_ == start) fail("expected a key");
    return s_.substr(start, i_ - start);
  }

  std::string parse_string() {
    const char q = peek();
    ++i_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[i_++];
      if (c == q) break;
      if (c == '\\' && q == '"') {
        if (eof()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Json parse_value() {
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      ++i_;
      Json arr = Json::array();
      while (true) {
        skip_ws_comments_newlines();
        if (consume(']')) break;
        arr.push_back(parse_value());
        skip_ws_comments_newlines();
        if (consume(',')) continue;
        expect(']');
        break;
      }
      return arr;
    }
    if (s_.compare(i_, 4, "true") == 0) {
      i_ += 4;
      return true;
    }
    if (s_.compare(i_, 5, "false") == 0) {
      i_ += 5;
      return false;
    }
    const std::size_t start = i_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++i_;
    std::string tok = s_.substr(start, i_ - start);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "+inf" ||
                          tok == "-inf" || tok == "nan";
    try {
      std::size_t pos = 0;
      if (is_float) {
        const double v = std::stod(tok, &pos);
        if (pos == tok.size()) return v;
      } else {
        const long long v = std::stoll(tok, &pos);
        if (pos == tok.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  const std::string& s_;
  std::string name_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline Json parse_toml(const std::string& text, const std::string& name = "<toml>") {
  return detail::TomlParser(text, name).parse();
}

/// Loads JSON (by .json extension) or the TOML subset.
inline Json load_config_tree(const std::string& path) {
  const std::string text = read_text_file(path);
  if (std::filesystem::path(path).extension() == ".json") {
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigurationError(path + ": " + e.what());
    }
  }
  return parse_toml(text, path);
}

// ---------------------------------------------------------------------------

/// A scalar field given by harmonics or by a grid file.
struct FieldSpec {
  enum class Kind { Harmonics, GridFile, HarmonicsFile } kind = Kind::Harmonics;
  std::vector<HarmonicTerm> harmonics;
  std::string file;

  ScalarField build(const GridPtr& g) const {
    switch (kind) {
      case Kind::Harmonics: return field_from_harmonics(g, harmonics);
      case Kind::HarmonicsFile: return field_from_harmonics(g, read_harmonics_csv(file));
      case Kind::GridFile: return read_field_csv(g, file);
    }
    return ScalarField(g, 0.0);
  }
};

struct RunConfig {
  std::string source;  ///< path of the config file

  enum class MetricKind { Phi, KTarget } metric_kind = MetricKind::Phi;
  FieldSpec metric_field;  ///< phi or the target curvature
  double r = 1.0;          ///< only for phi input

  enum class HKind { Constant, Field } h_kind = HKind::Constant;
  double h_constant = 2.0;
  FieldSpec h_field;

  int band_limit = 8;
  int path_nodes = 17;
  double gauge_tol = 1e-8;
  double uniformization_tol = 1e-10;
  int uniformization_max_iter = 50;

  std::string family = "all";
  int budget = 200;

  double s_max = 1000.0;
  double step_tol = 1e-8;

  std::string report_path;  ///< empty: stdout
  std::string series_path;  ///< empty: none
};

namespace detail {

inline const Json* child(const Json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double get_number(const Json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigurationError(what + " must be a number");
  return v.get<double>();
}

inline int get_int(const Json& v, const std::string& what) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 1e9) return static_cast<int>(d);
  }
  throw ConfigurationError(what + " must be an integer");
}

inline std::string get_string(const Json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigurationError(what + " must be a string");
  return v.get<std::string>();
}

inline std::vector<HarmonicTerm> get_harmonics(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigurationError(what + " must be a list of [l, m, re, im]");
  std::vector<HarmonicTerm> out;
  for (const auto& e : v) {
    if (!e.is_array() || (e.size() != 3 && e.size() != 4))
      throw ConfigurationError(what + " entries must be [l, m, re] or [l, m, re, im]");
    HarmonicTerm t;
    t.l = get_int(e[0], what + " l");
    t.m = get_int(e[1], what + " m");
    t.re = get_number(e[2], what + " re");
    t.im = e.size() == 4 ? get_number(e[3], what + " im") : 0.0;
    out.push_back(t);
  }
  return out;
}

inline void reject_unknown(const Json& table, std::initializer_list<const char*> known, const std::string& name) {
  if (!table.is_object()) throw ConfigurationError("[" + name + "] must be a table");
  for (auto it = table.begin(); it != table.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigurationError("unknown key '" + it.key() + "' in [" + name + "]");
  }
}

inline std::string resolve_path(const std::string& base, const std::string& p) {
  namespace fs = std::filesystem;
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (fs::path(base).parent_path() / p).lexically_normal().string();
}

}  // namespace detail

/// Validates a parsed tree. `source` is used for relative paths and messages.
inline RunConfig config_from_tree(const Json& root, const std::string& source = "") {
  using namespace detail;
  RunConfig c;
  c.source = source;
  if (!root.is_object()) throw ConfigurationError("configuration must be a table");
  reject_unknown(root, {"metric", "H", "numerics", "reparam", "extension", "output"}, "root");

  const Json* metric = child(root, "metric");
  if (!metric) throw ConfigurationError("missing [metric] table");
  reject_unknown(*metric, {"phi_harmonics", "phi_harmonics_file", "phi_grid_file", "K_target", "K_target_file",
                           "K_target_grid_file", "r"},
                 "metric");
  int nspec = 0;
  if (const Json* v = child(*metric, "phi_harmonics")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::Phi;
    c.metric_field = {FieldSpec::Kind::Harmonics, get_harmonics(*v, "metric.phi_harmonics"), ""};
  }
  if (const Json* v = child(*metric, "phi_harmonics_file")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::Phi;
    c.metric_field = {FieldSpec::Kind::HarmonicsFile, {}, resolve_path(source, get_string(*v, "metric.phi_harmonics_file"))};
  }
  if (const Json* v = child(*metric, "phi_grid_file")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::Phi;
    c.metric_field = {FieldSpec::Kind::GridFile, {}, resolve_path(source, get_string(*v, "metric.phi_grid_file"))};
  }
  if (const Json* v = child(*metric, "K_target")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::KTarget;
    c.metric_field = {FieldSpec::Kind::Harmonics, get_harmonics(*v, "metric.K_target"), ""};
  }
  if (const Json* v = child(*metric, "K_target_file")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::KTarget;
    c.metric_field = {FieldSpec::Kind::HarmonicsFile, {}, resolve_path(source, get_string(*v, "metric.K_target_file"))};
  }
  if (const Json* v = child(*metric, "K_target_grid_file")) {
    ++nspec;
    c.metric_kind = RunConfig::MetricKind::KTarget;
    c.metric_field = {FieldSpec::Kind::GridFile, {}, resolve_path(source, get_string(*v, "metric.K_target_grid_file"))};
  }
  if (nspec != 1)
    throw ConfigurationError("[metric] needs exactly one of phi_harmonics, phi_harmonics_file, phi_grid_file, "
                             "K_target, K_target_file, K_target_grid_file");
  if (const Json* v = child(*metric, "r")) {
    if (c.metric_kind == RunConfig::MetricKind::KTarget)
      throw ConfigurationError("metric.r is fixed by K_target and must not be given");
    c.r = get_number(*v, "metric.r");
    if (!(c.r > 0.0) || !std::isfinite(c.r)) throw ConfigurationError("metric.r must be positive");
  }

  const Json* H = child(root, "H");
  if (!H) throw ConfigurationError("missing [H] table");
  reject_unknown(*H, {"constant", "harmonics", "harmonics_file", "grid_file"}, "H");
  int hspec = 0;
  if (const Json* v = child(*H, "constant")) {
    ++hspec;
    c.h_kind = RunConfig::HKind::Constant;
    c.h_constant = get_number(*v, "H.constant");
  }
  if (const Json* v = child(*H, "harmonics")) {
    ++hspec;
    c.h_kind = RunConfig::HKind::Field;
    c.h_field = {FieldSpec::Kind::Harmonics, get_harmonics(*v, "H.harmonics"), ""};
  }
  if (const Json* v = child(*H, "harmonics_file")) {
    ++hspec;
    c.h_kind = RunConfig::HKind::Field;
    c.h_field = {FieldSpec::Kind::HarmonicsFile, {}, resolve_path(source, get_string(*v, "H.harmonics_file"))};
  }
  if (const Json* v = child(*H, "grid_file")) {
    ++hspec;
    c.h_kind = RunConfig::HKind::Field;
    c.h_field = {FieldSpec::Kind::GridFile, {}, resolve_path(source, get_string(*v, "H.grid_file"))};
  }
  if (hspec != 1) throw ConfigurationError("[H] needs exactly one of constant, harmonics, harmonics_file, grid_file");

  if (const Json* n = child(root, "numerics")) {
    reject_unknown(*n, {"band_limit", "path_nodes", "gauge_tol", "uniformization_tol", "uniformization_max_iter"},
                   "numerics");
    if (const Json* v = child(*n, "band_limit")) c.band_limit = get_int(*v, "numerics.band_limit");
    if (const Json* v = child(*n, "path_nodes")) c.path_nodes = get_int(*v, "numerics.path_nodes");
    if (const Json* v = child(*n, "gauge_tol")) c.gauge_tol = get_number(*v, "numerics.gauge_tol");
    if (const Json* v = child(*n, "uniformization_tol")) c.uniformization_tol = get_number(*v, "numerics.uniformization_tol");
    if (const Json* v = child(*n, "uniformization_max_iter"))
      c.uniformization_max_iter = get_int(*v, "numerics.uniformization_max_iter");
  }
  if (const Json* rp = child(root, "reparam")) {
    reject_unknown(*rp, {"family", "budget"}, "reparam");
    if (const Json* v = child(*rp, "family")) c.family = get_string(*v, "reparam.family");
    if (const Json* v = child(*rp, "budget")) c.budget = get_int(*v, "reparam.budget");
  }
  if (const Json* ex = child(root, "extension")) {
    reject_unknown(*ex, {"s_max", "step_tol"}, "extension");
    if (const Json* v = child(*ex, "s_max")) c.s_max = get_number(*v, "extension.s_max");
    if (const Json* v = child(*ex, "step_tol")) c.step_tol = get_number(*v, "extension.step_tol");
  }
  if (const Json* out = child(root, "output")) {
    reject_unknown(*out, {"report", "series"}, "output");
    if (const Json* v = child(*out, "report")) c.report_path = resolve_path(source, get_string(*v, "output.report"));
    if (const Json* v = child(*out, "series")) c.series_path = resolve_path(source, get_string(*v, "output.series"));
  }

  if (c.band_limit < SphereGrid::kMinBandLimit || c.band_limit > 64)
    throw ConfigurationError("numerics.band_limit must lie in [4, 64]");
  if (c.path_nodes < 9 || c.path_nodes > 129) throw ConfigurationError("numerics.path_nodes must lie in [9, 129]");
  if (!(c.gauge_tol > 0.0) || !(c.uniformization_tol > 0.0) || !(c.step_tol > 0.0))
    throw ConfigurationError("tolerances must be positive");
  if (c.uniformization_max_iter < 1) throw ConfigurationError("numerics.uniformization_max_iter must be >= 1");
  if (c.family != "all" && c.family != "ode_sqrt" && c.family != "affine_density" && c.family != "piecewise_linear")
    throw ConfigurationError("reparam.family must be all, ode_sqrt, affine_density or piecewise_linear");
  if (c.budget < 4 || c.budget > 100000) throw ConfigurationError("reparam.budget must lie in [4, 100000]");
  if (!(c.s_max >= 100.0) || !std::isfinite(c.s_max)) throw ConfigurationError("extension.s_max must be >= 100");
  return c;
}

inline RunConfig load_config(const std::string& path) { return config_from_tree(load_config_tree(path), path); }

/// Fully resolved configuration, for provenance in reports.
inline Json config_to_json(const RunConfig& c) {
  auto field_json = [](const FieldSpec& f) {
    Json j = Json::object();
    switch (f.kind) {
      case FieldSpec::Kind::Harmonics: {
        Json arr = Json::array();
        for (const auto& t : f.harmonics) arr.push_back(Json::array({t.l, t.m, t.re, t.im}));
        j["harmonics"] = arr;
        break;
      }
      case FieldSpec::Kind::HarmonicsFile: j["harmonics_file"] = f.file; break;
      case FieldSpec::Kind::GridFile: j["grid_file"] = f.file; break;
    }
    return j;
  };
  Json j = Json::object();
  j["source"] = c.source;
  Json m = Json::object();
  m["kind"] = c.metric_kind == RunConfig::MetricKind::Phi ? "phi" : "K_target";
  m["field"] = field_json(c.metric_field);
  if (c.metric_kind == RunConfig::MetricKind::Phi) m["r"] = c.r;
  j["metric"] = m;
  Json h = Json::object();
  if (c.h_kind == RunConfig::HKind::Constant) h["constant"] = c.h_constant;
  else h["field"] = field_json(c.h_field);
  j["H"] = h;
  j["numerics"] = {{"band_limit", c.band_limit},
                   {"path_nodes", c.path_nodes},
                   {"gauge_tol", c.gauge_tol},
                   {"uniformization_tol", c.uniformization_tol},
                   {"uniformization_max_iter", c.uniformization_max_iter}};
  j["reparam"] = {{"family", c.family}, {"budget", c.budget}};
  j["extension"] = {{"s_max", c.s_max}, {"step_tol", c.step_tol}};
  return j;
}

}  // namespace qsmass
