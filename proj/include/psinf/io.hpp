#pragma once

// File formats: numeric CSV tables, the JSON null-distribution cache, JSON
// results and scenario config documents. Floating-point output always uses
// 17 significant digits so doubles round-trip exactly.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "psinf/error.hpp"
#include "psinf/experiments.hpp"
#include "psinf/inference.hpp"
#include "psinf/linalg.hpp"
#include "psinf/nulldist.hpp"

namespace psinf::io {

using json = nlohmann::ordered_json;

inline constexpr int kCacheFormatVersion = 1;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  DataMatrix data;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_number(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": '" + std::string(cell) + "' is not a finite number");
  }
  return v;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace detail

/// Comma separated, header row first, '.' decimal point, no missing cells.
inline Table parse_csv(std::string_view text) {
  Table t;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    ++line_no;
    pos = eol + 1;
    if (line.empty()) continue;
    const auto cells = detail::split_commas(line);
    if (!have_header) {
      for (auto c : cells) t.header.push_back(detail::unquote(c));
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                             " cells, header has " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(detail::parse_number(c, line_no));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "CSV input is empty");
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

inline Table read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

inline std::string format_csv(const std::vector<std::string>& header, const DataMatrix& data) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ',';
    out += header[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out += ',';
      out += format_double(data(i, j));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> default_header(Eigen::Index p) {
  std::vector<std::string> h;
  for (Eigen::Index j = 1; j <= p; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

// ---------------------------------------------------------------------------
// JSON with 17-digit floats

namespace detail {

inline void escape_string(std::string& out, const std::string& s) {
  out += json(s).dump();
}

inline void dump(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        escape_string(out, it.key());
        out += indent < 0 ? ":" : ": ";
        dump(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump(out, v, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Like json::dump, but floats carry 17 significant digits.
inline std::string dump_json(const json& j, int indent = 2) {
  std::string out;
  detail::dump(out, j, indent, 0);
  return out;
}

inline json to_json(const DistMeta& m) {
  json j;
  j["kind"] = std::string(short_name(m.kind));
  j["nsample"] = m.nsample;
  j["pvariates"] = m.pvariates;
  j["part"] = m.part ? json(*m.part) : json(nullptr);
  j["iterations"] = m.iterations;
  j["seed"] = m.seed;
  return j;
}

inline DistMeta dist_meta_from_json(const json& j) {
  try {
    DistMeta m;
    m.kind = parse_test_kind(j.at("kind").get<std::string>());
    m.nsample = j.at("nsample").get<long>();
    m.pvariates = j.at("pvariates").get<long>();
    if (j.contains("part") && !j.at("part").is_null()) m.part = j.at("part").get<long>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad distribution metadata: ") + e.what());
  }
}

inline json to_json(const TestOutcome& o) {
  json j;
  j["kind"] = std::string(long_name(o.kind));
  j["observed"] = o.observed;
  j["alpha"] = o.alpha;
  j["thresholds"] = o.thresholds;
  j["reject"] = o.reject;
  j["p_value"] = o.p_value;
  j["dist_meta"] = to_json(o.dist_meta);
  return j;
}

inline json to_json(const IntervalEstimate& e) {
  json j;
  j["lower"] = e.lower;
  j["upper"] = e.upper;
  j["alpha"] = e.alpha;
  j["target"] = e.target;
  return j;
}

// ---------------------------------------------------------------------------
// Null-distribution cache

inline std::string format_cache(const EmpiricalNullDistribution& d) {
  json j;
  j["format_version"] = kCacheFormatVersion;
  j["meta"] = to_json(d.meta);
  j["values"] = d.values;
  return dump_json(j, -1) + "\n";
}

inline EmpiricalNullDistribution parse_cache(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("cache is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || j["format_version"] != kCacheFormatVersion)
    throw Error(ErrorCode::ParseError, "unsupported cache format_version");
  EmpiricalNullDistribution d;
  d.meta = dist_meta_from_json(j.at("meta"));
  try {
    d.values = j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad cache values: ") + e.what());
  }
  if (d.values.size() != d.meta.iterations)
    throw Error(ErrorCode::ParseError, "cache holds " + std::to_string(d.values.size()) + " values but declares " +
                                           std::to_string(d.meta.iterations));
  d.validate();
  return d;
}

inline void write_cache(const std::filesystem::path& path, const EmpiricalNullDistribution& d) {
  write_file_atomic(path, format_cache(d));
}

inline EmpiricalNullDistribution read_cache(const std::filesystem::path& path) {
  return parse_cache(read_file(path));
}

/// Loads a cache entry and insists its metadata equals `expected`.
inline EmpiricalNullDistribution read_cache(const std::filesystem::path& path, const DistMeta& expected) {
  EmpiricalNullDistribution d = read_cache(path);
  if (!(d.meta == expected)) {
    throw Error(ErrorCode::MetadataMismatch,
                "cache '" + path.string() + "' holds " + dump_json(to_json(d.meta), -1) + ", requested " +
                    dump_json(to_json(expected), -1));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Scenario configs and coverage reports

namespace detail {

inline Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ParseError, std::string(what) + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw Error(ErrorCode::ParseError, std::string(what) + " rows must all have the same length");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

inline ScenarioConfig scenario_from_json(const json& j, const ScenarioConfig& defaults) {
  ScenarioConfig c = defaults;
  try {
    c.test = parse_test_kind(j.at("test").get<std::string>());
    if (j.contains("mu")) {
      const auto mu = j.at("mu").get<std::vector<double>>();
      c.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    } else {
      c.mu = builtin_mu();
    }
    const json& sigma = j.at("sigma");
    if (sigma.is_string()) {
      c.sigma_label = sigma.get<std::string>();
      c.sigma = builtin_sigma(c.sigma_label);
    } else {
      c.sigma = matrix_from_json(sigma, "sigma");
      c.sigma_label = j.value("sigma_label", std::string("custom"));
    }
    c.n = j.at("n").get<long>();
    c.part.reset();
    if (j.contains("part") && !j.at("part").is_null()) c.part = j.at("part").get<long>();
    c.alpha = j.value("alpha", defaults.alpha);
    c.reps = j.value("reps", defaults.reps);
    c.mc_iterations = j.value("mc_iterations", j.value("iterations", defaults.mc_iterations));
    c.seed = j.value("seed", defaults.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad scenario: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace detail

/// A single scenario object, or {"scenarios": [...]}. Keys missing from a
/// scenario fall back to `defaults`.
inline std::vector<ScenarioConfig> parse_config(std::string_view text, const ScenarioConfig& defaults) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<ScenarioConfig> out;
  if (j.is_object() && j.contains("scenarios")) {
    for (const auto& s : j.at("scenarios")) out.push_back(detail::scenario_from_json(s, defaults));
  } else if (j.is_object()) {
    out.push_back(detail::scenario_from_json(j, defaults));
  } else {
    throw Error(ErrorCode::ParseError, "config must be a JSON object");
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "config lists no scenarios");
  return out;
}

inline std::string format_coverage_csv(const CoverageReport& report) {
  std::string out = "test,sigma,p1,n,alpha,reps,cov,stderr,lower_threshold,upper_threshold\n";
  auto threshold = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
  for (const CoverageEntry& e : report) {
    out += std::string(short_name(e.test)) + "," + e.sigma_label + "," +
           (e.part ? std::to_string(*e.part) : std::string("NA")) + "," + std::to_string(e.n) + "," +
           format_double(e.alpha) + "," + std::to_string(e.reps) + "," + format_double(e.cov) + "," +
           format_double(e.stderr_cov) + "," + threshold(e.region.lower) + "," + threshold(e.region.upper) + "\n";
  }
  return out;
}

inline std::string format_coverage_json(const CoverageReport& report) {
  json rows = json::array();
  for (const CoverageEntry& e : report) {
    json r;
    r["test"] = std::string(short_name(e.test));
    r["sigma"] = e.sigma_label;
    r["p1"] = e.part ? json(*e.part) : json(nullptr);
    r["n"] = e.n;
    r["alpha"] = e.alpha;
    r["reps"] = e.reps;
    r["cov"] = e.cov;
    r["stderr"] = e.stderr_cov;
    r["thresholds"] = e.region.thresholds();
    rows.push_back(std::move(r));
  }
  json j;
  j["scenarios"] = std::move(rows);
  return dump_json(j) + "\n";
}

/// Two columns: sample_kind (observed | null) and the statistic, whose
/// column name carries the statistic and scenario.
inline std::string format_distribution_csv(const DistributionExport& e) {
  std::string out = "sample_kind," + e.statistic + "|" + e.scenario + "\n";
  for (double v : e.observed) out += "observed," + format_double(v) + "\n";
  for (double v : e.null) out += "null," + format_double(v) + "\n";
  return out;
}

}  // namespace psinf::io
