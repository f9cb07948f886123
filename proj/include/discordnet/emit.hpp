#pragma once

// CSV / JSON emission of sweep records and the run manifest written next to them.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "discordnet/linalg.hpp"
#include "discordnet/records.hpp"

namespace discordnet::emit {

using json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown format '" + s + "' (csv, json)");
}

inline const char* extension(Format f) { return f == Format::csv ? ".csv" : ".json"; }

/// Column names by role, in first-appearance order over the records.
struct Columns {
  std::vector<std::string> tags, params, values;

  std::vector<std::string> header() const {
    std::vector<std::string> h = {"experiment"};
    h.insert(h.end(), tags.begin(), tags.end());
    h.insert(h.end(), params.begin(), params.end());
    h.insert(h.end(), values.begin(), values.end());
    h.push_back("evaluations");
    h.push_back("converged");
    return h;
  }
};

namespace detail {

template <class KV>
void collect(std::vector<std::string>& names, const KV& kv) {
  for (const auto& [k, v] : kv)
    if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
}

template <class KV>
const typename KV::value_type::second_type* find(const KV& kv, const std::string& key) {
  for (const auto& e : kv)
    if (e.first == key) return &e.second;
  return nullptr;
}

}  // namespace detail

inline Columns columns(const std::vector<SweepRecord>& records) {
  Columns c;
  for (const auto& r : records) {
    detail::collect(c.tags, r.tags);
    detail::collect(c.params, r.params);
    detail::collect(c.values, r.values);
  }
  return c;
}

/// 10 significant digits, shortest form.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string to_csv(const std::vector<SweepRecord>& records, const Columns& cols) {
  std::ostringstream os;
  const auto head = cols.header();
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
  os << '\n';
  for (const auto& r : records) {
    os << r.experiment;
    for (const auto& k : cols.tags) {
      const auto* v = detail::find(r.tags, k);
      os << ',' << (v ? *v : "");
    }
    for (const auto& k : cols.params) {
      const auto* v = detail::find(r.params, k);
      os << ',' << (v ? format_number(*v) : "");
    }
    for (const auto& k : cols.values) {
      const auto* v = detail::find(r.values, k);
      os << ',' << (v ? format_number(*v) : "");
    }
    os << ',' << r.evaluations << ',' << (r.converged ? 1 : 0) << '\n';
  }
  return os.str();
}
inline std::string to_csv(const std::vector<SweepRecord>& records) { return to_csv(records, columns(records)); }

inline json to_json_value(const std::vector<SweepRecord>& records, const Columns& cols) {
  json arr = json::array();
  // Numbers go through the same 10-digit rounding as the CSV.
  auto num = [](double x) { return std::stod(format_number(x)); };
  for (const auto& r : records) {
    json o = json::object();
    o["experiment"] = r.experiment;
    for (const auto& k : cols.tags) {
      const auto* v = detail::find(r.tags, k);
      o[k] = v ? json(*v) : json(nullptr);
    }
    for (const auto& k : cols.params) {
      const auto* v = detail::find(r.params, k);
      o[k] = v ? json(num(*v)) : json(nullptr);
    }
    for (const auto& k : cols.values) {
      const auto* v = detail::find(r.values, k);
      o[k] = v ? json(num(*v)) : json(nullptr);
    }
    o["evaluations"] = r.evaluations;
    o["converged"] = r.converged;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline std::string to_json(const std::vector<SweepRecord>& records, const Columns& cols) {
  return to_json_value(records, cols).dump(2) + "\n";
}
inline std::string to_json(const std::vector<SweepRecord>& records) { return to_json(records, columns(records)); }

/// Inverse of to_json; `cols` says which keys are tags, params and values.
inline std::vector<SweepRecord> from_json(const std::string& text, const Columns& cols) {
  const json arr = json::parse(text);
  if (!arr.is_array()) throw ConfigError("records JSON must be an array");
  std::vector<SweepRecord> out;
  for (const auto& o : arr) {
    SweepRecord r;
    r.experiment = o.at("experiment").get<std::string>();
    for (const auto& k : cols.tags)
      if (o.contains(k) && !o[k].is_null()) r.tags.emplace_back(k, o[k].get<std::string>());
    for (const auto& k : cols.params)
      if (o.contains(k) && !o[k].is_null()) r.params.emplace_back(k, o[k].get<double>());
    for (const auto& k : cols.values)
      if (o.contains(k) && !o[k].is_null()) r.values.emplace_back(k, o[k].get<double>());
    r.evaluations = o.at("evaluations").get<std::size_t>();
    r.converged = o.at("converged").get<bool>();
    out.push_back(std::move(r));
  }
  return out;
}

/// Reads a CSV written by to_csv. Without role information every numeric cell
/// becomes a value and every other cell a tag.
inline std::vector<SweepRecord> from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) return {};
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };
  const auto head = split(line);
  std::vector<SweepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size()) throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(head.size()));
    SweepRecord r;
    for (std::size_t i = 0; i < head.size(); ++i) {
      const auto& k = head[i];
      const auto& c = cells[i];
      if (k == "experiment") r.experiment = c;
      else if (k == "evaluations") r.evaluations = std::stoull(c);
      else if (k == "converged") r.converged = c == "1";
      else if (c.empty()) continue;
      else {
        char* end = nullptr;
        const double v = std::strtod(c.c_str(), &end);
        if (end && *end == '\0') r.values.emplace_back(k, v);
        else r.tags.emplace_back(k, c);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- hashing and files -----------------------------------------------------------

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << content;
  f.close();
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct OutputFile {
  std::string name;
  std::string sha256;
  std::size_t rows = 0;
  Columns columns;
};

/// Provenance of one CLI invocation; written as manifest_<command>.json.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::string version;
  std::chrono::system_clock::time_point started, finished;
  std::vector<OutputFile> outputs;

  std::string config_text() const {
    std::string s;
    for (const auto& [k, v] : config) s += k + "=" + v + "\n";
    return s;
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["config"] = json(config);
    j["config_sha256"] = sha256_hex(config_text());
    j["seed"] = seed;
    j["version"] = version;
    j["started"] = utc_timestamp(started);
    j["finished"] = utc_timestamp(finished);
    json outs = json::array();
    for (const auto& o : outputs) {
      outs.push_back({{"file", o.name},
                      {"sha256", o.sha256},
                      {"rows", o.rows},
                      {"tags", o.columns.tags},
                      {"params", o.columns.params},
                      {"values", o.columns.values}});
    }
    j["outputs"] = std::move(outs);
    return j;
  }
};

/// Writes `records` as <dir>/<stem>.<ext> and notes the file in `manifest`.
inline std::filesystem::path write_records(const std::filesystem::path& dir, const std::string& stem,
                                           const std::vector<SweepRecord>& records, Format format,
                                           RunManifest& manifest) {
  const auto cols = columns(records);
  const std::string body = format == Format::csv ? to_csv(records, cols) : to_json(records, cols);
  const auto path = dir / (stem + extension(format));
  write_file(path, body);
  manifest.outputs.push_back({path.filename().string(), sha256_hex(body), records.size(), cols});
  return path;
}

inline std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  std::string slug = manifest.command;
  for (auto& c : slug)
    if (c == ' ') c = '_';
  const auto path = dir / ("manifest_" + slug + ".json");
  write_file(path, manifest.to_json().dump(2) + "\n");
  return path;
}

}  // namespace discordnet::emit
