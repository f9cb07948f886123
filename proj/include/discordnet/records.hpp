#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace discordnet {

/// One row of an experiment: inputs, computed values and optimizer metadata.
struct SweepRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> tags;  // textual columns, e.g. compound labels
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::pair<std::string, double>> values;
  std::size_t evaluations = 0;
  bool converged = true;
  double wall_seconds = 0.0;  // informational only, never serialized to data files

  double param(const std::string& key) const { return lookup(params, key); }
  double value(const std::string& key) const { return lookup(values, key); }
  const std::string& tag(const std::string& key) const {
    for (const auto& [k, v] : tags)
      if (k == key) return v;
    throw std::out_of_range("SweepRecord: no column '" + key + "'");
  }

 private:
  static double lookup(const std::vector<std::pair<std::string, double>>& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
      if (k == key) return v;
    throw std::out_of_range("SweepRecord: no column '" + key + "'");
  }
};

/// Inclusive arithmetic range lo, lo+step, ..., hi (hi included when it lands within step/2).
inline std::vector<double> step_range(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw std::invalid_argument("step_range: empty or invalid range");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  return out;
}

/// `count` evenly spaced points on [lo, hi] inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

}  // namespace discordnet
