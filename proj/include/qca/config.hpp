#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qca/convergence.hpp"
#include "qca/ensemble.hpp"

namespace qca {

/// Flat `key = value` configuration with dotted keys and `#` comments. A JSON
/// document whose "config" member is an object of strings is accepted as well,
/// so a run's sidecar can be fed back in. Unknown keys are rejected.
class RunConfig {
 public:
  static RunConfig parse_text(const std::string& text);
  static RunConfig load(const std::string& path);
  /// Every key the tool understands.
  static const std::set<std::string>& known_keys();

  /// Applies a `key=value` override.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  /// Points separated by ';', coordinates by ','.
  std::vector<std::vector<double>> get_points(const std::string& key) const;

  int dim() const;
  Box box() const;
  EnergyModel energy() const;
  EnsembleParams ensemble() const;
  MethodPolicy policy() const;
  Truncation truncation() const;
  Configuration eta() const;
  std::uint64_t seed() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qca
