#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qca/geometry.hpp"
#include "qca/potential.hpp"

namespace qca {

enum class StabilityKind { S, SS, SSS };

std::string to_string(StabilityKind k);
StabilityKind parse_stability_kind(const std::string& s);

/// Reproducible random configurations: |g| uniform in [0, max_n], points
/// i.i.d. uniform in the box. Sample i depends only on (seed, i).
std::vector<Configuration> sample_configs(const Box& box, std::size_t max_n, std::size_t samples,
                                          std::uint64_t seed);

/// Keeps the configurations whose energy is finite.
std::vector<Configuration> finite_energy_only(std::vector<Configuration> configs,
                                              const std::function<double(const Configuration&)>& energy);

struct StabilityViolation {
  Configuration config;
  double lhs;  // U(g)
  double rhs;  // lower bound demanded by the inequality
};

struct StabilityReport {
  StabilityKind kind = StabilityKind::S;
  StabilityConstants constants;
  std::size_t samples = 0;
  std::vector<StabilityViolation> violations;
  double worst_margin = std::numeric_limits<double>::infinity();  // min of lhs - rhs
  std::string note;
};

/// Right-hand side of the chosen inequality for one configuration.
double stability_rhs(StabilityKind kind, const StabilityConstants& c, const Configuration& config,
                     const CubePartition& part);

/// Checks every configuration against the inequality. A clean report is
/// evidence, not a proof.
StabilityReport verify_bound(const std::function<double(const Configuration&)>& energy, const StabilityConstants& c,
                             StabilityKind kind, const CubePartition& part, const std::vector<Configuration>& configs,
                             unsigned workers = 0);

}  // namespace qca
