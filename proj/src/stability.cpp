#include "qca/stability.hpp"

#include <algorithm>
#include <cmath>

#include "qca/errors.hpp"
#include "qca/parallel.hpp"

namespace qca {

namespace {
constexpr std::uint64_t kSampleOp = 0x5354;
constexpr std::size_t kChunk = 256;
}  // namespace

std::string to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::S: return "S";
    case StabilityKind::SS: return "SS";
    case StabilityKind::SSS: return "SSS";
  }
  return "?";
}

StabilityKind parse_stability_kind(const std::string& s) {
  if (s == "S") return StabilityKind::S;
  if (s == "SS") return StabilityKind::SS;
  if (s == "SSS") return StabilityKind::SSS;
  throw InvalidArgument("unknown stability kind '" + s + "' (expected S, SS or SSS)");
}

std::vector<Configuration> sample_configs(const Box& box, std::size_t max_n, std::size_t samples,
                                          std::uint64_t seed) {
  if (max_n < 1) throw InvalidArgument("sample_configs needs max_n >= 1");
  const int d = box.dim();
  std::vector<Configuration> out;
  out.reserve(samples);
  std::vector<double> coords;
  for (std::size_t i = 0; i < samples; ++i) {
    RandomStream rng(seed, kSampleOp, i, 0);
    const auto n = std::min<std::size_t>(max_n, static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_n + 1)));
    coords.resize(n * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < coords.size(); ++j) coords[j] = rng.uniform() * box.sides()[j % static_cast<std::size_t>(d)];
    out.emplace_back(d, coords);
  }
  return out;
}

std::vector<Configuration> finite_energy_only(std::vector<Configuration> configs,
                                              const std::function<double(const Configuration&)>& energy) {
  std::erase_if(configs, [&](const Configuration& c) { return !std::isfinite(energy(c)); });
  return configs;
}

double stability_rhs(StabilityKind kind, const StabilityConstants& c, const Configuration& config,
                     const CubePartition& part) {
  const double n = static_cast<double>(config.size());
  double rhs = -c.B * n;
  if (kind == StabilityKind::S) return rhs;
  for (const auto& [cube, k] : occupancy(config, part)) {
    if (kind == StabilityKind::SS)
      rhs += c.A * static_cast<double>(k * k);
    else if (k >= 2)
      rhs += c.A * std::pow(static_cast<double>(k), c.m);
  }
  return rhs;
}

StabilityReport verify_bound(const std::function<double(const Configuration&)>& energy, const StabilityConstants& c,
                             StabilityKind kind, const CubePartition& part, const std::vector<Configuration>& configs,
                             unsigned workers) {
  StabilityReport report;
  report.kind = kind;
  report.constants = c;
  report.samples = configs.size();
  const std::size_t tasks = (configs.size() + kChunk - 1) / kChunk;
  std::vector<StabilityReport> partial(tasks);
  parallel_for(tasks, workers, [&](std::size_t t) {
    auto& r = partial[t];
    for (std::size_t i = t * kChunk; i < std::min(configs.size(), (t + 1) * kChunk); ++i) {
      const double lhs = energy(configs[i]);
      const double rhs = stability_rhs(kind, c, configs[i], part);
      const double margin = lhs - rhs;
      r.worst_margin = std::min(r.worst_margin, margin);
      if (margin < 0) r.violations.push_back({configs[i], lhs, rhs});
    }
  });
  for (auto& r : partial) {
    report.worst_margin = std::min(report.worst_margin, r.worst_margin);
    for (auto& v : r.violations) report.violations.push_back(std::move(v));
  }
  report.note = "falsification only: " + std::to_string(report.samples) + " sampled configurations, " +
                std::to_string(report.violations.size()) + " violations; a clean run is evidence, not a proof";
  return report;
}

}  // namespace qca
