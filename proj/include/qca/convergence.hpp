#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qca/ensemble.hpp"
#include "qca/potential.hpp"

namespace qca {

/// eps1(a) = sum_{n >= 2} (a^d z)^n / n! exp(-beta A n^2 / 2 + beta (B + ups) n).
/// Terms are summed up to n_cap, and further until consecutive terms shrink by
/// more than half; the rest is bounded geometrically and carried in `error`.
/// Throws NumericalRejection for A <= 0.
Estimate epsilon1(double a, int dim, double z, double beta, const StabilityConstants& c, double upsilon_star,
                  std::size_t n_cap = 64);

/// Closed-form upper bound on the remainder R(eta; z, beta, a):
///   (z e^{beta(B+ups)})^k (1+eps1)^(M-1) [eps1 M + (2^k - 1)(1+eps1) e^{-beta(2A-B-ups)} e^{z a^d k}]
/// with k = |eta|, M = (|Lambda| - |Lambda_eta|) / a^d. eps1 enters as its upper bound.
double remainder_rhs(std::size_t eta_size, double volume, double volume_eta, double a, int dim, double z, double beta,
                     const StabilityConstants& c, double upsilon_star);

/// Constants for the remainder bound: SSS constants and the attraction sum
/// paired with them (upsilon_0 for pair potentials, I-bar for families).
struct BoundConstants {
  StabilityConstants constants;
  double upsilon_star = 0.0;
};

struct IdentityReport {
  Estimate rho, rho_minus, Z, Z_minus, remainder;
  double lhs = 0.0;             // rho
  double rhs = 0.0;             // (Z^-/Z) rho^- + R
  double difference = 0.0;      // |lhs - rhs|
  double combined_error = 0.0;  // err(rho) + err((Z^-/Z) rho^-) + err(R)
  bool identity_holds = false;
  std::optional<double> remainder_bound;
  std::optional<bool> bound_holds;  // R - err(R) <= bound
  std::size_t n_max = 0;
  /// Contribution of each nonempty dense cube set (bit mask over cubes) to R.
  std::vector<std::pair<std::uint64_t, double>> per_set;
};

/// Checks rho = (Z^-/Z) rho^- + R with R summed directly over nonempty dense
/// cube sets X and particle placements. Limited to partitions of at most 4
/// cubes and n_max <= 4 (n_max defaults to 4); the ideal gas uses closed forms
/// under the automatic or closed-form policy.
IdentityReport verify_identity58(const EnsembleParams& params, const Configuration& eta, const CubePartition& part,
                                 const Truncation& trunc = {}, const MethodPolicy& policy = {},
                                 std::uint64_t seed = 1, std::optional<BoundConstants> bound = std::nullopt);

struct SweepRow {
  double a = 0.0;
  Estimate Z, Z_minus, ratio, rho, rho_minus;
  double absdiff = 0.0;
  double absdiff_error = 0.0;
  Estimate eps1;             // NaN when no constants are available at this edge
  double rbound = 0.0;       // NaN when no constants are available at this edge
  std::string constants_note;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> first_below;  // first a with |rho - rho^-| < epsilon
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// Supplies SSS constants at edge a, or throws when none exist.
using ConstantsProvider = std::function<BoundConstants(double a)>;

/// Default provider: sss_constants for pair potentials, lemma21_constants for
/// families, nothing for the ideal gas.
ConstantsProvider default_constants(const EnergyModel& model, int cutoff = 64);

/// Edges must be strictly decreasing, each dividing the previous one, and each
/// must tile the box.
void check_a_list(const Box& box, const std::vector<double>& a_list);

SweepResult sweep(const EnsembleParams& params, const Configuration& eta, const std::vector<double>& a_list,
                  const Truncation& trunc = {}, const MethodPolicy& policy = {}, std::uint64_t seed = 1,
                  double epsilon = 0.05, ConstantsProvider constants = nullptr);

}  // namespace qca
