#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "qca/estimate.hpp"
#include "qca/extremum.hpp"
#include "qca/geometry.hpp"

namespace qca {

/// Parameters of the growth conditions a pair potential is declared to obey:
///   phi(r) >= phi0 / r^s              for r <= r0   (repulsive core, s >= d)
///   phi(r) >= -phi1 / r^(d + eps0)    for r >= R    (integrable attraction; phi1 = 0: none)
struct AssumptionA {
  double phi0 = 1.0;
  double phi1 = 1.0;
  double r0 = 1.0;
  double R = 2.0;
  double s = 1.0;
  double eps0 = 1.0;
};

/// Result of spot-checking the two growth conditions on sampled radii.
struct AssumptionCheck {
  std::size_t core_samples = 0;
  std::size_t core_violations = 0;
  std::size_t tail_samples = 0;
  std::size_t tail_violations = 0;
  bool parameters_valid = true;  // r0 > 0, R > r0, phi0, eps0 > 0, phi1 >= 0, s >= d
  bool ok() const { return parameters_valid && core_violations == 0 && tail_violations == 0; }
};

/// Radial pair potential phi(r) on r > 0 with values in (-inf, +inf];
/// +inf encodes a hard core.
class PairPotential {
 public:
  using Evaluator = std::function<double(double)>;

  /// `hard_core_radius` (0 if none) is a radius below which phi is +inf; it
  /// lets integrators skip cube tuples that can never carry weight.
  PairPotential(std::string name, int dim, Evaluator phi, AssumptionA params, double hard_core_radius = 0.0);

  double operator()(double r) const { return phi_(r); }
  const Evaluator& evaluator() const { return phi_; }
  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const AssumptionA& params() const { return params_; }
  const AssumptionCheck& assumption_check() const { return check_; }
  double hard_core_radius() const { return hard_core_radius_; }

 private:
  std::string name_;
  int dim_;
  Evaluator phi_;
  AssumptionA params_;
  double hard_core_radius_;
  AssumptionCheck check_;
};

/// phi0 / r^s, purely repulsive.
PairPotential inverse_power(int dim, double phi0, double s);
/// +inf for r < sigma, 0 otherwise.
PairPotential hard_core(int dim, double sigma);
/// +inf for r < sigma, -depth for sigma <= r < range, 0 beyond.
PairPotential hard_core_plus_well(int dim, double sigma, double depth, double range);
/// phi0 / r^s - phi1 exp(-kappa r).
PairPotential power_core_exp_tail(int dim, double phi0, double s, double phi1, double kappa);
/// phi == 0 (non-interacting gas).
PairPotential zero_potential(int dim);

/// (phi+, phi-) with phi = phi+ - phi-.
std::pair<double, double> phi_split(const PairPotential& pot, double r);

/// b(a): infimum of phi+ over pairs of points in one cube of edge a.
/// Requires 0 < a <= r0 / sqrt(d).
GridExtremum b_of_a(const PairPotential& pot, double a);
/// Same quantity without the range check.
GridExtremum in_cube_repulsion(const PairPotential& pot, double a);

/// upsilon_eps(a): sum over cubes D' of sup_{x in D, y in D'} phi-(|x-y|) |x-y|^eps,
/// truncated to cubes within `cutoff` shells (max-norm in cube units). The
/// error field bounds the omitted shells from the declared tail decay; it is
/// +inf when cutoff * a < R, where no decay is declared.
Estimate upsilon_eps(const PairPotential& pot, double a, double eps, int cutoff = 64);

/// Bound on sum_{|k|_inf > cutoff} amplitude / dist_min(k)^alpha over the
/// lattice of cubes with edge a in `dim` dimensions; alpha > dim is required.
double lattice_tail_bound(int dim, double a, int cutoff, double amplitude, double alpha);

struct DeltaSplit {
  PairPotential repulsive;  // (1 - delta) phi+
  PairPotential stable;     // delta phi+ - phi-
};
DeltaSplit delta_decompose(const PairPotential& pot, double delta);

/// Constants of the strong-superstability inequality
///   U(g) >= A sum_{|g_D| >= 2} |g_D|^m - B |g|.
struct StabilityConstants {
  double a = 0.0;
  double b = 0.0;         // in-cube repulsion (pair case) or v_2^2 (many-body)
  double upsilon0 = 0.0;  // attraction sum used (upper bound incl. tail)
  double A = 0.0;
  double B = 0.0;
  int m = 2;
  std::optional<double> delta;
  std::optional<double> a_star;
  std::optional<double> B_delta;
};

/// A(a) = (b - 2 upsilon0) / 4, B(a) = upsilon0 / 2, m = 2. upsilon0 enters as
/// its upper bound (value + tail). Throws NumericalRejection when b <= 2 upsilon0.
StabilityConstants sss_constants(const PairPotential& pot, double a, int cutoff = 64);

struct AStar {
  double a_star = 0.0;
  double residual = 0.0;            // g(a*) = delta b / 4 - upsilon0 / 2
  double residual_threshold = 0.0;  // 1e-3 * delta b(a*) / 4
  double b = 0.0;
  double upsilon0 = 0.0;
  double B_delta = 0.0;             // upsilon0(a*) / 2
  StabilityConstants constants() const;
  double delta = 0.0;
};

/// Smallest root of g(a) = delta b(a)/4 - upsilon0(a)/2 on [lo, hi], located by a
/// 64-point log scan followed by bisection to relative tolerance `rel_tol`.
/// Defaults: lo = r0 / 100, hi = R.
AStar find_a_star(const PairPotential& pot, double delta, std::optional<double> lo = std::nullopt,
                  std::optional<double> hi = std::nullopt, double rel_tol = 1e-6, int cutoff = 64);

/// Sum of phi over unordered pairs; +inf as soon as a pair sits in a hard core.
double pair_energy(const PairPotential& pot, const Configuration& config);
/// Sum of phi(|x - y|) over x in eta, y in gamma. eta and gamma must be disjoint.
double pair_interaction(const PairPotential& pot, const Configuration& eta, const Configuration& gamma);

/// Raw-buffer variant used by the integrators: `coords` holds n points of
/// dimension `dim`.
double pair_energy_raw(const PairPotential::Evaluator& phi, std::span<const double> coords, int dim);
double distance(std::span<const double> x, std::span<const double> y);

}  // namespace qca
