#pragma once

#include <cstdint>
#include <optional>

#include "qca/energy.hpp"
#include "qca/estimate.hpp"
#include "qca/geometry.hpp"

namespace qca {

struct EnsembleParams {
  double z = 1.0;
  double beta = 1.0;
  Box box = Box::cube(1, 1.0);
  EnergyModel energy = EnergyModel::ideal(1);
  /// Stability constant B with U(g) >= -B |g|; drives the truncation tails.
  double stability_B = 0.0;
};

enum class MethodChoice { automatic, closed_form, quadrature, monte_carlo };

MethodChoice parse_method(const std::string& s);
std::string to_string(MethodChoice m);

/// automatic: closed form for the ideal gas, quadrature while n*d <= 12,
/// Monte Carlo beyond.
struct MethodPolicy {
  MethodChoice choice = MethodChoice::automatic;
  std::size_t quad_budget = std::size_t{1} << 24;  // integrand evaluations per term
  std::size_t mc_samples = std::size_t{1} << 18;   // samples per term
  unsigned workers = 0;                            // 0: QCA_WORKERS or 1
};

struct Truncation {
  std::optional<std::size_t> n_max;  // default: smallest n whose tail is below `tolerance`
  double tolerance = 1e-10;
};

/// Largest number of integration dimensions handled by the tensor rule.
inline constexpr std::size_t kMaxQuadratureDims = 12;

/// Bound on sum_{n > n_max} x^n / n!, namely x^(n_max+1) / (n_max+1)! e^x.
double truncation_tail(double x, std::size_t n_max);
/// Smallest n_max with truncation_tail(x, n_max) < tol.
std::size_t default_n_max(double x, double tol);

/// Most particles that fit in the box without any pair closer than the hard-core
/// radius (no limit when there is no hard core).
std::size_t packing_capacity(const EnsembleParams& params);

/// Random-stream tags for the integrals of the expansion.
enum class Quantity : std::uint64_t { generic = 0, Z = 1, Zminus = 2, rho_num = 3, rhominus_num = 4 };

/// int_{Lambda^n} exp(-beta U(extra u {x_1..x_n})) [chi_-(extra u x)] dx.
/// method must be quadrature or monte_carlo. With a dilute partition the
/// quadrature runs cube subset by cube subset on per-cube midpoint grids;
/// without one particle i gets a midpoint grid with m + i nodes per axis, or,
/// when even m = 2 would overrun the budget, all particles share one m^d grid
/// (coincident nodes take the potential's value at r = 0). Both report
/// |fine - coarse| as the error.
Estimate canonical_integral(const EnsembleParams& params, std::size_t n, const Configuration& extra,
                            const CubePartition* dilute_part, Method method, std::size_t budget, std::uint64_t seed,
                            unsigned workers = 0, Quantity quantity = Quantity::generic);

/// int over prod_j cells[j] of exp(-beta U(extra u x)) dx, one particle per
/// listed cell (cells may repeat). Per-cell midpoint grids, staggered within a
/// cell; error |fine - coarse|.
Estimate cell_integral(const EnsembleParams& params, const Configuration& extra, const std::vector<CubeIndex>& cells,
                       const CubePartition& part, std::size_t budget, unsigned workers = 0);

Estimate partition_function(const EnsembleParams& params, const Truncation& trunc = {},
                            const MethodPolicy& policy = {}, std::uint64_t seed = 1);
Estimate dilute_partition_function(const EnsembleParams& params, const CubePartition& part,
                                   const Truncation& trunc = {}, const MethodPolicy& policy = {},
                                   std::uint64_t seed = 1);

/// z^{|eta|} sum_n z^n/n! int exp(-beta U(eta u x)) dx, the numerator of rho.
Estimate correlation_numerator(const EnsembleParams& params, const Configuration& eta, const CubePartition* dilute_part,
                               const Truncation& trunc = {}, const MethodPolicy& policy = {},
                               std::uint64_t seed = 1);

/// rho(eta) = numerator / Z with the z^{|eta|} prefactor.
Estimate correlation(const EnsembleParams& params, const Configuration& eta, const Truncation& trunc = {},
                     const MethodPolicy& policy = {}, std::uint64_t seed = 1);
/// rho^-(eta): 0 when eta is not dilute.
Estimate dilute_correlation(const EnsembleParams& params, const Configuration& eta, const CubePartition& part,
                            const Truncation& trunc = {}, const MethodPolicy& policy = {}, std::uint64_t seed = 1);

/// N / D with first-order error (eN + |N/D| eD) / (D - eD); throws
/// NumericalRejection when the denominator's lower bar is not positive.
Estimate ratio(const Estimate& num, const Estimate& den);

}  // namespace qca
