#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qca/estimate.hpp"
#include "qca/geometry.hpp"
#include "qca/potential.hpp"

namespace qca {

/// Declared decay of the attractive parts, needed for sound lattice-sum tails:
///   V_p^-(x_1, ..., x_p) <= amplitude[p] * prod_{j >= 2} psi(|x_1 - x_j|),
///   psi(r) = min(1, (range / r)^(d + eps0)),
/// and for bodies beyond p_max amplitude[p] <= amplitude[p_max] tail_ratio^(p - p_max).
struct DecayMetadata {
  std::vector<double> amplitude;  // indexed by p; entries 0 and 1 unused
  double tail_ratio = 0.0;
  double range = 1.0;
  double eps0 = 1.0;
};

/// Truncated family {V_p}, 2 <= p <= p_max, of symmetric translation-invariant
/// many-body potentials. Each evaluator receives p points as a flat array of
/// p * dim coordinates.
class ManyBodyFamily {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;

  ManyBodyFamily(int dim, std::vector<Evaluator> bodies, std::optional<DecayMetadata> decay = std::nullopt,
                 double hard_core_radius = 0.0);

  int dim() const { return dim_; }
  int p_max() const { return static_cast<int>(bodies_.size()) + 1; }
  /// V_p; p in [2, p_max].
  const Evaluator& body(int p) const { return bodies_.at(static_cast<std::size_t>(p - 2)); }
  const std::optional<DecayMetadata>& decay() const { return decay_; }
  double hard_core_radius() const { return hard_core_radius_; }

 private:
  int dim_;
  std::vector<Evaluator> bodies_;
  std::optional<DecayMetadata> decay_;
  double hard_core_radius_;
};

/// V_2 = phi(|x_1 - x_2|), nothing beyond. Decay metadata is derived from the
/// potential's declared tail.
ManyBodyFamily pair_only(const PairPotential& pot);
/// Adds V_3 = strength * exp(-(r12 + r13 + r23) / range) to a pair potential.
ManyBodyFamily pair_plus_triple(const PairPotential& pot, double strength, double range);

/// U(g) = sum over subsets of size 2..p_max of V_p.
double mb_energy(const ManyBodyFamily& fam, const Configuration& config);
double mb_energy_raw(const ManyBodyFamily& fam, std::span<const double> coords);
/// W(eta; g) = U(eta u g) - U(eta) - U(g); eta and g must be disjoint. Falls
/// back to the explicit mixed-subset sum when an energy is infinite.
double mb_interaction(const ManyBodyFamily& fam, const Configuration& eta, const Configuration& gamma);
/// Sum of V_p over subsets that meet both eta and g.
double mb_interaction_mixed(const ManyBodyFamily& fam, const Configuration& eta, const Configuration& gamma);

/// Cubes on the infinite lattice of edge a, each repeated with a multiplicity.
struct CubeTuple {
  std::vector<std::vector<std::int64_t>> cubes;  // lattice coordinates
  std::vector<int> multiplicity;                 // k_j >= 1
  int bodies() const;
};

/// sup of V_p^- with k_j points in closure(cube_j), p = sum k_j, on nested grids.
GridExtremum I_sup(const ManyBodyFamily& fam, const CubeTuple& tuple, double a);
/// Partition form: cubes given as partition indices.
GridExtremum I_sup(const ManyBodyFamily& fam, const std::vector<CubeIndex>& cubes, const std::vector<int>& k,
                   const CubePartition& part);

/// Per-p lattice sums I_p^{1|p-1}(a; 0) for p = 2..p_max, each with its shell tail.
std::vector<Estimate> attraction_sums(const ManyBodyFamily& fam, double a, int cutoff);

/// I-bar(a) = sum_p 2^p I_p^{1|p-1}(a; 0), with the lattice tail and the
/// bodies-beyond-p_max tail in the error field. Requires decay metadata.
Estimate I_bar(const ManyBodyFamily& fam, double a, int cutoff);

/// Many-body constants A(a) = v_2^2(a) - 2 sum_p 4^p I_p^{1|p-1}(a; 0),
/// B(a) = sum_p I_p^{1|p-1}(a; 0), m = 2. The I sums enter as upper bounds.
/// The positive part used for v_2^2 is the whole V_2^+.
StabilityConstants lemma21_constants(const ManyBodyFamily& fam, double a, int cutoff);

/// One small instance of the attraction-repulsion relation.
struct A5Instance {
  std::vector<std::vector<std::int64_t>> cubes;  // N cubes
  std::vector<int> k;                            // sum k = p, N < p
  int l_max = 0;
  double eps = 0.0;
  int cutoff = 2;                                // shells for the extra cubes
};

struct A5Report {
  struct InCubeViolation {
    int p;
    std::vector<double> coords;
    double value;
  };
  struct Margin {
    int p;
    std::vector<int> k;
    double lhs;          // v_p^{k}(cubes)
    double rhs;          // worst case over index maps
    double margin;       // lhs - rhs
    std::vector<int> worst_map;
  };
  std::size_t in_cube_samples = 0;
  std::vector<InCubeViolation> in_cube_violations;
  std::vector<Margin> margins;
};

/// (i) samples random p-tuples inside one cube of edge a and lists negative V_p;
/// (ii) evaluates both sides of the attraction-repulsion inequality on the
/// given instances (l-sum truncated at l_max, lattice sums at `cutoff`).
A5Report check_a5(const ManyBodyFamily& fam, double a, std::size_t samples, const std::vector<A5Instance>& instances,
                  std::uint64_t seed = 1);

}  // namespace qca
