#pragma once

#include <span>
#include <string>
#include <variant>

#include "qca/geometry.hpp"
#include "qca/manybody.hpp"
#include "qca/potential.hpp"

namespace qca {

struct Ideal {
  int dim = 1;
};

/// Energy evaluator used by the ensemble: no interaction, a pair potential, or
/// a many-body family.
class EnergyModel {
 public:
  static EnergyModel ideal(int dim);
  static EnergyModel pair(PairPotential pot);
  static EnergyModel many_body(ManyBodyFamily fam);

  int dim() const;
  bool is_ideal() const { return std::holds_alternative<Ideal>(model_); }
  /// Distance below which two particles can never coexist (0 if none).
  double hard_core_radius() const;
  std::string describe() const;

  /// U of the points in `coords` (n * dim values); +inf for forbidden overlaps.
  double energy(std::span<const double> coords) const;
  double energy(const Configuration& config) const { return energy(config.coords()); }

  const PairPotential* pair_potential() const { return std::get_if<PairPotential>(&model_); }
  const ManyBodyFamily* family() const { return std::get_if<ManyBodyFamily>(&model_); }

 private:
  explicit EnergyModel(std::variant<Ideal, PairPotential, ManyBodyFamily> m) : model_(std::move(m)) {}
  std::variant<Ideal, PairPotential, ManyBodyFamily> model_;
};

}  // namespace qca
