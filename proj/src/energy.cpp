#include "qca/energy.hpp"

#include "qca/errors.hpp"

namespace qca {

EnergyModel EnergyModel::ideal(int dim) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  return EnergyModel(Ideal{dim});
}

EnergyModel EnergyModel::pair(PairPotential pot) { return EnergyModel(std::move(pot)); }

EnergyModel EnergyModel::many_body(ManyBodyFamily fam) { return EnergyModel(std::move(fam)); }

int EnergyModel::dim() const {
  return std::visit([](const auto& m) {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Ideal>)
      return m.dim;
    else
      return m.dim();
  }, model_);
}

double EnergyModel::hard_core_radius() const {
  if (auto* p = pair_potential()) return p->hard_core_radius();
  if (auto* f = family()) return f->hard_core_radius();
  return 0.0;
}

std::string EnergyModel::describe() const {
  if (auto* p = pair_potential()) return "pair:" + p->name();
  if (auto* f = family()) return "many_body:p_max=" + std::to_string(f->p_max());
  return "ideal";
}

double EnergyModel::energy(std::span<const double> coords) const {
  if (auto* p = pair_potential()) return pair_energy_raw(p->evaluator(), coords, p->dim());
  if (auto* f = family()) return mb_energy_raw(*f, coords);
  return 0.0;
}

}  // namespace qca
