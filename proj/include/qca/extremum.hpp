#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace qca {

enum class ExtremumKind { supremum, infimum };

struct RefinementPolicy {
  std::size_t initial_nodes = 3;   // per axis, cube corners included
  double rel_tol = 1e-4;           // stop once a refinement changes the value by less
  std::size_t max_points = 1u << 20;
};

struct GridExtremum {
  double value = 0.0;
  double resolution = 0.0;         // node spacing of the finest grid, relative to the cell
  std::size_t nodes_per_axis = 0;
  bool converged = false;
};

/// Supremum or infimum of f over the closed box [lo, hi] on nested uniform
/// grids (corners included). Each refinement halves the spacing, so the grids
/// are nested and a supremum estimate never decreases.
GridExtremum grid_extremum(std::span<const double> lo, std::span<const double> hi,
                           const std::function<double(std::span<const double>)>& f, ExtremumKind kind,
                           const RefinementPolicy& policy = {});

}  // namespace qca
