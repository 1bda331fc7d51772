#include "qca/extremum.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "qca/errors.hpp"
#include "qca/estimate.hpp"

namespace qca {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed-form";
    case Method::quadrature: return "quadrature";
    case Method::monte_carlo: return "monte-carlo";
    case Method::lattice_sum: return "lattice-sum";
    case Method::series: return "series";
  }
  return "unknown";
}

namespace {

double scan(std::span<const double> lo, std::span<const double> hi, std::size_t nodes,
            const std::function<double(std::span<const double>)>& f, ExtremumKind kind) {
  const std::size_t dims = lo.size();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> x(dims);
  const bool sup = kind == ExtremumKind::supremum;
  double best = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  const double denom = static_cast<double>(nodes - 1);
  while (true) {
    for (std::size_t k = 0; k < dims; ++k)
      x[k] = lo[k] + (hi[k] - lo[k]) * (static_cast<double>(idx[k]) / denom);
    const double v = f(x);
    if (!std::isnan(v)) best = sup ? std::max(best, v) : std::min(best, v);
    std::size_t k = 0;
    while (k < dims && ++idx[k] == nodes) idx[k++] = 0;
    if (k == dims) break;
  }
  return best;
}

std::size_t grid_points(std::size_t nodes, std::size_t dims) {
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims; ++k) {
    if (total > std::numeric_limits<std::size_t>::max() / nodes) return std::numeric_limits<std::size_t>::max();
    total *= nodes;
  }
  return total;
}

}  // namespace

GridExtremum grid_extremum(std::span<const double> lo, std::span<const double> hi,
                           const std::function<double(std::span<const double>)>& f, ExtremumKind kind,
                           const RefinementPolicy& policy) {
  if (lo.size() != hi.size()) throw InvalidArgument("grid_extremum: bound dimensions differ");
  if (lo.empty()) return {f({}), 0.0, 1, true};
  std::size_t nodes = std::max<std::size_t>(policy.initial_nodes, 2);
  GridExtremum out;
  out.value = scan(lo, hi, nodes, f, kind);
  out.nodes_per_axis = nodes;
  while (true) {
    const std::size_t next = 2 * nodes - 1;
    if (grid_points(next, lo.size()) > policy.max_points) break;
    const double v = scan(lo, hi, next, f, kind);
    const double prev = out.value;
    out.value = v;
    out.nodes_per_axis = nodes = next;
    if (v == prev || std::abs(v - prev) <= policy.rel_tol * std::abs(v)) {
      out.converged = true;
      break;
    }
  }
  out.resolution = 1.0 / static_cast<double>(out.nodes_per_axis - 1);
  return out;
}

}  // namespace qca
