#include "qca/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qca/errors.hpp"
#include "qca/parallel.hpp"

namespace qca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMcBatch = 4096;
constexpr std::size_t kMaxSubsets = 20'000'000;

// Tensor midpoint grid over one box: `count` points, all with weight `weight`.
struct Grid {
  std::vector<double> pts;
  std::size_t count = 0;
  double weight = 1.0;
};

Grid midpoint_grid(std::span<const double> lo, std::span<const double> hi, std::size_t nodes) {
  const std::size_t d = lo.size();
  Grid g;
  g.count = 1;
  for (std::size_t i = 0; i < d; ++i) {
    g.count *= nodes;
    g.weight *= (hi[i] - lo[i]) / static_cast<double>(nodes);
  }
  g.pts.resize(g.count * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t p = 0; p < g.count; ++p) {
    for (std::size_t i = 0; i < d; ++i)
      g.pts[p * d + i] = lo[i] + (hi[i] - lo[i]) * (static_cast<double>(idx[i]) + 0.5) / static_cast<double>(nodes);
    for (std::size_t i = 0; i < d && ++idx[i] == nodes; ++i) idx[i] = 0;
  }
  return g;
}

// Nested sum over one grid per particle. Pair energies are accumulated level by
// level so that hard-core overlaps prune whole subtrees; many-body energies are
// evaluated at the leaves.
class TreeSum {
 public:
  TreeSum(const EnergyModel& model, double beta, const Configuration& extra, std::size_t n)
      : model_(model), beta_(beta), d_(static_cast<std::size_t>(model.dim())), ne_(extra.size()), n_(n) {
    pts_.assign((ne_ + n_) * d_, 0.0);
    std::copy(extra.coords().begin(), extra.coords().end(), pts_.begin());
    if (auto* p = model.pair_potential()) phi_ = &p->evaluator();
    hard_core_ = model.hard_core_radius();
    leaf_energy_ = model.family() != nullptr;
    u_extra_ = phi_ ? model.energy(extra.coords()) : 0.0;
  }

  void set_grids(std::vector<const Grid*> grids) { grids_ = std::move(grids); }

  /// Sum over particle-0 nodes [begin, end) of the subtree weights, times the
  /// particle-0 weight.
  double range(std::size_t begin, std::size_t end) {
    if (u_extra_ == kInf) return 0.0;
    double s = 0;
    for (std::size_t t = begin; t < end; ++t) s += node(0, t, u_extra_);
    return s * grids_[0]->weight;
  }

  double all() { return range(0, grids_[0]->count); }

 private:
  double level(std::size_t k, double u) {
    const Grid& g = *grids_[k];
    double s = 0;
    for (std::size_t t = 0; t < g.count; ++t) s += node(k, t, u);
    return s * g.weight;
  }

  double node(std::size_t k, std::size_t t, double u) {
    const double* x = grids_[k]->pts.data() + t * d_;
    double* slot = pts_.data() + (ne_ + k) * d_;
    std::copy(x, x + d_, slot);
    double du = 0;
    for (std::size_t j = 0; j < ne_ + k; ++j) {
      const double r = distance({pts_.data() + j * d_, d_}, {slot, d_});
      if (r < hard_core_) return 0.0;
      if (phi_) {
        const double v = (*phi_)(r);
        if (v == kInf) return 0.0;
        du += v;
      }
    }
    if (k + 1 < n_) return level(k + 1, u + du);
    if (leaf_energy_) {
      const double e = model_.energy(pts_);
      return e == kInf ? 0.0 : std::exp(-beta_ * e);
    }
    return std::exp(-beta_ * (u + du));
  }

  const EnergyModel& model_;
  double beta_;
  std::size_t d_, ne_, n_;
  const PairPotential::Evaluator* phi_ = nullptr;
  double hard_core_ = 0.0;
  bool leaf_energy_ = false;
  double u_extra_ = 0.0;
  std::vector<double> pts_;
  std::vector<const Grid*> grids_;
};

double extra_weight(const EnsembleParams& p, const Configuration& extra) {
  const double u = p.energy.energy(extra.coords());
  return u == kInf ? 0.0 : std::exp(-p.beta * u);
}

void check_params(const EnsembleParams& p) {
  if (!(p.z >= 0) || !std::isfinite(p.z)) throw InvalidArgument("fugacity z must be finite and >= 0");
  if (!(p.beta > 0) || !std::isfinite(p.beta)) throw InvalidArgument("inverse temperature beta must be positive");
  if (!(p.stability_B >= 0)) throw InvalidArgument("stability constant B must be >= 0");
  if (p.energy.dim() != p.box.dim()) throw InvalidArgument("energy and box dimensions differ");
}

void check_eta(const EnsembleParams& p, const Configuration& eta) {
  if (eta.dim() != p.box.dim()) throw InvalidArgument("eta dimension differs from the box");
  for (std::size_t i = 0; i < eta.size(); ++i)
    if (!p.box.contains(eta.point(i))) {
      std::ostringstream os;
      os << "eta point " << i << " lies outside the box";
      throw InvalidArgument(os.str());
    }
}

void check_partition(const EnsembleParams& p, const CubePartition& part) {
  if (part.dim() != p.box.dim()) throw InvalidArgument("partition and box dimensions differ");
  for (std::size_t i = 0; i < p.box.sides().size(); ++i)
    if (std::abs(part.box().sides()[i] - p.box.sides()[i]) > 1e-12 * p.box.sides()[i])
      throw InvalidArgument("partition does not tile the ensemble box");
}

double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// ---------------------------------------------------------------- quadrature

Estimate quadrature_full(const EnsembleParams& p, std::size_t n, const Configuration& extra, std::size_t budget,
                         unsigned workers) {
  const std::size_t d = static_cast<std::size_t>(p.box.dim());
  // Particle i gets m + i nodes per axis when that fits the budget, which
  // keeps pair differences off a common lattice; otherwise one shared grid.
  auto staggered_cost = [&](std::size_t m) {
    double c = 1;
    for (std::size_t i = 0; i < n; ++i) c *= std::pow(static_cast<double>(m + i), static_cast<double>(d));
    return c;
  };
  const bool staggered = staggered_cost(2) <= static_cast<double>(budget);
  auto cost = [&](std::size_t m) {
    return staggered ? staggered_cost(m) : std::pow(static_cast<double>(m), static_cast<double>(n * d));
  };
  std::size_t lo = 2, hi = 2;
  while (cost(hi * 2) <= static_cast<double>(budget)) hi *= 2;
  hi *= 2;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (cost(mid) <= static_cast<double>(budget) ? lo : hi) = mid;
  }
  const std::size_t m_fine = lo, m_coarse = (m_fine + 1) / 2;
  const std::vector<double> origin(d, 0.0);

  auto integrate = [&](std::size_t m) {
    std::vector<Grid> grids;
    for (std::size_t i = 0; i < (staggered ? n : 1); ++i)
      grids.push_back(midpoint_grid(origin, p.box.sides(), staggered ? m + i : m));
    std::vector<const Grid*> ptrs;
    for (std::size_t i = 0; i < n; ++i) ptrs.push_back(&grids[staggered ? i : 0]);
    const std::size_t first = grids[0].count;
    const std::size_t chunk = std::max<std::size_t>(1, (first + 255) / 256);
    const std::size_t tasks = (first + chunk - 1) / chunk;
    std::vector<double> partial(tasks, 0.0);
    parallel_for(tasks, workers, [&](std::size_t t) {
      TreeSum tree(p.energy, p.beta, extra, n);
      tree.set_grids(ptrs);
      partial[t] = tree.range(t * chunk, std::min(first, (t + 1) * chunk));
    });
    double s = 0;
    for (double v : partial) s += v;
    return s;
  };

  Estimate e;
  e.method = Method::quadrature;
  e.value = integrate(m_fine);
  const double coarse = integrate(m_coarse);
  e.breakdown.discretization = std::abs(e.value - coarse);
  e.error = e.breakdown.discretization;
  std::ostringstream os;
  os << (staggered ? "staggered " : "") << "midpoint grid, m = " << m_fine << " (coarse " << m_coarse << ")";
  e.note = os.str();
  return e;
}

struct CubeGeometry {
  const CubePartition& part;
  std::vector<std::vector<double>> lo, hi;  // closures of every cube

  explicit CubeGeometry(const CubePartition& pt) : part(pt) {
    for (CubeIndex c = 0; c < part.cube_count(); ++c) {
      auto l = part.lower_corner(c);
      auto h = l;
      for (auto& v : h) v += part.edge();
      lo.push_back(std::move(l));
      hi.push_back(std::move(h));
    }
  }

  double max_distance(CubeIndex a, CubeIndex b) const {
    double r2 = 0;
    for (std::size_t i = 0; i < lo[a].size(); ++i) {
      const double v = std::max(hi[a][i], hi[b][i]) - std::min(lo[a][i], lo[b][i]);
      r2 += v * v;
    }
    return std::sqrt(r2);
  }

  double max_distance(CubeIndex a, std::span<const double> x) const {
    double r2 = 0;
    for (std::size_t i = 0; i < lo[a].size(); ++i) {
      const double v = std::max(std::abs(x[i] - lo[a][i]), std::abs(x[i] - hi[a][i]));
      r2 += v * v;
    }
    return std::sqrt(r2);
  }
};

// Cubes a particle may occupy next to eta: not holding an eta point and not
// entirely inside an eta point's hard core.
std::vector<CubeIndex> free_cubes(const CubeGeometry& geo, const Configuration& extra, double hard_core) {
  const Occupancy occ = occupancy(extra, geo.part);
  std::vector<CubeIndex> out;
  for (CubeIndex c = 0; c < geo.part.cube_count(); ++c) {
    if (occ.count(c)) continue;
    bool ok = true;
    for (std::size_t i = 0; ok && i < extra.size(); ++i) ok = geo.max_distance(c, extra.point(i)) >= hard_core;
    if (ok) out.push_back(c);
  }
  return out;
}

// Increasing n-subsets of `cubes` whose members can pairwise hold particles
// outside each other's hard core; flat storage, n entries per subset.
std::vector<std::uint32_t> feasible_subsets(const CubeGeometry& geo, const std::vector<CubeIndex>& cubes,
                                            std::size_t n, double hard_core) {
  std::vector<std::uint32_t> out, chosen;
  auto dfs = [&](auto&& self, std::size_t start) -> void {
    if (chosen.size() == n) {
      out.insert(out.end(), chosen.begin(), chosen.end());
      if (out.size() / n > kMaxSubsets)
        throw NumericalRejection("too many cube subsets for dilute quadrature; use monte_carlo");
      return;
    }
    for (std::size_t i = start; i + (n - chosen.size()) <= cubes.size(); ++i) {
      bool ok = true;
      if (hard_core > 0)
        for (auto c : chosen)
          if (geo.max_distance(c, cubes[i]) < hard_core) {
            ok = false;
            break;
          }
      if (!ok) continue;
      chosen.push_back(static_cast<std::uint32_t>(cubes[i]));
      self(self, i + 1);
      chosen.pop_back();
    }
  };
  dfs(dfs, 0);
  return out;
}

Estimate quadrature_dilute(const EnsembleParams& p, std::size_t n, const Configuration& extra,
                           const CubePartition& part, std::size_t budget, unsigned workers) {
  const std::size_t d = static_cast<std::size_t>(p.box.dim());
  const double hc = p.energy.hard_core_radius();
  const CubeGeometry geo(part);
  const auto cubes = free_cubes(geo, extra, hc);
  Estimate e;
  e.method = Method::quadrature;
  if (n > cubes.size()) {
    e.note = "no dilute placement";
    return e;
  }
  const auto subsets = feasible_subsets(geo, cubes, n, hc);
  const std::size_t count = subsets.size() / n;
  if (count == 0) {
    e.note = "no admissible cube subset";
    return e;
  }
  std::size_t m = 2;
  const double dims = static_cast<double>(n * d);
  while (std::pow(static_cast<double>(m + 1), dims) * static_cast<double>(count) <= static_cast<double>(budget)) ++m;
  const std::size_t m_coarse = std::max<std::size_t>(1, m / 2);

  // One grid per cube and resolution, built once.
  std::vector<Grid> fine(part.cube_count()), coarse(part.cube_count());
  for (auto c : cubes) {
    fine[c] = midpoint_grid(geo.lo[c], geo.hi[c], m);
    coarse[c] = midpoint_grid(geo.lo[c], geo.hi[c], m_coarse);
  }
  constexpr std::size_t kChunk = 64;
  const std::size_t tasks = (count + kChunk - 1) / kChunk;
  std::vector<double> sum_fine(tasks, 0.0), sum_diff(tasks, 0.0);
  parallel_for(tasks, workers, [&](std::size_t t) {
    TreeSum tree(p.energy, p.beta, extra, n);
    std::vector<const Grid*> gf(n), gc(n);
    for (std::size_t s = t * kChunk; s < std::min(count, (t + 1) * kChunk); ++s) {
      for (std::size_t j = 0; j < n; ++j) {
        gf[j] = &fine[subsets[s * n + j]];
        gc[j] = &coarse[subsets[s * n + j]];
      }
      tree.set_grids(gf);
      const double vf = tree.all();
      tree.set_grids(gc);
      const double vc = tree.all();
      sum_fine[t] += vf;
      sum_diff[t] += std::abs(vf - vc);
    }
  });
  const double nfact = std::exp(log_factorial(n));
  for (std::size_t t = 0; t < tasks; ++t) {
    e.value += sum_fine[t];
    e.breakdown.discretization += sum_diff[t];
  }
  e.value *= nfact;
  e.breakdown.discretization *= nfact;
  e.error = e.breakdown.discretization;
  std::ostringstream os;
  os << count << " cube subsets, per-cube midpoint grid m = " << m << " (coarse " << m_coarse << ")";
  e.note = os.str();
  return e;
}

// --------------------------------------------------------------- Monte Carlo

Estimate monte_carlo(const EnsembleParams& p, std::size_t n, const Configuration& extra, const CubePartition* part,
                     std::size_t samples, std::uint64_t seed, unsigned workers, Quantity q) {
  const std::size_t d = static_cast<std::size_t>(p.box.dim());
  const std::size_t ne = extra.size();
  const std::size_t batches = (samples + kMcBatch - 1) / kMcBatch;
  struct Moments {
    double count = 0, mean = 0, m2 = 0;
  };
  std::vector<Moments> partial(batches);
  parallel_for(batches, workers, [&](std::size_t b) {
    RandomStream rng(seed, static_cast<std::uint64_t>(q), n, b);
    std::vector<double> pts((ne + n) * d);
    std::copy(extra.coords().begin(), extra.coords().end(), pts.begin());
    std::vector<CubeIndex> cells(ne + n);
    if (part)
      for (std::size_t i = 0; i < ne; ++i) cells[i] = part->cube_index_unchecked(extra.point(i));
    Moments& mo = partial[b];
    const std::size_t todo = std::min(kMcBatch, samples - b * kMcBatch);
    for (std::size_t s = 0; s < todo; ++s) {
      for (std::size_t j = ne * d; j < pts.size(); ++j) pts[j] = rng.uniform() * p.box.sides()[j % d];
      double f = 1.0;
      if (part) {
        for (std::size_t i = ne; i < ne + n; ++i) cells[i] = part->cube_index_unchecked({pts.data() + i * d, d});
        auto sorted = cells;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) f = 0.0;
      }
      if (f != 0.0) {
        const double u = p.energy.energy(pts);
        f = u == kInf ? 0.0 : std::exp(-p.beta * u);
      }
      mo.count += 1;
      const double delta = f - mo.mean;
      mo.mean += delta / mo.count;
      mo.m2 += delta * (f - mo.mean);
    }
  });
  Moments all;
  for (const auto& b : partial) {
    if (b.count == 0) continue;
    const double total = all.count + b.count;
    const double delta = b.mean - all.mean;
    all.mean += delta * b.count / total;
    all.m2 += b.m2 + delta * delta * all.count * b.count / total;
    all.count = total;
  }
  const double vol_n = std::pow(p.box.volume(), static_cast<double>(n));
  Estimate e;
  e.method = Method::monte_carlo;
  e.value = vol_n * all.mean;
  const double var = all.count > 1 ? all.m2 / (all.count - 1) : 0.0;
  e.breakdown.statistical = 3.0 * vol_n * std::sqrt(var / all.count);
  e.error = e.breakdown.statistical;
  e.note = std::to_string(samples) + " uniform samples, error at 3 sigma";
  return e;
}

// ----------------------------------------------------------------- expansion

Method term_method(const MethodPolicy& policy, std::size_t n, std::size_t d) {
  switch (policy.choice) {
    case MethodChoice::quadrature: return Method::quadrature;
    case MethodChoice::monte_carlo: return Method::monte_carlo;
    default: return n * d <= kMaxQuadratureDims ? Method::quadrature : Method::monte_carlo;
  }
}

// sum_{n <= n_max} z^n / n! I_n(extra) with the stability tail; no z^{|extra|}.
Estimate expansion(const EnsembleParams& p, const Configuration& extra, const CubePartition* part,
                   const Truncation& trunc, const MethodPolicy& policy, std::uint64_t seed, Quantity q) {
  const std::size_t d = static_cast<std::size_t>(p.box.dim());
  const double x = p.z * p.box.volume() * std::exp(p.beta * p.stability_B);
  const double eta_factor = std::exp(p.beta * p.stability_B * static_cast<double>(extra.size()));
  std::size_t n_max;
  if (trunc.n_max) {
    n_max = *trunc.n_max;
  } else {
    if (!(trunc.tolerance > 0)) throw InvalidArgument("truncation tolerance must be positive");
    n_max = default_n_max(x, trunc.tolerance / eta_factor);
  }
  double tail = p.z == 0.0 ? 0.0 : eta_factor * truncation_tail(x, n_max);
  const std::size_t capacity = packing_capacity(p);
  if (n_max >= capacity) {
    n_max = capacity;
    tail = 0.0;
  }
  if (part) {
    // Dilute terms vanish once n exceeds the number of cubes left free by eta.
    const std::size_t free = part->cube_count() - occupancy(extra, *part).size();
    if (n_max >= free) {
      n_max = free;
      tail = 0.0;
    }
  }
  Estimate e;
  e.method = Method::quadrature;
  bool any_mc = false;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0 && p.z == 0.0) break;
    if (n > capacity) break;
    const Method m = term_method(policy, n, d);
    const std::size_t budget = m == Method::monte_carlo ? policy.mc_samples : policy.quad_budget;
    const Estimate term = canonical_integral(p, n, extra, part, m, budget, seed, policy.workers, q);
    const double coef =
        n == 0 ? 1.0 : std::exp(static_cast<double>(n) * std::log(p.z) - log_factorial(n));
    e.breakdown.per_term.push_back(coef * term.value);
    e.breakdown.per_term_error.push_back(coef * term.error);
    e.value += coef * term.value;
    e.breakdown.statistical += coef * term.breakdown.statistical;
    e.breakdown.discretization += coef * term.breakdown.discretization;
    any_mc = any_mc || (n > 0 && m == Method::monte_carlo);
  }
  if (any_mc) e.method = Method::monte_carlo;
  e.breakdown.truncation_tail = tail;
  e.error = e.breakdown.statistical + e.breakdown.discretization + tail;
  e.tail_warning = tail > trunc.tolerance;
  e.note = "n_max = " + std::to_string(n_max);
  return e;
}

bool use_closed_form(const EnsembleParams& p, const MethodPolicy& policy) {
  if (policy.choice == MethodChoice::closed_form) {
    if (!p.energy.is_ideal()) throw InvalidArgument("closed_form is only available for the ideal gas");
    return true;
  }
  return policy.choice == MethodChoice::automatic && p.energy.is_ideal();
}

Estimate exact(double v, const std::string& note) {
  Estimate e;
  e.value = v;
  e.method = Method::closed_form;
  e.note = note;
  return e;
}

}  // namespace

MethodChoice parse_method(const std::string& s) {
  if (s == "auto" || s == "automatic") return MethodChoice::automatic;
  if (s == "closed_form") return MethodChoice::closed_form;
  if (s == "quadrature") return MethodChoice::quadrature;
  if (s == "mc" || s == "monte_carlo") return MethodChoice::monte_carlo;
  throw InvalidArgument("unknown method '" + s + "' (expected auto, closed_form, quadrature or mc)");
}

std::string to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::automatic: return "auto";
    case MethodChoice::closed_form: return "closed_form";
    case MethodChoice::quadrature: return "quadrature";
    case MethodChoice::monte_carlo: return "mc";
  }
  return "?";
}

double truncation_tail(double x, std::size_t n_max) {
  if (x == 0.0) return 0.0;
  const double k = static_cast<double>(n_max + 1);
  return std::exp(k * std::log(x) - std::lgamma(k + 1) + x);
}

std::size_t packing_capacity(const EnsembleParams& params) {
  const double hc = params.energy.hard_core_radius();
  if (!(hc > 0)) return std::numeric_limits<std::size_t>::max();
  // Half-open cells of side hc / sqrt(d) hold at most one particle each.
  const double side = hc / std::sqrt(static_cast<double>(params.box.dim()));
  double cells = 1;
  for (double L : params.box.sides()) cells *= std::ceil(L / side + 1e-9);
  return cells > 1e15 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(cells);
}

Estimate cell_integral(const EnsembleParams& params, const Configuration& extra, const std::vector<CubeIndex>& cells,
                       const CubePartition& part, std::size_t budget, unsigned workers) {
  check_params(params);
  check_eta(params, extra);
  check_partition(params, part);
  const std::size_t n = cells.size();
  const std::size_t d = static_cast<std::size_t>(params.box.dim());
  if (n * d > kMaxQuadratureDims) throw InvalidArgument("cell_integral is limited to 12 integration dimensions");
  if (n == 0) return exact(extra_weight(params, extra), "empty integral");
  for (auto c : cells)
    if (c >= part.cube_count()) throw InvalidArgument("cell index outside the partition");
  // Stagger: the j-th particle placed in a given cell gets m + j nodes per axis.
  std::vector<std::size_t> rank(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cells[j] == cells[i]) ++rank[i];
  auto cost = [&](std::size_t m) {
    double c = 1;
    for (std::size_t i = 0; i < n; ++i) c *= std::pow(static_cast<double>(m + rank[i]), static_cast<double>(d));
    return c;
  };
  std::size_t m = 2;
  while (cost(m + 1) <= static_cast<double>(budget)) ++m;
  const std::size_t m_coarse = std::max<std::size_t>(1, m / 2);
  auto integrate = [&](std::size_t mm) {
    std::vector<Grid> grids;
    for (std::size_t i = 0; i < n; ++i) {
      auto lo = part.lower_corner(cells[i]);
      auto hi = lo;
      for (auto& v : hi) v += part.edge();
      grids.push_back(midpoint_grid(lo, hi, mm + rank[i]));
    }
    std::vector<const Grid*> ptrs;
    for (auto& g : grids) ptrs.push_back(&g);
    const std::size_t first = grids[0].count;
    const std::size_t chunk = std::max<std::size_t>(1, (first + 255) / 256);
    const std::size_t tasks = (first + chunk - 1) / chunk;
    std::vector<double> partial(tasks, 0.0);
    parallel_for(tasks, workers, [&](std::size_t t) {
      TreeSum tree(params.energy, params.beta, extra, n);
      tree.set_grids(ptrs);
      partial[t] = tree.range(t * chunk, std::min(first, (t + 1) * chunk));
    });
    double s = 0;
    for (double v : partial) s += v;
    return s;
  };
  Estimate e;
  e.method = Method::quadrature;
  e.value = integrate(m);
  e.breakdown.discretization = std::abs(e.value - integrate(m_coarse));
  e.error = e.breakdown.discretization;
  return e;
}

std::size_t default_n_max(double x, double tol) {
  if (!(tol > 0)) throw InvalidArgument("truncation tolerance must be positive");
  for (std::size_t n = 0; n <= 400; ++n)
    if (truncation_tail(x, n) < tol) return n;
  throw NumericalRejection("truncation tail stays above the tolerance up to n = 400; z |Lambda| e^{beta B} is too large");
}

Estimate canonical_integral(const EnsembleParams& params, std::size_t n, const Configuration& extra,
                            const CubePartition* dilute_part, Method method, std::size_t budget, std::uint64_t seed,
                            unsigned workers, Quantity quantity) {
  check_params(params);
  check_eta(params, extra);
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (dilute_part) check_partition(params, *dilute_part);
  const std::size_t d = static_cast<std::size_t>(params.box.dim());
  if (method != Method::quadrature && method != Method::monte_carlo)
    throw InvalidArgument("canonical_integral supports quadrature or monte_carlo");
  if (method == Method::quadrature && n * d > kMaxQuadratureDims) {
    std::ostringstream os;
    os << "quadrature over " << n * d << " dimensions exceeds the limit of " << kMaxQuadratureDims << "; use mc";
    throw InvalidArgument(os.str());
  }
  if (dilute_part && !is_dilute(extra, *dilute_part)) {
    Estimate e;
    e.method = method;
    e.note = "extra configuration is not dilute";
    return e;
  }
  if (n == 0) {
    Estimate e = exact(extra_weight(params, extra), "empty integral");
    e.method = method;
    return e;
  }
  if (method == Method::monte_carlo) return monte_carlo(params, n, extra, dilute_part, budget, seed, workers, quantity);
  return dilute_part ? quadrature_dilute(params, n, extra, *dilute_part, budget, workers)
                     : quadrature_full(params, n, extra, budget, workers);
}

Estimate partition_function(const EnsembleParams& params, const Truncation& trunc, const MethodPolicy& policy,
                            std::uint64_t seed) {
  check_params(params);
  if (use_closed_form(params, policy)) return exact(std::exp(params.z * params.box.volume()), "exp(z |Lambda|)");
  return expansion(params, Configuration(params.box.dim()), nullptr, trunc, policy, seed, Quantity::Z);
}

Estimate dilute_partition_function(const EnsembleParams& params, const CubePartition& part, const Truncation& trunc,
                                   const MethodPolicy& policy, std::uint64_t seed) {
  check_params(params);
  check_partition(params, part);
  if (use_closed_form(params, policy)) {
    const double cell = std::pow(part.edge(), params.box.dim());
    return exact(std::pow(1 + params.z * cell, static_cast<double>(part.cube_count())), "(1 + z a^d)^N");
  }
  return expansion(params, Configuration(params.box.dim()), &part, trunc, policy, seed, Quantity::Zminus);
}

Estimate correlation_numerator(const EnsembleParams& params, const Configuration& eta, const CubePartition* part,
                               const Truncation& trunc, const MethodPolicy& policy, std::uint64_t seed) {
  check_params(params);
  check_eta(params, eta);
  if (part) check_partition(params, *part);
  const double zk = std::pow(params.z, static_cast<double>(eta.size()));
  if (part && !is_dilute(eta, *part)) return exact(0.0, "eta is not dilute");
  if (use_closed_form(params, policy)) {
    if (!part) return exact(zk * std::exp(params.z * params.box.volume()), "z^k exp(z |Lambda|)");
    const double cell = std::pow(part->edge(), params.box.dim());
    const double free = static_cast<double>(part->cube_count() - eta.size());
    return exact(zk * std::pow(1 + params.z * cell, free), "z^k (1 + z a^d)^(N - k)");
  }
  Estimate e = expansion(params, eta, part, trunc, policy, seed, part ? Quantity::rhominus_num : Quantity::rho_num);
  e.value *= zk;
  e.error *= zk;
  e.breakdown.truncation_tail *= zk;
  e.breakdown.statistical *= zk;
  e.breakdown.discretization *= zk;
  for (auto& v : e.breakdown.per_term) v *= zk;
  for (auto& v : e.breakdown.per_term_error) v *= zk;
  return e;
}

Estimate ratio(const Estimate& num, const Estimate& den) {
  const double lower = den.value - den.error;
  if (!(lower > 0)) {
    std::ostringstream os;
    os.precision(10);
    os << "denominator " << den.value << " +- " << den.error << " is not bounded away from 0";
    throw NumericalRejection(os.str());
  }
  Estimate e;
  e.method = num.method == Method::closed_form ? den.method : num.method;
  e.value = num.value / den.value;
  e.error = (num.error + std::abs(e.value) * den.error) / lower;
  e.breakdown.truncation_tail = num.breakdown.truncation_tail + den.breakdown.truncation_tail;
  e.breakdown.statistical = num.breakdown.statistical + den.breakdown.statistical;
  e.breakdown.discretization = num.breakdown.discretization + den.breakdown.discretization;
  e.tail_warning = num.tail_warning || den.tail_warning;
  return e;
}

Estimate correlation(const EnsembleParams& params, const Configuration& eta, const Truncation& trunc,
                     const MethodPolicy& policy, std::uint64_t seed) {
  check_params(params);
  check_eta(params, eta);
  if (eta.empty()) return exact(1.0, "empty eta");
  const Estimate num = correlation_numerator(params, eta, nullptr, trunc, policy, seed);
  const Estimate den = partition_function(params, trunc, policy, seed);
  return ratio(num, den);
}

Estimate dilute_correlation(const EnsembleParams& params, const Configuration& eta, const CubePartition& part,
                            const Truncation& trunc, const MethodPolicy& policy, std::uint64_t seed) {
  check_params(params);
  check_eta(params, eta);
  check_partition(params, part);
  if (!is_dilute(eta, part)) return exact(0.0, "eta is not dilute");
  if (eta.empty()) return exact(1.0, "empty eta");
  const Estimate num = correlation_numerator(params, eta, &part, trunc, policy, seed);
  const Estimate den = dilute_partition_function(params, part, trunc, policy, seed);
  return ratio(num, den);
}

}  // namespace qca
