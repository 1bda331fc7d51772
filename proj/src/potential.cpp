#include "qca/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "qca/errors.hpp"

namespace qca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AssumptionCheck check_assumption(const PairPotential::Evaluator& phi, int dim, const AssumptionA& p) {
  AssumptionCheck c;
  c.parameters_valid = p.r0 > 0 && p.R > p.r0 && p.phi0 > 0 && p.phi1 >= 0 && p.eps0 > 0 && p.s >= dim;
  if (!c.parameters_valid) return c;
  constexpr int kSamples = 500;
  for (int i = 0; i < kSamples; ++i) {
    const double t = static_cast<double>(i) / (kSamples - 1);
    const double r_core = p.r0 * std::pow(1e-3, 1.0 - t);
    const double core_bound = p.phi0 / std::pow(r_core, p.s);
    const double v_core = phi(r_core);
    ++c.core_samples;
    if (!(v_core >= core_bound * (1 - 1e-12))) ++c.core_violations;

    const double r_tail = p.R * std::pow(1e3, t);
    const double tail_bound = -p.phi1 / std::pow(r_tail, dim + p.eps0);
    const double v_tail = phi(r_tail);
    ++c.tail_samples;
    if (!(v_tail >= tail_bound - 1e-12 * std::abs(tail_bound))) ++c.tail_violations;
  }
  return c;
}

double positive_part(double v) { return v > 0 ? v : 0.0; }
double negative_part(double v) { return v < 0 ? -v : 0.0; }

// Smallest and largest distance between a point of the reference cube and a
// point of the cube shifted by k (closures).
std::pair<double, double> shell_distance_range(const std::vector<int>& k, double a) {
  double lo2 = 0, hi2 = 0;
  for (int ki : k) {
    const double lo = std::max(0, std::abs(ki) - 1) * a;
    const double hi = (std::abs(ki) + 1) * a;
    lo2 += lo * lo;
    hi2 += hi * hi;
  }
  return {std::sqrt(lo2), std::sqrt(hi2)};
}

// Number of lattice vectors that are signed permutations of a sorted
// nonnegative tuple.
double orbit_size(const std::vector<int>& sorted) {
  double count = 1;
  const int d = static_cast<int>(sorted.size());
  for (int i = 2; i <= d; ++i) count *= i;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    for (std::size_t f = 2; f <= j - i; ++f) count /= static_cast<double>(f);
    i = j;
  }
  for (int v : sorted)
    if (v != 0) count *= 2;
  return count;
}

// Visits every nondecreasing tuple 0 <= k_1 <= ... <= k_d <= cutoff.
template <class F>
void for_each_sorted_shell(int dim, int cutoff, F&& visit) {
  std::vector<int> k(static_cast<std::size_t>(dim), 0);
  while (true) {
    visit(k);
    int i = dim - 1;
    while (i >= 0 && k[static_cast<std::size_t>(i)] == cutoff) --i;
    if (i < 0) break;
    const int v = k[static_cast<std::size_t>(i)] + 1;
    for (int j = i; j < dim; ++j) k[static_cast<std::size_t>(j)] = v;
  }
}

double radial_sup(const std::function<double(double)>& g, double lo, double hi) {
  if (hi <= lo) return g(lo);
  const double bounds_lo[1] = {lo};
  const double bounds_hi[1] = {hi};
  RefinementPolicy policy;
  policy.initial_nodes = 33;
  policy.max_points = 1u << 14;
  return grid_extremum(bounds_lo, bounds_hi, [&](std::span<const double> x) { return g(x[0]); },
                       ExtremumKind::supremum, policy)
      .value;
}

}  // namespace

PairPotential::PairPotential(std::string name, int dim, Evaluator phi, AssumptionA params, double hard_core_radius)
    : name_(std::move(name)), dim_(dim), phi_(std::move(phi)), params_(params), hard_core_radius_(hard_core_radius) {
  if (dim_ < 1) throw InvalidArgument("potential dimension must be positive");
  if (!phi_) throw InvalidArgument("potential evaluator is empty");
  check_ = check_assumption(phi_, dim_, params_);
}

PairPotential inverse_power(int dim, double phi0, double s) {
  if (!(phi0 > 0) || !(s > 0)) throw InvalidArgument("inverse_power needs phi0 > 0 and s > 0");
  AssumptionA p{.phi0 = phi0, .phi1 = 0.0, .r0 = 1.0, .R = 2.0, .s = s, .eps0 = 1.0};
  return PairPotential("inverse_power", dim, [phi0, s](double r) { return phi0 / std::pow(r, s); }, p);
}

PairPotential hard_core(int dim, double sigma) {
  if (!(sigma > 0)) throw InvalidArgument("hard_core needs sigma > 0");
  AssumptionA p{.phi0 = 1.0, .phi1 = 0.0, .r0 = sigma / 2, .R = sigma, .s = static_cast<double>(dim), .eps0 = 1.0};
  return PairPotential("hard_core", dim, [sigma](double r) { return r < sigma ? kInf : 0.0; }, p, sigma);
}

PairPotential hard_core_plus_well(int dim, double sigma, double depth, double range) {
  if (!(sigma > 0) || !(depth > 0) || !(range > sigma))
    throw InvalidArgument("hard_core_plus_well needs sigma > 0, depth > 0, range > sigma");
  AssumptionA p{.phi0 = 1.0,
                .phi1 = depth * std::pow(range, dim + 1.0),
                .r0 = sigma / 2,
                .R = sigma,
                .s = static_cast<double>(dim),
                .eps0 = 1.0};
  return PairPotential(
      "hard_core_plus_well", dim,
      [sigma, depth, range](double r) { return r < sigma ? kInf : (r < range ? -depth : 0.0); }, p, sigma);
}

PairPotential power_core_exp_tail(int dim, double phi0, double s, double phi1, double kappa) {
  if (!(phi0 > 0) || !(s > 0) || !(phi1 >= 0) || !(kappa > 0))
    throw InvalidArgument("power_core_exp_tail needs phi0 > 0, s > 0, phi1 >= 0, kappa > 0");
  // Core: phi >= (phi0/2)/r^s wherever phi1 r^s e^{-kappa r} <= phi0/2; that
  // product peaks at r = s/kappa, so the admissible core is [0, r0].
  auto h = [&](double r) { return phi1 * std::pow(r, s) * std::exp(-kappa * r); };
  double r0 = s / kappa;
  if (h(r0) > phi0 / 2) {
    double lo = 0, hi = r0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) <= phi0 / 2 ? lo : hi) = mid;
    }
    r0 = lo;
  }
  const double q = dim + 1.0;
  const double tail = phi1 * std::pow(q / kappa, q) * std::exp(-q);
  AssumptionA p{.phi0 = phi0 / 2, .phi1 = tail, .r0 = r0, .R = 2 * r0, .s = s, .eps0 = 1.0};
  return PairPotential(
      "power_core_exp_tail", dim,
      [phi0, s, phi1, kappa](double r) { return phi0 / std::pow(r, s) - phi1 * std::exp(-kappa * r); }, p);
}

PairPotential zero_potential(int dim) {
  return PairPotential("ideal", dim, [](double) { return 0.0; }, AssumptionA{.phi1 = 0.0});
}

std::pair<double, double> phi_split(const PairPotential& pot, double r) {
  if (!(r > 0)) throw InvalidArgument("phi_split needs r > 0");
  const double v = pot(r);
  return {positive_part(v), negative_part(v)};
}

GridExtremum in_cube_repulsion(const PairPotential& pot, double a) {
  if (!(a > 0)) throw InvalidArgument("cube edge must be positive");
  const double diameter = a * std::sqrt(static_cast<double>(pot.dim()));
  auto plus = [&](double r) { return positive_part(pot(r)); };
  // Distances realised inside one cube fill (0, a sqrt(d)); phi+ depends on the
  // pair only through that distance.
  constexpr int kProbe = 1000;
  bool monotone = true;
  double prev = kInf;
  for (int i = 0; i < kProbe && monotone; ++i) {
    const double r = diameter * std::pow(1e-6, 1.0 - static_cast<double>(i) / (kProbe - 1));
    const double v = plus(r);
    if (v > prev) monotone = false;
    prev = v;
  }
  if (monotone) return {plus(diameter), 0.0, 1, true};
  const double lo[1] = {diameter * 1e-9};
  const double hi[1] = {diameter};
  RefinementPolicy policy;
  policy.initial_nodes = 65;
  policy.max_points = 1u << 16;
  return grid_extremum(lo, hi, [&](std::span<const double> x) { return plus(x[0]); }, ExtremumKind::infimum,
                       policy);
}

GridExtremum b_of_a(const PairPotential& pot, double a) {
  const double a_max = pot.params().r0 / std::sqrt(static_cast<double>(pot.dim()));
  if (!(a > 0) || a > a_max * (1 + 1e-12)) {
    std::ostringstream os;
    os << "b(a) needs 0 < a <= r0/sqrt(d) = " << a_max << ", got a = " << a;
    throw InvalidArgument(os.str());
  }
  return in_cube_repulsion(pot, a);
}

double lattice_tail_bound(int dim, double a, int cutoff, double amplitude, double alpha) {
  if (cutoff < 1 || !(alpha > dim)) return kInf;
  // Shell j (max-norm) has at most 2d (2j+1)^(d-1) <= 2d 5^(d-1) (j-1)^(d-1)
  // cubes at distance >= (j-1) a; sum over j > cutoff by an integral.
  const double p = alpha - dim + 1.0;
  const double c = cutoff;
  const double series = std::pow(c, -p) + std::pow(c, 1.0 - p) / (p - 1.0);
  return 2.0 * dim * std::pow(5.0, dim - 1) * amplitude * std::pow(a, -alpha) * series;
}

Estimate upsilon_eps(const PairPotential& pot, double a, double eps, int cutoff) {
  if (!(a > 0)) throw InvalidArgument("cube edge must be positive");
  if (cutoff < 1) throw InvalidArgument("upsilon_eps needs cutoff >= 1");
  const auto& p = pot.params();
  if (!(eps >= 0) || !(eps < p.eps0)) {
    std::ostringstream os;
    os << "upsilon_eps needs 0 <= eps < eps0 = " << p.eps0 << ", got " << eps;
    throw InvalidArgument(os.str());
  }
  auto g = [&](double r) {
    const double minus = negative_part(pot(r));
    if (minus == 0.0) return 0.0;
    return eps == 0.0 ? minus : minus * std::pow(r, eps);
  };
  Estimate out;
  out.method = Method::lattice_sum;
  std::vector<double> per_shell(static_cast<std::size_t>(cutoff) + 1, 0.0);
  for_each_sorted_shell(pot.dim(), cutoff, [&](const std::vector<int>& k) {
    const auto [lo, hi] = shell_distance_range(k, a);
    const double sup = radial_sup(g, lo, hi);
    if (sup > 0) per_shell[static_cast<std::size_t>(k.back())] += orbit_size(k) * sup;
  });
  for (double v : per_shell) out.value += v;
  out.breakdown.per_term = std::move(per_shell);
  if (out.value == 0.0) {
    // Sample the tail as well: a potential with phi- == 0 near the box may
    // still attract further out.
    bool attractive = false;
    for (int i = 0; i < 200 && !attractive; ++i)
      attractive = g(cutoff * a * std::pow(1e3, i / 199.0)) > 0;
    if (!attractive) return out;
  }
  if (cutoff * a >= p.R) {
    out.breakdown.truncation_tail = lattice_tail_bound(pot.dim(), a, cutoff, p.phi1, pot.dim() + p.eps0 - eps);
  } else {
    out.breakdown.truncation_tail = kInf;
    out.note = "cutoff * a < R: no declared decay covers the omitted shells";
  }
  out.error = out.breakdown.truncation_tail;
  return out;
}

DeltaSplit delta_decompose(const PairPotential& pot, double delta) {
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
  auto phi = pot.evaluator();
  AssumptionA rep = pot.params();
  rep.phi0 *= 1 - delta;
  AssumptionA st = pot.params();
  st.phi0 *= delta;
  PairPotential repulsive(pot.name() + "_delta_plus", pot.dim(),
                          [phi, delta](double r) { return (1 - delta) * positive_part(phi(r)); }, rep,
                          pot.hard_core_radius());
  PairPotential stable(
      pot.name() + "_delta_st", pot.dim(),
      [phi, delta](double r) {
        const double v = phi(r);
        return delta * positive_part(v) - negative_part(v);
      },
      st, pot.hard_core_radius());
  return {std::move(repulsive), std::move(stable)};
}

StabilityConstants sss_constants(const PairPotential& pot, double a, int cutoff) {
  const int shells = std::max(cutoff, static_cast<int>(std::ceil(pot.params().R / a)));
  const double b = in_cube_repulsion(pot, a).value;
  const Estimate ups = upsilon_eps(pot, a, 0.0, shells);
  const double upsilon = ups.upper();
  if (!(b > 2 * upsilon)) {
    std::ostringstream os;
    os.precision(10);
    os << "strong superstability constants need b(a) > 2 upsilon0(a); got b = " << b << ", upsilon0 = " << upsilon
       << " at a = " << a << " (try a smaller edge)";
    throw NumericalRejection(os.str());
  }
  StabilityConstants c;
  c.a = a;
  c.b = b;
  c.upsilon0 = upsilon;
  c.A = (b - 2 * upsilon) / 4;
  c.B = upsilon / 2;
  c.m = 2;
  return c;
}

StabilityConstants AStar::constants() const {
  StabilityConstants c;
  c.a = a_star;
  c.b = b;
  c.upsilon0 = upsilon0;
  c.A = (b - 2 * upsilon0) / 4;
  c.B = upsilon0 / 2;
  c.delta = delta;
  c.a_star = a_star;
  c.B_delta = B_delta;
  return c;
}

AStar find_a_star(const PairPotential& pot, double delta, std::optional<double> lo_opt,
                  std::optional<double> hi_opt, double rel_tol, int cutoff) {
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
  const double lo = lo_opt.value_or(pot.params().r0 / 100);
  const double hi = hi_opt.value_or(pot.params().R);
  if (!(lo > 0 && hi > lo)) throw InvalidArgument("find_a_star needs 0 < lo < hi");
  struct Sample {
    double b, upsilon, g;
  };
  auto eval = [&](double a) {
    const int shells = std::max(cutoff, static_cast<int>(std::ceil(pot.params().R / a)));
    const double b = in_cube_repulsion(pot, a).value;
    const double ups = upsilon_eps(pot, a, 0.0, shells).value;
    return Sample{b, ups, delta * b / 4 - ups / 2};
  };
  constexpr int kScan = 64;
  double left = lo;
  Sample s_left = eval(lo);
  if (!(s_left.g > 0)) {
    std::ostringstream os;
    os << "find_a_star: g(lo) = " << s_left.g << " is not positive at lo = " << lo;
    throw NumericalRejection(os.str());
  }
  std::optional<double> right;
  for (int i = 1; i < kScan && !right; ++i) {
    const double a = lo * std::pow(hi / lo, static_cast<double>(i) / (kScan - 1));
    const Sample s = eval(a);
    if (s.g > 0) {
      left = a;
      s_left = s;
    } else {
      right = a;
    }
  }
  if (!right) {
    std::ostringstream os;
    os << "find_a_star: g(a) = delta b/4 - upsilon0/2 keeps its sign on [" << lo << ", " << hi
       << "]; g(hi) = " << s_left.g << ", b(hi) = " << s_left.b << ", upsilon0(hi) = " << s_left.upsilon;
    throw NumericalRejection(os.str());
  }
  double r = *right;
  while (r - left > rel_tol * left) {
    const double mid = 0.5 * (left + r);
    const Sample s = eval(mid);
    if (s.g > 0) {
      left = mid;
      s_left = s;
    } else {
      r = mid;
    }
  }
  AStar out;
  out.delta = delta;
  out.a_star = left;
  out.b = s_left.b;
  out.upsilon0 = s_left.upsilon;
  out.residual = s_left.g;
  out.residual_threshold = 1e-3 * delta * s_left.b / 4;
  out.B_delta = s_left.upsilon / 2;
  return out;
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double pair_energy_raw(const PairPotential::Evaluator& phi, std::span<const double> coords, int dim) {
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t n = coords.size() / d;
  double u = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = phi(distance(coords.subspan(i * d, d), coords.subspan(j * d, d)));
      if (v == kInf) return kInf;
      u += v;
    }
  return u;
}

double pair_energy(const PairPotential& pot, const Configuration& config) {
  if (config.dim() != pot.dim()) throw InvalidArgument("configuration and potential dimensions differ");
  return pair_energy_raw(pot.evaluator(), config.coords(), config.dim());
}

double pair_interaction(const PairPotential& pot, const Configuration& eta, const Configuration& gamma) {
  if (eta.dim() != pot.dim() || gamma.dim() != pot.dim())
    throw InvalidArgument("configuration and potential dimensions differ");
  if (eta.intersects(gamma)) throw InvalidArgument("pair_interaction needs disjoint configurations");
  double w = 0;
  for (std::size_t i = 0; i < eta.size(); ++i)
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      const double v = pot(distance(eta.point(i), gamma.point(j)));
      if (v == kInf) return kInf;
      w += v;
    }
  return w;
}

}  // namespace qca
