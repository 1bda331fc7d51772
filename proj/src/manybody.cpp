#include "qca/manybody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qca/errors.hpp"
#include "qca/parallel.hpp"

namespace qca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls visit(indices) for every increasing index tuple of length k from [0, n).
template <class F>
bool for_each_combination(std::size_t n, std::size_t k, F&& visit) {
  if (k > n) return true;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (!visit(idx)) return false;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return true;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Visits every lattice offset vector with max-norm <= cutoff in `dims` integer
// coordinates.
template <class F>
void for_each_offset(std::size_t dims, int cutoff, F&& visit) {
  std::vector<std::int64_t> k(dims, -cutoff);
  while (true) {
    visit(k);
    std::size_t i = 0;
    while (i < dims && ++k[i] > cutoff) k[i++] = -cutoff;
    if (i == dims) break;
  }
}

double psi_sup(const std::vector<std::int64_t>& k, double a, double range, double alpha) {
  double r2 = 0;
  for (auto v : k) {
    const double gap = static_cast<double>(std::max<std::int64_t>(0, std::abs(v) - 1)) * a;
    r2 += gap * gap;
  }
  const double r = std::sqrt(r2);
  return r <= range ? 1.0 : std::pow(range / r, alpha);
}

double cube_distance(const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& y, double a) {
  double r2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gap = static_cast<double>(std::max<std::int64_t>(0, std::abs(x[i] - y[i]) - 1)) * a;
    r2 += gap * gap;
  }
  return std::sqrt(r2);
}

double binomial(int k, int m) {
  if (m < 0 || m > k) return 0.0;
  double c = 1;
  for (int i = 1; i <= m; ++i) c = c * (k - m + i) / i;
  return c;
}

}  // namespace

ManyBodyFamily::ManyBodyFamily(int dim, std::vector<Evaluator> bodies, std::optional<DecayMetadata> decay,
                               double hard_core_radius)
    : dim_(dim), bodies_(std::move(bodies)), decay_(std::move(decay)), hard_core_radius_(hard_core_radius) {
  if (dim_ < 1) throw InvalidArgument("family dimension must be positive");
  if (bodies_.empty()) throw InvalidArgument("a many-body family needs at least V_2");
  for (const auto& b : bodies_)
    if (!b) throw InvalidArgument("empty many-body evaluator");
  if (decay_ && decay_->amplitude.size() < bodies_.size() + 2) decay_->amplitude.resize(bodies_.size() + 2, 0.0);
}

int CubeTuple::bodies() const { return std::accumulate(multiplicity.begin(), multiplicity.end(), 0); }

ManyBodyFamily pair_only(const PairPotential& pot) {
  const int d = pot.dim();
  const auto& p = pot.params();
  auto phi = pot.evaluator();
  double near = 0;
  for (int i = 0; i <= 4096; ++i) {
    const double r = p.R * (i == 0 ? 1e-9 : i / 4096.0);
    const double v = phi(r);
    if (v < 0) near = std::max(near, -v);
  }
  DecayMetadata decay;
  decay.range = p.R;
  decay.eps0 = p.eps0;
  decay.amplitude = {0.0, 0.0, std::max(near, p.phi1 / std::pow(p.R, d + p.eps0))};
  std::vector<ManyBodyFamily::Evaluator> bodies{[phi, d](std::span<const double> x) {
    return phi(distance(x.subspan(0, static_cast<std::size_t>(d)),
                        x.subspan(static_cast<std::size_t>(d), static_cast<std::size_t>(d))));
  }};
  return ManyBodyFamily(d, std::move(bodies), decay, pot.hard_core_radius());
}

ManyBodyFamily pair_plus_triple(const PairPotential& pot, double strength, double range) {
  if (!(range > 0)) throw InvalidArgument("triple_range must be positive");
  ManyBodyFamily base = pair_only(pot);
  const int d = pot.dim();
  const std::size_t du = static_cast<std::size_t>(d);
  std::vector<ManyBodyFamily::Evaluator> bodies{base.body(2), [strength, range, du](std::span<const double> x) {
    const double r12 = distance(x.subspan(0, du), x.subspan(du, du));
    const double r13 = distance(x.subspan(0, du), x.subspan(2 * du, du));
    const double r23 = distance(x.subspan(du, du), x.subspan(2 * du, du));
    return strength * std::exp(-(r12 + r13 + r23) / range);
  }};
  DecayMetadata decay = *base.decay();
  const double alpha = d + decay.eps0;
  // e^{-r/range} <= c psi(r): c = max(1, sup_{r >= R} e^{-r/range} (r/R)^alpha).
  const double r_peak = std::max(alpha * range, decay.range);
  const double c = std::max(1.0, std::exp(-r_peak / range) * std::pow(r_peak / decay.range, alpha));
  decay.amplitude.resize(4, 0.0);
  decay.amplitude[3] = strength < 0 ? -strength * c * c : 0.0;
  return ManyBodyFamily(d, std::move(bodies), decay, pot.hard_core_radius());
}

double mb_energy_raw(const ManyBodyFamily& fam, std::span<const double> coords) {
  const std::size_t d = static_cast<std::size_t>(fam.dim());
  const std::size_t n = coords.size() / d;
  double u = 0;
  std::vector<double> scratch;
  for (int p = 2; p <= std::min<int>(static_cast<int>(n), fam.p_max()); ++p) {
    const auto& V = fam.body(p);
    scratch.resize(static_cast<std::size_t>(p) * d);
    const bool finite = for_each_combination(n, static_cast<std::size_t>(p), [&](const std::vector<std::size_t>& idx) {
      for (std::size_t j = 0; j < idx.size(); ++j)
        std::copy_n(coords.begin() + static_cast<std::ptrdiff_t>(idx[j] * d), d, scratch.begin() + static_cast<std::ptrdiff_t>(j * d));
      const double v = V(scratch);
      if (v == kInf) return false;
      u += v;
      return true;
    });
    if (!finite) return kInf;
  }
  return u;
}

double mb_energy(const ManyBodyFamily& fam, const Configuration& config) {
  if (config.dim() != fam.dim()) throw InvalidArgument("configuration and family dimensions differ");
  return mb_energy_raw(fam, config.coords());
}

double mb_interaction_mixed(const ManyBodyFamily& fam, const Configuration& eta, const Configuration& gamma) {
  if (eta.intersects(gamma)) throw InvalidArgument("mb_interaction needs disjoint configurations");
  const Configuration all = eta.united(gamma);
  const std::size_t d = static_cast<std::size_t>(fam.dim());
  const std::size_t n = all.size(), n_eta = eta.size();
  double w = 0;
  std::vector<double> scratch;
  for (int p = 2; p <= std::min<int>(static_cast<int>(n), fam.p_max()); ++p) {
    scratch.resize(static_cast<std::size_t>(p) * d);
    const bool finite = for_each_combination(n, static_cast<std::size_t>(p), [&](const std::vector<std::size_t>& idx) {
      const bool has_eta = idx.front() < n_eta;
      const bool has_gamma = idx.back() >= n_eta;
      if (!has_eta || !has_gamma) return true;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        auto pt = all.point(idx[j]);
        std::copy(pt.begin(), pt.end(), scratch.begin() + static_cast<std::ptrdiff_t>(j * d));
      }
      const double v = fam.body(p)(scratch);
      if (v == kInf) return false;
      w += v;
      return true;
    });
    if (!finite) return kInf;
  }
  return w;
}

double mb_interaction(const ManyBodyFamily& fam, const Configuration& eta, const Configuration& gamma) {
  if (eta.intersects(gamma)) throw InvalidArgument("mb_interaction needs disjoint configurations");
  if (eta.empty() || gamma.empty()) return 0.0;
  const double u_all = mb_energy(fam, eta.united(gamma));
  const double u_eta = mb_energy(fam, eta);
  const double u_gamma = mb_energy(fam, gamma);
  if (std::isinf(u_all) || std::isinf(u_eta) || std::isinf(u_gamma)) return mb_interaction_mixed(fam, eta, gamma);
  return u_all - u_eta - u_gamma;
}

GridExtremum I_sup(const ManyBodyFamily& fam, const CubeTuple& tuple, double a) {
  if (tuple.cubes.size() != tuple.multiplicity.size() || tuple.cubes.empty())
    throw InvalidArgument("cube tuple needs one multiplicity per cube");
  const int p = tuple.bodies();
  if (p < 2 || p > fam.p_max()) {
    std::ostringstream os;
    os << "cube tuple carries " << p << " bodies; the family has p_max = " << fam.p_max();
    throw InvalidArgument(os.str());
  }
  const std::size_t d = static_cast<std::size_t>(fam.dim());
  std::vector<double> lo, hi;
  for (std::size_t j = 0; j < tuple.cubes.size(); ++j) {
    if (tuple.multiplicity[j] < 1) throw InvalidArgument("multiplicities must be >= 1");
    if (tuple.cubes[j].size() != d) throw InvalidArgument("cube lattice vector has wrong dimension");
    for (int copy = 0; copy < tuple.multiplicity[j]; ++copy)
      for (std::size_t i = 0; i < d; ++i) {
        lo.push_back(static_cast<double>(tuple.cubes[j][i]) * a);
        hi.push_back(static_cast<double>(tuple.cubes[j][i] + 1) * a);
      }
  }
  const auto& V = fam.body(p);
  RefinementPolicy policy;
  policy.max_points = 1u << 16;
  return grid_extremum(
      lo, hi,
      [&](std::span<const double> x) {
        const double v = V(x);
        return v < 0 ? -v : 0.0;
      },
      ExtremumKind::supremum, policy);
}

GridExtremum I_sup(const ManyBodyFamily& fam, const std::vector<CubeIndex>& cubes, const std::vector<int>& k,
                   const CubePartition& part) {
  CubeTuple t;
  for (auto c : cubes) t.cubes.push_back(part.lattice(c));
  t.multiplicity = k;
  return I_sup(fam, t, part.edge());
}

std::vector<Estimate> attraction_sums(const ManyBodyFamily& fam, double a, int cutoff) {
  if (!fam.decay()) throw InvalidArgument("attraction sums need decay metadata for a sound tail bound");
  if (cutoff < 1) throw InvalidArgument("cutoff must be >= 1");
  if (!(a > 0)) throw InvalidArgument("cube edge must be positive");
  const auto& decay = *fam.decay();
  const int d = fam.dim();
  const double alpha = d + decay.eps0;
  double s_in = 0;
  for_each_offset(static_cast<std::size_t>(d), cutoff,
                  [&](const std::vector<std::int64_t>& k) { s_in += psi_sup(k, a, decay.range, alpha); });
  const double s_tail = lattice_tail_bound(d, a, cutoff, std::pow(decay.range, alpha), alpha);

  std::vector<Estimate> out;
  for (int p = 2; p <= fam.p_max(); ++p) {
    Estimate e;
    e.method = Method::lattice_sum;
    const std::size_t extra = static_cast<std::size_t>(p - 1);
    // Offsets of the p-1 extra cubes, flattened; one task per offset of the
    // first extra cube keeps the reduction order fixed.
    const std::size_t side = static_cast<std::size_t>(2 * cutoff + 1);
    std::size_t first_offsets = 1;
    for (int i = 0; i < d; ++i) first_offsets *= side;
    std::vector<double> partial(first_offsets, 0.0);
    parallel_for(first_offsets, 0, [&](std::size_t task) {
      std::vector<std::int64_t> first(static_cast<std::size_t>(d));
      std::size_t t = task;
      for (int i = 0; i < d; ++i) {
        first[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(t % side) - cutoff;
        t /= side;
      }
      CubeTuple tuple;
      tuple.cubes.assign(1 + extra, std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
      tuple.multiplicity.assign(1 + extra, 1);
      tuple.cubes[1] = first;
      double sum = 0;
      for_each_offset((extra - 1) * static_cast<std::size_t>(d), cutoff, [&](const std::vector<std::int64_t>& rest) {
        for (std::size_t j = 1; j < extra; ++j)
          for (int i = 0; i < d; ++i)
            tuple.cubes[1 + j][static_cast<std::size_t>(i)] = rest[(j - 1) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
        sum += I_sup(fam, tuple, a).value;
      });
      partial[task] = sum;
    });
    for (double v : partial) e.value += v;
    const double amp = decay.amplitude[static_cast<std::size_t>(p)];
    e.breakdown.truncation_tail =
        amp == 0.0 ? 0.0 : amp * (std::pow(s_in + s_tail, p - 1) - std::pow(s_in, p - 1));
    e.error = e.breakdown.truncation_tail;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

// Bound on sum_{p > p_max} weight^p I_p from the declared geometric decay.
double bodies_tail(const ManyBodyFamily& fam, double a, int cutoff, double weight) {
  const auto& decay = *fam.decay();
  if (decay.tail_ratio == 0.0) return 0.0;
  const int d = fam.dim();
  const double alpha = d + decay.eps0;
  double s_all = lattice_tail_bound(d, a, cutoff, std::pow(decay.range, alpha), alpha);
  for_each_offset(static_cast<std::size_t>(d), cutoff,
                  [&](const std::vector<std::int64_t>& k) { s_all += psi_sup(k, a, decay.range, alpha); });
  const double q = weight * decay.tail_ratio * s_all;
  if (q >= 1) return kInf;
  const int pm = fam.p_max();
  return std::pow(weight, pm) * decay.amplitude[static_cast<std::size_t>(pm)] * std::pow(s_all, pm - 1) * q / (1 - q);
}

}  // namespace

Estimate I_bar(const ManyBodyFamily& fam, double a, int cutoff) {
  const auto sums = attraction_sums(fam, a, cutoff);
  Estimate out;
  out.method = Method::lattice_sum;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double w = std::pow(2.0, static_cast<double>(i + 2));
    out.value += w * sums[i].value;
    out.breakdown.per_term.push_back(sums[i].value);
    out.breakdown.per_term_error.push_back(sums[i].error);
    out.breakdown.truncation_tail += w * sums[i].error;
  }
  out.breakdown.truncation_tail += bodies_tail(fam, a, cutoff, 2.0);
  out.error = out.breakdown.truncation_tail;
  return out;
}

StabilityConstants lemma21_constants(const ManyBodyFamily& fam, double a, int cutoff) {
  const auto sums = attraction_sums(fam, a, cutoff);
  const std::size_t d = static_cast<std::size_t>(fam.dim());
  std::vector<double> lo(2 * d, 0.0), hi(2 * d, a);
  const auto& V2 = fam.body(2);
  const double v22 = grid_extremum(
                         lo, hi,
                         [&](std::span<const double> x) {
                           const double v = V2(x);
                           return v > 0 ? v : 0.0;
                         },
                         ExtremumKind::infimum)
                         .value;
  double weighted = bodies_tail(fam, a, cutoff, 4.0), plain = bodies_tail(fam, a, cutoff, 1.0);
  double ibar = bodies_tail(fam, a, cutoff, 2.0);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double p = static_cast<double>(i + 2);
    weighted += std::pow(4.0, p) * sums[i].upper();
    plain += sums[i].upper();
    ibar += std::pow(2.0, p) * sums[i].upper();
  }
  const double A = v22 - 2 * weighted;
  if (!(A > 0)) {
    std::ostringstream os;
    os.precision(10);
    os << "many-body constants need v_2^2(a) > 2 sum 4^p I_p; got v_2^2 = " << v22 << ", attraction = " << weighted
       << " at a = " << a << " (try a smaller edge)";
    throw NumericalRejection(os.str());
  }
  StabilityConstants c;
  c.a = a;
  c.b = v22;
  c.upsilon0 = ibar;
  c.A = A;
  c.B = plain;
  c.m = 2;
  return c;
}

A5Report check_a5(const ManyBodyFamily& fam, double a, std::size_t samples, const std::vector<A5Instance>& instances,
                  std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("check_a5 needs samples >= 1");
  if (!(a > 0)) throw InvalidArgument("cube edge must be positive");
  A5Report report;
  const std::size_t d = static_cast<std::size_t>(fam.dim());
  for (int p = 2; p <= fam.p_max(); ++p) {
    RandomStream rng(seed, 0xA5, static_cast<std::uint64_t>(p), 0);
    std::vector<double> x(static_cast<std::size_t>(p) * d);
    for (std::size_t s = 0; s < samples; ++s) {
      for (auto& v : x) v = a * rng.uniform();
      const double v = fam.body(p)(x);
      ++report.in_cube_samples;
      if (v < 0) report.in_cube_violations.push_back({p, x, v});
    }
  }

  for (const auto& inst : instances) {
    const std::size_t N = inst.cubes.size();
    if (N == 0 || inst.k.size() != N) throw InvalidArgument("A5 instance needs one multiplicity per cube");
    const int p = std::accumulate(inst.k.begin(), inst.k.end(), 0);
    if (static_cast<int>(N) >= p) throw InvalidArgument("A5 instance needs N < p");
    if (p > fam.p_max()) throw InvalidArgument("A5 instance exceeds p_max");

    CubeTuple base{inst.cubes, inst.k};
    std::vector<double> lo, hi;
    for (std::size_t j = 0; j < N; ++j)
      for (int c = 0; c < inst.k[j]; ++c)
        for (std::size_t i = 0; i < d; ++i) {
          lo.push_back(static_cast<double>(inst.cubes[j][i]) * a);
          hi.push_back(static_cast<double>(inst.cubes[j][i] + 1) * a);
        }
    const auto& Vp = fam.body(p);
    const double lhs = grid_extremum(
                           lo, hi,
                           [&](std::span<const double> x) {
                             const double v = Vp(x);
                             return v > 0 ? v : 0.0;
                           },
                           ExtremumKind::infimum)
                           .value;

    double rhs = 0;
    std::vector<int> worst_map;
    std::size_t worst_n = 0;
    for (int l = 0; l <= inst.l_max; ++l) {
      const int bodies = p + l;
      if (bodies > fam.p_max()) break;
      // m_j in [1, k_j]; n = p + l - sum m >= 1.
      std::vector<int> m(N, 1);
      while (true) {
        const int msum = std::accumulate(m.begin(), m.end(), 0);
        const int n = bodies - msum;
        if (n >= 1) {
          double coeff = std::pow(2.0 * p, n);
          for (std::size_t j = 0; j < N; ++j) coeff *= binomial(inst.k[j], m[j]);
          CubeTuple t;
          t.cubes = inst.cubes;
          t.multiplicity = m;
          t.cubes.resize(N + static_cast<std::size_t>(n), std::vector<std::int64_t>(d, 0));
          t.multiplicity.resize(N + static_cast<std::size_t>(n), 1);
          // Every map pi: {1..n} -> {1..N}; keep the largest weighted sum.
          std::size_t maps = 1;
          for (int i = 0; i < n; ++i) maps *= N;
          double best = 0;
          std::vector<int> best_map;
          for (std::size_t code = 0; code < maps; ++code) {
            std::vector<int> pi(static_cast<std::size_t>(n));
            std::size_t c = code;
            for (auto& v : pi) {
              v = static_cast<int>(c % N);
              c /= N;
            }
            double sum = 0;
            for_each_offset(static_cast<std::size_t>(n) * d, inst.cutoff, [&](const std::vector<std::int64_t>& off) {
              double weight = 1;
              for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
                for (std::size_t ax = 0; ax < d; ++ax) t.cubes[N + i][ax] = inst.cubes[0][ax] + off[i * d + ax];
                const double dist = cube_distance(t.cubes[N + i], inst.cubes[static_cast<std::size_t>(pi[i])], a);
                weight *= 1 + std::pow(dist, inst.eps);
              }
              sum += I_sup(fam, t, a).value * weight;
            });
            if (code == 0 || sum > best) {
              best = sum;
              best_map = pi;
            }
          }
          rhs += 2 * coeff * best;
          if (static_cast<std::size_t>(n) >= worst_n) {
            worst_n = static_cast<std::size_t>(n);
            worst_map = best_map;
          }
        }
        std::size_t j = 0;
        while (j < N && ++m[j] > inst.k[j]) m[j++] = 1;
        if (j == N) break;
      }
    }
    report.margins.push_back({p, inst.k, lhs, rhs, lhs - rhs, worst_map});
  }
  return report;
}

}  // namespace qca
