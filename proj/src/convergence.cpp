#include "qca/convergence.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qca/errors.hpp"
#include "qca/manybody.hpp"

namespace qca {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Estimate product(const Estimate& x, const Estimate& y) {
  Estimate e;
  e.method = x.method == Method::closed_form ? y.method : x.method;
  e.value = x.value * y.value;
  e.error = std::abs(x.value) * y.error + std::abs(y.value) * x.error + x.error * y.error;
  return e;
}

// Number of particles a cube may receive so that dense cubes hold at least two
// points of eta u x and the others at most one.
struct CellRule {
  std::size_t min = 0, max = 0;
};

}  // namespace

Estimate epsilon1(double a, int dim, double z, double beta, const StabilityConstants& c, double upsilon_star,
                  std::size_t n_cap) {
  if (!(a > 0)) throw InvalidArgument("cube edge must be positive");
  if (!(z >= 0)) throw InvalidArgument("fugacity must be >= 0");
  if (!(beta > 0)) throw InvalidArgument("beta must be positive");
  if (!(c.A > 0)) {
    std::ostringstream os;
    os << "epsilon1 needs A(a) > 0; got A = " << c.A;
    throw NumericalRejection(os.str());
  }
  if (n_cap < 2) throw InvalidArgument("n_cap must be >= 2");
  Estimate e;
  e.method = Method::series;
  if (z == 0.0 || std::isinf(c.A)) return e;
  const double log_w = dim * std::log(a) + std::log(z);
  const double lin = beta * (c.B + upsilon_star);
  auto log_term = [&](double n) { return n * log_w - std::lgamma(n + 1) - 0.5 * beta * c.A * n * n + lin * n; };
  auto log_ratio = [&](double n) { return log_w - std::log(n + 1) - 0.5 * beta * c.A * (2 * n + 1) + lin; };
  std::size_t n = 2;
  for (;; ++n) {
    const double t = std::exp(log_term(static_cast<double>(n)));
    e.value += t;
    e.breakdown.per_term.push_back(t);
    if (n >= n_cap && log_ratio(static_cast<double>(n)) < std::log(0.5)) break;
    if (n > 100000) {
      e.error = std::numeric_limits<double>::infinity();
      e.tail_warning = true;
      return e;
    }
  }
  // Ratios of consecutive terms decrease with n, so the rest is geometric.
  const double r = std::exp(log_ratio(static_cast<double>(n)));
  e.breakdown.truncation_tail = std::exp(log_term(static_cast<double>(n))) * r / (1 - r);
  e.error = e.breakdown.truncation_tail;
  e.note = "summed to n = " + std::to_string(n);
  return e;
}

double remainder_rhs(std::size_t eta_size, double volume, double volume_eta, double a, int dim, double z, double beta,
                     const StabilityConstants& c, double upsilon_star) {
  if (!(volume > 0) || volume_eta < 0 || volume_eta > volume * (1 + 1e-12))
    throw InvalidArgument("remainder_rhs needs 0 <= |Lambda_eta| <= |Lambda|");
  const Estimate eps = epsilon1(a, dim, z, beta, c, upsilon_star);
  if (z == 0.0) return 0.0;
  const double e1 = eps.upper();
  const double cell = std::pow(a, dim);
  const double M = (volume - volume_eta) / cell;
  const double k = static_cast<double>(eta_size);
  const double lin = beta * (c.B + upsilon_star);
  const double lead = std::pow(z * std::exp(lin), k) * std::pow(1 + e1, M - 1);
  const double second = std::isinf(c.A) ? 0.0
                                         : (std::pow(2.0, k) - 1) * (1 + e1) *
                                               std::exp(-beta * (2 * c.A) + lin + z * cell * k);
  return lead * (e1 * M + second);
}

IdentityReport verify_identity58(const EnsembleParams& params, const Configuration& eta, const CubePartition& part,
                                 const Truncation& trunc, const MethodPolicy& policy, std::uint64_t seed,
                                 std::optional<BoundConstants> bound) {
  const std::size_t N = part.cube_count();
  if (N > 4) throw InvalidArgument("verify-identity is limited to partitions of at most 4 cubes");
  const bool closed =
      params.energy.is_ideal() &&
      (policy.choice == MethodChoice::automatic || policy.choice == MethodChoice::closed_form);
  const std::size_t n_max = trunc.n_max.value_or(4);
  if (!closed && n_max > 4) throw InvalidArgument("verify-identity is limited to n_max <= 4");
  Truncation tr = trunc;
  tr.n_max = n_max;

  IdentityReport rep;
  rep.n_max = n_max;
  rep.Z = partition_function(params, tr, policy, seed);
  rep.Z_minus = dilute_partition_function(params, part, tr, policy, seed);
  const Estimate num = correlation_numerator(params, eta, nullptr, tr, policy, seed);
  rep.rho = eta.empty() ? correlation(params, eta, tr, policy, seed) : ratio(num, rep.Z);
  rep.rho_minus = dilute_correlation(params, eta, part, tr, policy, seed);

  const Occupancy occ = occupancy(eta, part);
  std::vector<std::size_t> held(N, 0);
  for (const auto& [c, k] : occ) held[c] = k;
  const double cell = std::pow(part.edge(), params.box.dim());
  const double w = params.z * cell;
  const double zk = std::pow(params.z, static_cast<double>(eta.size()));

  Estimate rnum;
  rnum.method = closed ? Method::closed_form : Method::quadrature;
  for (std::uint64_t X = 1; X < (std::uint64_t{1} << N); ++X) {
    std::vector<CellRule> rule(N);
    for (std::size_t c = 0; c < N; ++c) {
      const bool dense = (X >> c) & 1;
      rule[c].min = dense ? (held[c] >= 2 ? 0 : 2 - held[c]) : 0;
      rule[c].max = dense ? std::numeric_limits<std::size_t>::max() : (held[c] >= 1 ? 0 : 1);
    }
    // A cube already holding two eta points is dense whatever happens.
    bool impossible = false;
    for (std::size_t c = 0; c < N; ++c)
      if (!((X >> c) & 1) && held[c] >= 2) impossible = true;
    if (impossible) continue;

    double value = 0, error = 0;
    if (closed) {
      value = zk;
      for (std::size_t c = 0; c < N; ++c) {
        if ((X >> c) & 1)
          value *= held[c] >= 2 ? std::exp(w) : held[c] == 1 ? std::expm1(w) : std::expm1(w) - w;
        else
          value *= held[c] == 1 ? 1.0 : 1 + w;
      }
    } else {
      // Enumerate per-cube particle counts j_c with sum j <= n_max.
      std::vector<std::vector<std::size_t>> placements;
      std::vector<std::size_t> j(N, 0);
      auto rec = [&](auto&& self, std::size_t c, std::size_t used) -> void {
        if (c == N) {
          placements.push_back(j);
          return;
        }
        const std::size_t hi = std::min(rule[c].max, n_max - used);
        for (std::size_t v = rule[c].min; v <= hi; ++v) {
          j[c] = v;
          self(self, c + 1, used + v);
        }
        j[c] = 0;
      };
      rec(rec, 0, 0);
      const std::size_t budget = std::max<std::size_t>(1, policy.quad_budget / std::max<std::size_t>(1, placements.size()));
      for (const auto& jj : placements) {
        std::vector<CubeIndex> cells;
        double coef = zk;
        for (std::size_t c = 0; c < N; ++c) {
          for (std::size_t t = 0; t < jj[c]; ++t) cells.push_back(c);
          coef *= std::pow(params.z, static_cast<double>(jj[c])) / std::tgamma(static_cast<double>(jj[c]) + 1);
        }
        if (coef == 0.0) continue;
        const Estimate I = cell_integral(params, eta, cells, part, budget, policy.workers);
        value += coef * I.value;
        error += coef * I.error;
      }
    }
    rnum.value += value;
    rnum.error += error;
    rep.per_set.emplace_back(X, value);
  }
  rnum.breakdown.discretization = rnum.error;
  if (!closed) {
    // Placements beyond n_max are bounded by the numerator's own tail.
    rnum.breakdown.truncation_tail = num.breakdown.truncation_tail;
    rnum.error += rnum.breakdown.truncation_tail;
  }
  rep.remainder = ratio(rnum, rep.Z);
  for (auto& [X, v] : rep.per_set) v /= rep.Z.value;

  const Estimate first = product(ratio(rep.Z_minus, rep.Z), rep.rho_minus);
  rep.lhs = rep.rho.value;
  rep.rhs = first.value + rep.remainder.value;
  rep.difference = std::abs(rep.lhs - rep.rhs);
  rep.combined_error = rep.rho.error + first.error + rep.remainder.error;
  // Closed forms carry no error; allow for rounding.
  const double rounding = 1e-12 * std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs)});
  rep.identity_holds = rep.difference <= rep.combined_error + rounding;

  if (bound) {
    const double vol_eta = static_cast<double>(occ.size()) * cell;
    rep.remainder_bound = remainder_rhs(eta.size(), params.box.volume(), vol_eta, part.edge(), params.box.dim(),
                                        params.z, params.beta, bound->constants, bound->upsilon_star);
    rep.bound_holds = rep.remainder.lower() <= *rep.remainder_bound;
  }
  return rep;
}

ConstantsProvider default_constants(const EnergyModel& model, int cutoff) {
  if (const PairPotential* pot = model.pair_potential()) {
    PairPotential copy = *pot;
    return [copy, cutoff](double a) {
      const StabilityConstants c = sss_constants(copy, a, cutoff);
      return BoundConstants{c, c.upsilon0};
    };
  }
  if (const ManyBodyFamily* fam = model.family()) {
    ManyBodyFamily copy = *fam;
    return [copy, cutoff](double a) {
      const StabilityConstants c = lemma21_constants(copy, a, cutoff);
      return BoundConstants{c, c.upsilon0};
    };
  }
  return [](double) -> BoundConstants {
    throw NumericalRejection("the ideal gas has no strong-superstability constants with A > 0");
  };
}

void check_a_list(const Box& box, const std::vector<double>& a_list) {
  if (a_list.empty()) throw InvalidArgument("a_list is empty");
  for (std::size_t i = 0; i < a_list.size(); ++i) {
    if (!(a_list[i] > 0)) throw InvalidArgument("a_list entries must be positive");
    build_partition(box, a_list[i]);
    if (i == 0) continue;
    if (!(a_list[i] < a_list[i - 1]) || !compatible_edges(a_list[i - 1], a_list[i])) {
      std::ostringstream os;
      os.precision(17);
      os << "a_list entries " << a_list[i - 1] << " and " << a_list[i]
         << " are incompatible: each edge must be a strictly smaller integer divisor of the previous one";
      throw InvalidArgument(os.str());
    }
  }
}

SweepResult sweep(const EnsembleParams& params, const Configuration& eta, const std::vector<double>& a_list,
                  const Truncation& trunc, const MethodPolicy& policy, std::uint64_t seed, double epsilon,
                  ConstantsProvider constants) {
  check_a_list(params.box, a_list);
  if (!constants) constants = default_constants(params.energy);
  SweepResult out;
  out.epsilon = epsilon;
  out.seed = seed;
  // Z and rho do not depend on the edge.
  const Estimate Z = partition_function(params, trunc, policy, seed);
  const Estimate rho = correlation(params, eta, trunc, policy, seed);
  const double cell_exp = params.box.dim();
  for (double a : a_list) {
    const CubePartition part = build_partition(params.box, a);
    SweepRow row;
    row.a = a;
    row.Z = Z;
    row.rho = rho;
    row.Z_minus = dilute_partition_function(params, part, trunc, policy, seed);
    row.ratio = ratio(row.Z_minus, Z);
    row.rho_minus = dilute_correlation(params, eta, part, trunc, policy, seed);
    row.absdiff = std::abs(rho.value - row.rho_minus.value);
    row.absdiff_error = rho.error + row.rho_minus.error;
    try {
      const BoundConstants bc = constants(a);
      row.eps1 = epsilon1(a, params.box.dim(), params.z, params.beta, bc.constants, bc.upsilon_star);
      const double vol_eta = static_cast<double>(occupancy(eta, part).size()) * std::pow(a, cell_exp);
      row.rbound = remainder_rhs(eta.size(), params.box.volume(), vol_eta, a, params.box.dim(), params.z,
                                 params.beta, bc.constants, bc.upsilon_star);
    } catch (const NumericalRejection& ex) {
      row.eps1.value = kNaN;
      row.eps1.error = kNaN;
      row.rbound = kNaN;
      row.constants_note = ex.what();
    }
    if (!out.first_below && row.absdiff < epsilon) out.first_below = a;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace qca
