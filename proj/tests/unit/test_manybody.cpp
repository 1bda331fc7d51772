#include <cmath>
#include <random>

#include "doctest.h"
#include "qca/errors.hpp"
#include "qca/manybody.hpp"
#include "qca/stability.hpp"

using namespace qca;

namespace {

using Eval = ManyBodyFamily::Evaluator;

double dist(std::span<const double> x, std::size_t i, std::size_t j, std::size_t d) {
  double s = 0;
  for (std::size_t k = 0; k < d; ++k) s += (x[i * d + k] - x[j * d + k]) * (x[i * d + k] - x[j * d + k]);
  return std::sqrt(s);
}

// V_2 = 1/r, V_3 = t exp(-(r12 + r13 + r23)), d = 1.
ManyBodyFamily toy_family(double t) {
  Eval v2 = [](std::span<const double> x) { return 1 / dist(x, 0, 1, 1); };
  Eval v3 = [t](std::span<const double> x) { return t * std::exp(-(dist(x, 0, 1, 1) + dist(x, 0, 2, 1) + dist(x, 1, 2, 1))); };
  return ManyBodyFamily(1, {v2, v3});
}

// Brute force: sum V_p over subsets meeting both eta and gamma.
double mixed_oracle(const ManyBodyFamily& fam, const Configuration& eta, const Configuration& gam) {
  const auto all = eta.united(gam);
  const std::size_t n = all.size(), ne = eta.size(), d = static_cast<std::size_t>(fam.dim());
  double s = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int p = __builtin_popcount(mask);
    if (p < 2 || p > fam.p_max()) continue;
    const std::uint32_t eta_bits = (1u << ne) - 1;
    if (!(mask & eta_bits) || !(mask & ~eta_bits)) continue;
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) x.insert(x.end(), all.point(i).begin(), all.point(i).end());
    s += fam.body(p)(x);
  }
  (void)d;
  return s;
}

PairPotential exp_attraction() {
  return PairPotential("attract", 1, [](double r) { return -std::exp(-r); },
                       AssumptionA{.phi0 = 1, .phi1 = 1, .r0 = 1, .R = 2, .s = 1, .eps0 = 1});
}

}  // namespace

TEST_CASE("mb_energy basics") {
  auto fam = toy_family(-0.5);
  CHECK(mb_energy(fam, Configuration(1)) == 0.0);
  CHECK(mb_energy(fam, Configuration::line({0.4})) == 0.0);
  // Constant bodies count the subsets: C(4,2) pairs and C(4,3) triples.
  ManyBodyFamily counting(1, {[](std::span<const double>) { return 1.0; }, [](std::span<const double>) { return 10.0; }});
  CHECK(mb_energy(counting, Configuration::line({0.1, 0.2, 0.3, 0.4})) == doctest::Approx(6 + 40));
  CHECK_THROWS_AS(mb_energy(fam, Configuration::from_points(2, {{0.1, 0.1}})), InvalidArgument);
}

TEST_CASE("pair-only family reduces to the pair functions") {
  auto pot = power_core_exp_tail(2, 1.0, 3.0, 2.0, 1.0);
  auto fam = pair_only(pot);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::vector<double>> e, g;
    for (int i = 0; i < 2; ++i) e.push_back({u(rng), u(rng)});
    for (int i = 0; i < 4; ++i) g.push_back({u(rng), u(rng)});
    auto eta = Configuration::from_points(2, e), gam = Configuration::from_points(2, g);
    CHECK(mb_energy(fam, gam) == doctest::Approx(pair_energy(pot, gam)).epsilon(1e-12));
    CHECK(mb_interaction(fam, eta, gam) == doctest::Approx(pair_interaction(pot, eta, gam)).epsilon(1e-10));
  }
}

TEST_CASE("W/U identity on random many-body instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 3.0), t(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto fam = toy_family(t(rng));
    const int ne = 1 + static_cast<int>(rng() % 3), ng = 1 + static_cast<int>(rng() % 3);
    std::vector<double> e, g;
    for (int i = 0; i < ne; ++i) e.push_back(u(rng));
    for (int i = 0; i < ng; ++i) g.push_back(u(rng));
    Configuration eta(1, e), gam(1, g);
    const double w = mb_interaction(fam, eta, gam);
    const double lhs = mb_energy(fam, eta.united(gam));
    const double rhs = mb_energy(fam, eta) + mb_energy(fam, gam) + w;
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    CHECK(w == doctest::Approx(mixed_oracle(fam, eta, gam)).epsilon(1e-9));
  }
}

TEST_CASE("mb_interaction edge cases") {
  auto fam = toy_family(1.0);
  CHECK(mb_interaction(fam, Configuration(1), Configuration::line({0.3, 0.6})) == 0.0);
  CHECK(mb_interaction(fam, Configuration::line({0.3}), Configuration(1)) == 0.0);
  CHECK_THROWS_AS(mb_interaction(fam, Configuration::line({0.3}), Configuration::line({0.3})), InvalidArgument);
  auto eta = Configuration::line({0.1, 0.9}), gam = Configuration::line({0.4, 1.7});
  CHECK(mb_interaction(fam, eta, gam) == doctest::Approx(mixed_oracle(fam, eta, gam)));
  // Hard core: the identity is undefined, the mixed sum is used.
  auto hc = pair_only(hard_core(1, 0.3));
  CHECK(std::isinf(mb_interaction(hc, Configuration::line({0.0}), Configuration::line({0.1}))));
}

TEST_CASE("I_sup examples") {
  auto att = pair_only(exp_attraction());
  CubeTuple adjacent{{{0}, {1}}, {1, 1}};
  CHECK(I_sup(att, adjacent, 1.0).value == doctest::Approx(1.0));
  CubeTuple gap{{{0}, {2}}, {1, 1}};
  CHECK(I_sup(att, gap, 1.0).value == doctest::Approx(std::exp(-1.0)));
  auto rep = pair_only(inverse_power(1, 1.0, 1.0));
  CHECK(I_sup(rep, adjacent, 1.0).value == 0.0);
  CubeTuple too_many{{{0}, {1}}, {2, 1}};
  CHECK_THROWS_AS(I_sup(att, too_many, 1.0), InvalidArgument);
  CHECK_THROWS_AS(I_sup(att, CubeTuple{{{0}}, {0}}, 1.0), InvalidArgument);
  // Same via a partition.
  auto part = build_partition(Box::cube(1, 3.0), 1.0);
  CHECK(I_sup(att, std::vector<CubeIndex>{0, 2}, {1, 1}, part).value == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("I_sup is monotone under refinement") {
  auto fam = pair_plus_triple(exp_attraction(), -1.0, 0.7);
  CubeTuple t{{{0}, {1}}, {2, 1}};
  double prev = -1;
  for (std::size_t n : {3u, 5u, 9u, 17u}) {
    RefinementPolicy p;
    p.initial_nodes = n;
    p.max_points = n * n * n;
    const std::size_t d = 1;
    std::vector<double> lo{0, 0, 0.5}, hi{0.5, 0.5, 1.0};
    (void)d;
    const auto fine = grid_extremum(lo, hi, [&](std::span<const double> x) { return std::max(0.0, -fam.body(3)(x)); },
                                    ExtremumKind::supremum, p);
    CHECK(fine.value >= prev);
    prev = fine.value;
  }
  CHECK(I_sup(fam, t, 0.5).value >= prev * (1 - 1e-12));
}

TEST_CASE("I_bar") {
  auto rep = pair_only(inverse_power(1, 1.0, 1.0));
  CHECK(I_bar(rep, 0.5, 8).value == 0.0);

  auto att = pair_only(exp_attraction());
  const int cutoff = 40;
  const Estimate ib = I_bar(att, 0.5, cutoff);
  double oracle = 0;
  for (int k = -cutoff; k <= cutoff; ++k) oracle += std::exp(-std::max(0, std::abs(k) - 1) * 0.5);
  CHECK(ib.value == doctest::Approx(4 * oracle).epsilon(1e-9));
  const Estimate wide = I_bar(att, 0.5, 2 * cutoff);
  CHECK(std::abs(wide.value - ib.value) <= ib.error);

  ManyBodyFamily bare(1, {[](std::span<const double> x) { return -std::exp(-std::abs(x[0] - x[1])); }});
  CHECK_THROWS_AS(I_bar(bare, 0.5, 4), InvalidArgument);
}

TEST_CASE("lemma21 constants") {
  auto rep = pair_only(inverse_power(1, 1.0, 1.0));
  const auto c = lemma21_constants(rep, 0.5, 4);
  CHECK(c.A == doctest::Approx(2.0));
  CHECK(c.B == 0.0);
  CHECK(c.m == 2);

  auto core = power_core_exp_tail(1, 1.0, 3.0, 1.0, 4.0);
  const double a = 1.0 / 16;
  const auto pair = lemma21_constants(pair_only(core), a, 64);
  const auto trip = lemma21_constants(pair_plus_triple(core, -1e-4, 0.25), a, 64);
  CHECK(trip.A < pair.A);
  CHECK(trip.B > pair.B);
  CHECK(pair.A > 0);

  // Steep core: positive at a, rejected at a larger edge.
  auto steep = pair_only(power_core_exp_tail(1, 1.0, 3.0, 5.0, 1.0));
  CHECK(lemma21_constants(steep, 1.0 / 16, 64).A > 0);
  CHECK_THROWS_AS(lemma21_constants(steep, 1.0 / 8, 64), NumericalRejection);
}

TEST_CASE("lemma21 A overshoots for two particles in one cube") {
  // U = V_2 ~ v_2^2 while the bound asks for 4 A - 2 B ~ 4 v_2^2.
  auto fam = pair_only(inverse_power(1, 1.0, 1.0));
  const auto c = lemma21_constants(fam, 0.5, 4);
  const auto g = Configuration::line({0.0, 0.5 - 1e-9});
  const auto part = build_partition(Box::cube(1, 1.0), 0.5);
  CHECK(mb_energy(fam, g) < stability_rhs(StabilityKind::SSS, c, g, part));
}

TEST_CASE("SSS holds with a quarter of the lemma21 A on sampled configurations") {
  auto fam = pair_plus_triple(power_core_exp_tail(1, 1.0, 3.0, 1.0, 4.0), -1e-4, 0.25);
  const double a = 1.0 / 16;
  auto c = lemma21_constants(fam, a, 64);
  c.A /= 4;
  const Box box = Box::cube(1, 1.0);
  const auto configs = sample_configs(box, 8, 10000, 9);
  const auto rep = verify_bound([&](const Configuration& g) { return mb_energy(fam, g); }, c, StabilityKind::SSS,
                                build_partition(box, a), configs);
  CHECK(rep.violations.empty());
}

TEST_CASE("check_a5") {
  auto rep = pair_only(inverse_power(1, 1.0, 1.0));
  const auto r0 = check_a5(rep, 0.5, 500, {});
  CHECK(r0.in_cube_violations.empty());
  CHECK(r0.in_cube_samples == 500);

  auto att = pair_only(exp_attraction());
  const auto r1 = check_a5(att, 2.0, 200, {});
  CHECK_FALSE(r1.in_cube_violations.empty());
  for (const auto& v : r1.in_cube_violations) CHECK(v.value < 0);

  // Strong core with weak triple attraction at a small edge: margin positive.
  auto fam = pair_plus_triple(inverse_power(1, 1.0, 2.0), -0.01, 0.2);
  A5Instance inst;
  inst.cubes = {{0}};
  inst.k = {2};
  inst.l_max = 1;
  inst.cutoff = 2;
  const auto r2 = check_a5(fam, 0.05, 100, {inst});
  REQUIRE(r2.margins.size() == 1);
  CHECK(r2.margins[0].margin > 0);
  CHECK(r2.margins[0].lhs == doctest::Approx(400.0));
  A5Instance bad = inst;
  bad.k = {1};
  CHECK_THROWS_AS(check_a5(fam, 0.05, 10, {bad}), InvalidArgument);
}
