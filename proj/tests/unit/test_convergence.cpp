#include <cmath>

#include "doctest.h"
#include "qca/convergence.hpp"
#include "qca/errors.hpp"

using namespace qca;

namespace {

double eps1_oracle(double x, double beta, double A, double Bu, int n_max = 60) {
  double s = 0;
  for (int n = 2; n <= n_max; ++n)
    s += std::exp(n * std::log(x) - std::lgamma(n + 1.0) - 0.5 * beta * A * n * n + beta * Bu * n);
  return s;
}

double rhs_oracle(int k, double vol, double vol_eta, double a, int d, double z, double beta, double A, double Bu) {
  const double e1 = eps1_oracle(std::pow(a, d) * z, beta, A, Bu);
  const double M = (vol - vol_eta) / std::pow(a, d);
  return std::pow(z * std::exp(beta * Bu), k) * std::pow(1 + e1, M - 1) *
         (e1 * M + (std::pow(2.0, k) - 1) * (1 + e1) * std::exp(-beta * (2 * A - Bu)) * std::exp(z * std::pow(a, d) * k));
}

StabilityConstants consts(double A, double B = 0.0) {
  StabilityConstants c;
  c.A = A;
  c.B = B;
  return c;
}

EnsembleParams rods() {
  EnsembleParams p;
  p.energy = EnergyModel::pair(hard_core(1, 0.3));
  return p;
}

double tonks(double L, double sigma) {
  double s = 0, f = 1;
  for (int n = 0; n < 10; ++n) {
    if (n > 0) f *= n;
    const double free = L - (n - 1) * sigma;
    if (n > 1 && free <= 0) break;
    s += std::pow(std::max(free, 0.0), n) / f;
  }
  return s;
}

}  // namespace

TEST_CASE("epsilon1 series") {
  const auto e = epsilon1(0.5, 1, 1.0, 1.0, consts(1.0), 0.0);
  CHECK(e.value == doctest::Approx(eps1_oracle(0.5, 1, 1, 0)).epsilon(1e-12));
  CHECK(std::abs(e.value - 0.017149) < 1e-6);
  CHECK(e.breakdown.per_term.at(0) == doctest::Approx(0.25 / 2 * std::exp(-2.0)));
  CHECK(e.error >= 0);
  CHECK(epsilon1(0.5, 1, 0.0, 1.0, consts(1.0), 0.0).value == 0.0);
  CHECK_THROWS_AS(epsilon1(0.5, 1, 1.0, 1.0, consts(0.0), 0.0), NumericalRejection);
  CHECK_THROWS_AS(epsilon1(0.5, 1, 1.0, 1.0, consts(-1.0), 0.0), NumericalRejection);
  // Halving a with fixed constants: the leading term scales like a^2.
  const double big = epsilon1(0.5, 1, 1.0, 1.0, consts(1.0), 0.0).value;
  const double small = epsilon1(0.25, 1, 1.0, 1.0, consts(1.0), 0.0).value;
  CHECK(big / small > 3.99);
  // Slowly converging case: the tail bound covers the omitted terms.
  const auto slow = epsilon1(1.0, 1, 20.0, 1.0, consts(0.01), 0.0, 8);
  const double full = eps1_oracle(20.0, 1, 0.01, 0.0, 400);
  CHECK(std::abs(slow.value - full) <= slow.error + 1e-12 * full);
}

TEST_CASE("epsilon1 along a dyadic sweep with 1/r constants") {
  auto pot = inverse_power(1, 1.0, 1.0);
  double prev = INFINITY;
  for (double a = 0.5; a >= 1.0 / 16; a /= 2) {
    const auto c = sss_constants(pot, a);
    const auto e = epsilon1(a, 1, 1.0, 1.0, c, c.upsilon0);
    CHECK(e.value == doctest::Approx(eps1_oracle(a, 1, 1 / (4 * a), 0)).epsilon(1e-10));
    CHECK(e.value < prev);
    prev = e.value;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("remainder bound") {
  CHECK(remainder_rhs(1, 1.0, 0.5, 0.5, 1, 0.0, 1.0, consts(1.0), 0.0) == 0.0);
  CHECK(remainder_rhs(1, 1.0, 0.5, 0.5, 1, 1.0, 1.0, consts(1e6), 0.0) < 1e-100);
  CHECK(remainder_rhs(2, 1.0, 0.5, 0.25, 1, 1.3, 0.8, consts(2.0, 0.1), 0.2) ==
        doctest::Approx(rhs_oracle(2, 1.0, 0.5, 0.25, 1, 1.3, 0.8, 2.0, 0.3)).epsilon(1e-9));
  auto pot = inverse_power(1, 1.0, 1.0);
  double prev = INFINITY;
  for (double a : {0.5, 0.25, 0.125}) {
    const auto c = sss_constants(pot, a);
    const double r = remainder_rhs(1, 1.0, a, a, 1, 1.0, 1.0, c, c.upsilon0);
    CHECK(r == doctest::Approx(rhs_oracle(1, 1.0, a, a, 1, 1.0, 1.0, 1 / (4 * a), 0)).epsilon(1e-9));
    CHECK(r < prev);
    prev = r;
  }
  // Steeper core, s > d: the bound keeps falling toward 0.
  auto steep = inverse_power(1, 1.0, 2.0);
  prev = INFINITY;
  for (double a = 0.5; a >= 1.0 / 64; a /= 2) {
    const auto c = sss_constants(steep, a);
    const double r = remainder_rhs(1, 1.0, a, a, 1, 1.0, 1.0, c, c.upsilon0);
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("identity for the ideal gas") {
  EnsembleParams p;
  const auto part = build_partition(p.box, 0.5);
  const auto rep = verify_identity58(p, Configuration::line({0.3}), part);
  CHECK(rep.rho.value == doctest::Approx(1.0));
  CHECK(rep.rho_minus.value == doctest::Approx(1 / 1.5));
  CHECK(rep.remainder.value == doctest::Approx(1 - 1.5 / std::exp(1.0)).epsilon(1e-12));
  CHECK(rep.difference < 1e-10);
  CHECK(rep.identity_holds);
  double sum = 0;
  for (const auto& [mask, v] : rep.per_set) {
    CHECK(mask != 0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(rep.remainder.value));

  const auto bounded =
      verify_identity58(p, Configuration::line({0.3}), part, {}, {}, 1, BoundConstants{consts(1e-9), 0.0});
  REQUIRE(bounded.remainder_bound);
  CHECK(*bounded.bound_holds);
  CHECK(*bounded.remainder_bound >= bounded.remainder.value);

  // Numeric placement path for the same instance.
  MethodPolicy q;
  q.choice = MethodChoice::quadrature;
  const auto num = verify_identity58(p, Configuration::line({0.3}), part, {}, q);
  CHECK(num.identity_holds);
}

TEST_CASE("identity for hard rods on two cubes") {
  const auto p = rods();
  const auto part = build_partition(p.box, 0.5);
  const auto rep = verify_identity58(p, Configuration::line({0.25}), part);
  const double Z = tonks(1.0, 0.3);
  CHECK(rep.Z.value == doctest::Approx(Z).epsilon(1e-4));
  CHECK(std::abs(rep.rho.value - 1.46125 / Z) <= rep.rho.error + 1e-4);
  CHECK(std::abs(rep.rho_minus.value - 1.45 / 2.205) <= rep.rho_minus.error + 1e-4);
  CHECK(std::abs(rep.remainder.value - 0.01125 / Z) <= rep.remainder.error + 1e-5);
  CHECK(rep.difference <= rep.combined_error);
  CHECK(rep.identity_holds);
}

TEST_CASE("identity with a non-dilute eta") {
  const auto p = rods();
  const auto part = build_partition(p.box, 0.5);
  const auto rep = verify_identity58(p, Configuration::line({0.55, 0.9}), part);
  CHECK(rep.rho_minus.value == 0.0);
  CHECK(std::abs(rep.rho.value - rep.remainder.value) <= rep.combined_error);
  CHECK(rep.identity_holds);
  EnsembleParams ideal;
  const auto r2 = verify_identity58(ideal, Configuration::line({0.1, 0.2}), part);
  CHECK(r2.rho_minus.value == 0.0);
  CHECK(r2.remainder.value == doctest::Approx(r2.rho.value));
}

TEST_CASE("identity rejects instances too large to enumerate") {
  EnsembleParams p;
  CHECK_THROWS(verify_identity58(p, Configuration::line({0.3}), build_partition(p.box, 0.125)));
  Truncation t;
  t.n_max = 6;
  MethodPolicy q;
  q.choice = MethodChoice::quadrature;
  CHECK_THROWS(verify_identity58(p, Configuration::line({0.3}), build_partition(p.box, 0.5), t, q));
}

TEST_CASE("ideal-gas sweep") {
  EnsembleParams p;
  const std::vector<double> as{0.5, 0.25, 0.125, 0.0625};
  const auto res = sweep(p, Configuration::line({0.3}), as, {}, {}, 1, 0.06);
  REQUIRE(res.rows.size() == 4);
  double prev_ratio = 0, prev_diff = INFINITY;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& r = res.rows[i];
    const double a = as[i];
    CHECK(r.ratio.value == doctest::Approx(std::pow(1 + a, 1 / a) / std::exp(1.0)).epsilon(1e-12));
    CHECK(r.ratio.value > prev_ratio);
    CHECK(r.ratio.value <= 1.0);
    CHECK(std::abs(r.absdiff - a / (1 + a)) < 1e-12);
    CHECK(r.absdiff < prev_diff);
    CHECK(std::isnan(r.eps1.value));
    prev_ratio = r.ratio.value;
    prev_diff = r.absdiff;
  }
  CHECK(std::abs(res.rows[3].ratio.value - 0.97044) < 5e-5);
  REQUIRE(res.first_below);
  CHECK(*res.first_below == 0.0625);
  CHECK_THROWS_AS(sweep(p, Configuration::line({0.3}), {0.5, 1.0 / 3}), InvalidArgument);
  CHECK_THROWS_AS(sweep(p, Configuration::line({0.3}), {0.25, 0.5}), InvalidArgument);
}

TEST_CASE("sweep with potential-derived constants") {
  EnsembleParams p;
  p.energy = EnergyModel::pair(inverse_power(1, 1.0, 1.0));
  MethodPolicy pol;
  pol.quad_budget = 1 << 16;
  Truncation t;
  t.tolerance = 1e-6;
  const auto res = sweep(p, Configuration::line({0.3}), {0.5, 0.25}, t, pol);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].eps1.value == doctest::Approx(eps1_oracle(0.5, 1, 0.5, 0)).epsilon(1e-9));
  CHECK(res.rows[1].eps1.value < res.rows[0].eps1.value);
  CHECK(std::isfinite(res.rows[1].rbound));
}
