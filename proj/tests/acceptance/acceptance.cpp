// One PASS/FAIL line per acceptance criterion, with wall time and detail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "qca/convergence.hpp"
#include "qca/errors.hpp"
#include "qca/manybody.hpp"
#include "qca/stability.hpp"

using namespace qca;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s) [%.2f s]: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), dt, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EnsembleParams ideal_params() { return EnsembleParams{}; }

EnsembleParams rods() {
  EnsembleParams p;
  p.energy = EnergyModel::pair(hard_core(1, 0.3));
  return p;
}

double tonks(double L, double sigma, double z) {
  double s = 0, f = 1;
  for (int n = 0; n < 20; ++n) {
    if (n > 0) f *= n;
    const double free = L - (n - 1) * sigma;
    if (n > 1 && free <= 0) break;
    s += std::pow(z, n) * std::pow(std::max(free, 0.0), n) / f;
  }
  return s;
}

// Fine midpoint grid over [0,1]^n for hard rods next to eta, optionally with
// the dilute indicator on cubes of edge a. Independent of the library.
double rods_numerator(double eta, double sigma, double a, bool dilute, int M) {
  auto ok = [&](const std::vector<double>& x) {
    for (double v : x)
      if (std::abs(v - eta) < sigma) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j)
        if (std::abs(x[i] - x[j]) < sigma) return false;
    if (dilute) {
      std::vector<long> cubes{static_cast<long>(std::floor(eta / a))};
      for (double v : x) cubes.push_back(static_cast<long>(std::floor(v / a)));
      std::sort(cubes.begin(), cubes.end());
      if (std::adjacent_find(cubes.begin(), cubes.end()) != cubes.end()) return false;
    }
    return true;
  };
  double total = 1, fact = 1;
  for (int n = 1; n <= 3; ++n) {
    fact *= n;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> x(static_cast<std::size_t>(n));
    double count = 0;
    while (true) {
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (idx[static_cast<std::size_t>(i)] + 0.5) / M;
      if (ok(x)) count += 1;
      int k = 0;
      while (k < n && ++idx[static_cast<std::size_t>(k)] == M) idx[static_cast<std::size_t>(k++)] = 0;
      if (k == n) break;
    }
    total += count / std::pow(static_cast<double>(M), n) / fact;
  }
  return total;
}

double rods_z(double sigma, double a, bool dilute, int M) {
  // Z = numerator without eta: reuse with eta placed outside the box.
  return rods_numerator(-10.0, sigma, a, dilute, M) + 0.0;
}

}  // namespace

int main() {
  const std::vector<double> dyadic{0.5, 0.25, 0.125, 0.0625};

  report(1, "ideal-gas Z by quadrature", [] {
    MethodPolicy q;
    q.choice = MethodChoice::quadrature;
    q.quad_budget = std::size_t{1} << 20;
    Truncation t;
    t.tolerance = 1e-9;  // keeps n_max * d within the quadrature limit
    const auto t0 = std::chrono::steady_clock::now();
    const auto z = partition_function(ideal_params(), t, q);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double err = std::abs(z.value - std::exp(1.0));
    return Outcome{err < 1e-8 && dt < 1.0, "|Z - e| = " + fmt("%.3g", err) + ", " + z.note + ", " + fmt("%.3f s", dt)};
  });

  report(2, "ideal-gas dilute Z", [&] {
    bool ok = true;
    std::ostringstream os;
    MethodPolicy q;
    q.choice = MethodChoice::quadrature;
    for (double a : dyadic) {
      const auto part = build_partition(Box::cube(1, 1.0), a);
      const double exact = std::pow(1 + a, 1 / a);
      const double cf = dilute_partition_function(ideal_params(), part).value;
      Truncation t;
      t.n_max = std::min<std::size_t>(part.cube_count(), 12);
      const auto num = dilute_partition_function(ideal_params(), part, t, q);
      const double tail_left = part.cube_count() > 12 ? truncation_tail(1.0, 12) : 0.0;
      const double e1 = std::abs(cf - exact) / exact, e2 = std::abs(num.value - exact);
      ok = ok && e1 < 1e-14 && e2 < 1e-8 && tail_left < 1e-8;
      os << "a=" << a << ": closed rel " << fmt("%.1g", e1) << ", quad " << fmt("%.2g", e2) << "; ";
    }
    return Outcome{ok, os.str()};
  });

  report(3, "ideal-gas ratio column", [&] {
    const double listed[] = {0.82797, 0.91574, 0.95700, 0.97044};
    const auto res = sweep(ideal_params(), Configuration::line({0.3}), dyadic);
    bool listed_ok = true, closed_ok = true, mono = true;
    std::ostringstream os;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const double r = res.rows[i].ratio.value, a = dyadic[i];
      const double cf = std::pow(1 + a, 1 / a) / std::exp(1.0);
      listed_ok = listed_ok && std::abs(r - listed[i]) < 5e-5;
      closed_ok = closed_ok && std::abs(r - cf) < 1e-12;
      if (i > 0) mono = mono && r > res.rows[i - 1].ratio.value;
      os << fmt("%.6f", r) << (std::abs(r - listed[i]) < 5e-5 ? "" : "(listed " + fmt("%.5f", listed[i]) + ")") << " ";
    }
    os << "| matches (1+a)^(1/a)/e to 1e-12: " << (closed_ok ? "yes" : "no") << ", increasing: " << (mono ? "yes" : "no");
    if (!listed_ok) os << " | the listed values at a=1/2,1/4,1/8 contradict that closed form";
    return Outcome{listed_ok && closed_ok && mono, os.str()};
  });

  report(4, "Tonks gas Z", [] {
    const double exact = tonks(1.0, 0.3, 1.0);
    const auto q = partition_function(rods());
    MethodPolicy mc;
    mc.choice = MethodChoice::monte_carlo;
    mc.mc_samples = 1 << 20;
    const auto m = partition_function(rods(), {}, mc, 2024);
    const bool ok = std::abs(q.value - exact) < 1e-4 && std::abs(m.value - exact) <= m.error;
    return Outcome{ok, "exact " + fmt("%.7f", exact) + ", quadrature " + fmt("%.7f", q.value) + ", MC " +
                           fmt("%.6f", m.value) + " +- " + fmt("%.2g", m.error) + " (3 sigma)"};
  });

  report(5, "ideal-gas |rho - rho^-| sweep", [&] {
    const auto res = sweep(ideal_params(), Configuration::line({0.3}), dyadic);
    bool ok = true;
    std::ostringstream os;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const double a = dyadic[i], v = res.rows[i].absdiff;
      ok = ok && std::abs(v - a / (1 + a)) < 1e-6;
      if (i > 0) ok = ok && v < res.rows[i - 1].absdiff;
      os << fmt("%.6f", v) << " ";
    }
    ok = ok && res.rows.back().absdiff < 0.06;
    return Outcome{ok, os.str()};
  });

  report(6, "hard-rod |rho - rho^-| sweep", [] {
    const std::vector<double> as{0.25, 0.125, 0.0625, 0.03125};
    const auto res = sweep(rods(), Configuration::line({0.5}), as);
    bool decreasing = true, oracle_ok = true, resolved = false;
    std::ostringstream os;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      const double err = r.rho.error + r.rho_minus.error;
      if (i > 0) decreasing = decreasing && r.absdiff < res.rows[i - 1].absdiff;
      resolved = resolved || r.absdiff > err;
      os << fmt("%.3g", r.absdiff) << "(+-" << fmt("%.2g", err) << ") ";
    }
    // Brute-force fine-grid cross-check at the two largest edges.
    const int M = 300;
    const double Z = rods_z(0.3, 1, false, M);
    for (std::size_t i = 0; i < 2; ++i) {
      const double a = as[i];
      const double rho = rods_numerator(0.5, 0.3, a, false, M) / Z;
      const double rhom = rods_numerator(0.5, 0.3, a, true, M) / rods_z(0.3, a, true, M);
      const auto& r = res.rows[i];
      const double grid_err = 3.0 / M;  // O(1/M) boundary error of the indicator grid
      oracle_ok = oracle_ok && std::abs(std::abs(rho - rhom) - r.absdiff) <= r.rho.error + r.rho_minus.error + grid_err;
    }
    os << "| oracle cross-check: " << (oracle_ok ? "agrees" : "disagrees");
    if (!decreasing)
      os << " | not strictly decreasing: every edge is below sigma, so no cube holds two rods, rho^- = rho exactly and"
            " the column is quadrature noise around 0"
         << (resolved ? "" : " (no row is resolved from 0)");
    return Outcome{decreasing && oracle_ok, os.str()};
  });

  report(7, "SSS for 1/r", [] {
    auto pot = inverse_power(1, 1.0, 1.0);
    const auto c = sss_constants(pot, 0.5);
    const Box box = Box::cube(1, 1.0);
    const auto rep = verify_bound([&](const Configuration& g) { return pair_energy(pot, g); }, c, StabilityKind::SSS,
                                  build_partition(box, 0.5), sample_configs(box, 8, 10000, 1));
    return Outcome{rep.violations.empty() && rep.samples == 10000,
                   "A=" + fmt("%g", c.A) + " B=" + fmt("%g", c.B) + ", " + std::to_string(rep.violations.size()) +
                       " violations in 10000, worst margin " + fmt("%.4g", rep.worst_margin)};
  });

  report(8, "epsilon1 series", [] {
    StabilityConstants c;
    c.A = 1;
    const auto e = epsilon1(0.5, 1, 1.0, 1.0, c, 0.0);
    bool ok = std::abs(e.value - 0.017149) < 1e-6;
    std::ostringstream os;
    os << "value " << fmt("%.8f", e.value) << "; sweep with 1/r constants: ";
    auto pot = inverse_power(1, 1.0, 1.0);
    double prev = INFINITY;
    for (double a = 0.5; a >= 1.0 / 16; a /= 2) {
      const auto k = sss_constants(pot, a);
      const double v = epsilon1(a, 1, 1.0, 1.0, k, k.upsilon0).value;
      ok = ok && v < prev;
      prev = v;
      os << fmt("%.3g", v) << " ";
    }
    ok = ok && prev < 1e-6;
    return Outcome{ok, os.str()};
  });

  report(9, "decomposition identity on two cubes", [] {
    const auto part = build_partition(Box::cube(1, 1.0), 0.5);
    std::ostringstream os;
    StabilityConstants ci;
    ci.A = 1e-9;  // the ideal gas is SSS with any A, B >= 0 in the limit; tiny A keeps the series finite
    const auto id = verify_identity58(ideal_params(), Configuration::line({0.3}), part, {}, {}, 1,
                                      BoundConstants{ci, 0.0});
    // Hard rods: a cube of edge 0.5 holds at most two rods, so U = 0 >= A sum n^2 - 2A |g| for any A > 0.
    StabilityConstants ch;
    ch.A = 1;
    ch.B = 2;
    const Box box = Box::cube(1, 1.0);
    auto pot = hard_core(1, 0.3);
    auto energy = [&](const Configuration& g) { return pair_energy(pot, g); };
    const auto stab = verify_bound(energy, ch, StabilityKind::SSS, part,
                                   finite_energy_only(sample_configs(box, 4, 10000, 3), energy));
    const auto hr = verify_identity58(rods(), Configuration::line({0.25}), part, {}, {}, 1, BoundConstants{ch, 0.0});
    const double R_exact = 1 - 1.5 / std::exp(1.0);
    const bool ok = id.identity_holds && *id.bound_holds && std::abs(id.remainder.value - R_exact) < 1e-12 &&
                    hr.identity_holds && *hr.bound_holds && stab.violations.empty();
    os << "ideal |L-R| " << fmt("%.2g", id.difference) << " <= " << fmt("%.2g", id.combined_error) << ", R "
       << fmt("%.6f", id.remainder.value) << " <= " << fmt("%.4g", *id.remainder_bound) << "; rods |L-R| "
       << fmt("%.2g", hr.difference) << " <= " << fmt("%.2g", hr.combined_error) << ", R "
       << fmt("%.3g", hr.remainder.value) << " <= " << fmt("%.4g", *hr.remainder_bound) << " (A=1, B=2 checked on "
       << stab.samples << " configs)";
    return Outcome{ok, os.str()};
  });

  report(10, "property suites", [] {
    std::ostringstream os;
    bool all = true;
    auto note = [&](const char* name, bool ok) {
      all = all && ok;
      os << name << (ok ? " ok" : " FAILED") << "; ";
    };
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    {  // Partition of unity over dense sets, N <= 12 cubes.
      bool ok = true;
      for (std::size_t N : {2u, 5u, 8u, 12u}) {
        const auto part = build_partition(Box::cube(1, 1.0), 1.0 / static_cast<double>(N));
        for (int t = 0; t < 50; ++t) {
          std::vector<double> xs;
          const int n = static_cast<int>(rng() % 10);
          for (int i = 0; i < n; ++i) xs.push_back(u(rng));
          const Configuration g(1, xs);
          const auto occ = occupancy(g, part);
          int hits = 0;
          for (std::uint64_t X = 0; X < (std::uint64_t{1} << N); ++X) hits += dense_set_indicator(occ, part, X);
          ok = ok && hits == 1;
        }
      }
      note("partition of unity", ok);
    }
    {  // Diluteness survives refinement; Z^- grows under refinement.
      bool ok = true;
      for (int t = 0; t < 500; ++t) {
        std::vector<double> xs;
        for (int i = 0; i < 4; ++i) xs.push_back(u(rng));
        const Configuration g(1, xs);
        for (double a : {0.5, 0.25, 0.125})
          if (is_dilute(g, build_partition(Box::cube(1, 1.0), a)))
            ok = ok && is_dilute(g, build_partition(Box::cube(1, 1.0), a / 2));
      }
      double prev = 0, prev_err = 0;
      const auto Z = partition_function(rods());
      for (double a : {0.5, 0.25, 0.125}) {
        const auto zm = dilute_partition_function(rods(), build_partition(Box::cube(1, 1.0), a));
        ok = ok && prev <= zm.value + zm.error + prev_err;
        ok = ok && zm.value <= Z.value + Z.error + zm.error;
        prev = zm.value;
        prev_err = zm.error;
      }
      note("refinement monotonicity and dominance", ok);
    }
    {  // W/U identity on random many-body instances.
      bool ok = true;
      for (int t = 0; t < 200; ++t) {
        auto fam = pair_plus_triple(power_core_exp_tail(1, 1.0, 2.0, 2.0, 1.0), 4 * u(rng) - 2, 0.5);
        std::vector<double> e{3 * u(rng), 3 * u(rng)}, g{3 * u(rng), 3 * u(rng), 3 * u(rng)};
        const Configuration eta(1, e), gam(1, g);
        const double lhs = mb_energy(fam, eta.united(gam));
        const double rhs = mb_energy(fam, eta) + mb_energy(fam, gam) + mb_interaction_mixed(fam, eta, gam);
        ok = ok && std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs));
      }
      note("W/U identity", ok);
    }
    {  // Quadrature against Monte Carlo.
      int agree = 0;
      const int trials = 40;
      for (int t = 0; t < trials; ++t) {
        const std::size_t n = 1 + rng() % 3;
        const double amp = 0.5 + 2 * u(rng), width = 0.02 + 0.1 * u(rng);
        EnsembleParams p;
        p.energy = EnergyModel::pair(PairPotential(
            "gauss", 1, [amp, width](double r) { return amp * std::exp(-r * r / width); }, AssumptionA{.phi1 = 0.0}));
        const Configuration extra = Configuration::line({u(rng)});
        const auto q = canonical_integral(p, n, extra, nullptr, Method::quadrature, 1 << 18, 1);
        const auto m = canonical_integral(p, n, extra, nullptr, Method::monte_carlo, 1 << 16, 500 + t);
        agree += std::abs(q.value - m.value) <= q.error + m.error;
      }
      os << agree << "/" << trials << " ";
      note("quadrature vs MC", agree >= 0.95 * trials);
    }
    {  // Bit-exact across workers.
      bool ok = true;
      const auto part = build_partition(Box::cube(1, 1.0), 0.25);
      for (auto choice : {MethodChoice::quadrature, MethodChoice::monte_carlo}) {
        MethodPolicy p;
        p.choice = choice;
        p.quad_budget = 1 << 18;
        p.mc_samples = 1 << 15;
        p.workers = 1;
        const double z1 = dilute_partition_function(rods(), part, {}, p, 4).value;
        const double r1 = correlation(rods(), Configuration::line({0.5}), {}, p, 4).value;
        for (unsigned w : {2u, 5u, 8u}) {
          p.workers = w;
          ok = ok && dilute_partition_function(rods(), part, {}, p, 4).value == z1;
          ok = ok && correlation(rods(), Configuration::line({0.5}), {}, p, 4).value == r1;
        }
      }
      note("bit-exact across workers", ok);
    }
    return Outcome{all, os.str()};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
