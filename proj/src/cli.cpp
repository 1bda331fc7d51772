#include "qca/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qca/config.hpp"
#include "qca/convergence.hpp"
#include "qca/errors.hpp"
#include "qca/manybody.hpp"
#include "qca/stability.hpp"

namespace qca {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kSubcommands{"constants", "check-stability", "zfun",         "rho",
                                            "epsilon1",  "sweep",           "verify-identity"};

// Rows of numbers under a fixed header, plus the error bounds for the sidecar.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  json error_bounds = json::object();
  json truncations = json::object();
  json notes = json::array();
};

std::string format(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return format(v);
}

std::string csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format(r[i]);
    os << '\n';
  }
  return os.str();
}

double edge(const RunConfig& cfg) {
  if (!cfg.has("a")) throw InvalidArgument("config key 'a' is required for this subcommand");
  const double a = cfg.get_double("a", 0.0);
  if (!(a > 0)) throw InvalidArgument("a must be positive");
  return a;
}

const PairPotential& require_pair(const EnergyModel& m, const char* what) {
  if (const PairPotential* p = m.pair_potential()) return *p;
  throw InvalidArgument(std::string(what) + " needs a pair potential (potential.kind other than ideal)");
}

json truncation_json(const Truncation& t, const Estimate& e) {
  json j;
  j["tolerance"] = t.tolerance;
  j["n_max"] = t.n_max ? json(*t.n_max) : json("auto");
  j["used"] = e.note;
  j["tail"] = number(e.breakdown.truncation_tail);
  j["tail_warning"] = e.tail_warning;
  return j;
}

// ---------------------------------------------------------------- commands

Table cmd_constants(const RunConfig& cfg) {
  const double a = edge(cfg);
  const EnergyModel model = cfg.energy();
  const int cutoff = static_cast<int>(cfg.get_int("constants.cutoff", 64));
  Table t;
  t.header = {"a", "b", "upsilon_eps", "upsilon_eps_err", "A", "B", "a_star", "I_bar", "I_bar_err"};
  if (const ManyBodyFamily* fam = model.family()) {
    const StabilityConstants c = lemma21_constants(*fam, a, cutoff);
    const Estimate ib = I_bar(*fam, a, cutoff);
    t.rows.push_back({a, c.b, kNaN, kNaN, c.A, c.B, kNaN, ib.value, ib.error});
    t.error_bounds["I_bar"] = number(ib.error);
    return t;
  }
  const PairPotential& pot = require_pair(model, "constants");
  const double eps = cfg.get_double("constants.eps", 0.0);
  const Estimate ups = upsilon_eps(pot, a, eps, std::max(cutoff, static_cast<int>(std::ceil(pot.params().R / a))));
  const StabilityConstants c = sss_constants(pot, a, cutoff);
  double a_star = kNaN;
  if (cfg.has("constants.delta")) {
    const AStar s = find_a_star(pot, cfg.get_double("constants.delta", 0.5), std::nullopt, std::nullopt, 1e-6, cutoff);
    a_star = s.a_star;
    t.error_bounds["a_star_residual"] = number(s.residual);
  }
  t.rows.push_back({a, c.b, ups.value, ups.error, c.A, c.B, a_star, kNaN, kNaN});
  t.error_bounds["upsilon_eps"] = number(ups.error);
  return t;
}

Table cmd_check_stability(const RunConfig& cfg) {
  const double a = edge(cfg);
  const EnsembleParams p = cfg.ensemble();
  const StabilityKind kind = parse_stability_kind(cfg.get_string("stability.kind", "SSS"));
  StabilityConstants c;
  if (cfg.has("stability.A") || cfg.has("stability.B") || p.energy.is_ideal()) {
    c.a = a;
    c.A = cfg.get_double("stability.A", 0.0);
    c.B = cfg.get_double("stability.B", 0.0);
  } else if (const ManyBodyFamily* fam = p.energy.family()) {
    c = lemma21_constants(*fam, a, static_cast<int>(cfg.get_int("constants.cutoff", 64)));
  } else {
    c = sss_constants(*p.energy.pair_potential(), a, static_cast<int>(cfg.get_int("constants.cutoff", 64)));
  }
  c.m = static_cast<int>(cfg.get_int("stability.m", c.m));
  const long long samples = cfg.get_int("stability.samples", 10000);
  const long long max_n = cfg.get_int("stability.max_n", 8);
  if (samples < 0 || max_n < 1) throw InvalidArgument("stability.samples >= 0 and stability.max_n >= 1 required");
  auto energy = [&](const Configuration& g) { return p.energy.energy(g); };
  auto configs = sample_configs(p.box, static_cast<std::size_t>(max_n), static_cast<std::size_t>(samples), cfg.seed());
  if (cfg.get_int("stability.finite_only", 0) != 0) configs = finite_energy_only(std::move(configs), energy);
  const StabilityReport r =
      verify_bound(energy, c, kind, build_partition(p.box, a), configs, cfg.policy().workers);
  Table t;
  t.header = {"a", "A", "B", "m", "samples", "violations", "worst_margin"};
  t.rows.push_back({a, c.A, c.B, static_cast<double>(c.m), static_cast<double>(r.samples),
                    static_cast<double>(r.violations.size()), r.worst_margin});
  t.notes.push_back(r.note);
  json v = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(r.violations.size(), 20); ++i)
    v.push_back({{"coords", r.violations[i].config.coords()}, {"lhs", number(r.violations[i].lhs)},
                 {"rhs", number(r.violations[i].rhs)}});
  t.error_bounds["violations"] = v;
  return t;
}

Table cmd_zfun(const RunConfig& cfg) {
  const EnsembleParams p = cfg.ensemble();
  const Truncation tr = cfg.truncation();
  const MethodPolicy pol = cfg.policy();
  const Estimate Z = partition_function(p, tr, pol, cfg.seed());
  Table t;
  t.header = {"a", "Z", "Z_err", "Zminus", "Zminus_err", "ratio", "ratio_err"};
  t.truncations["Z"] = truncation_json(tr, Z);
  t.error_bounds["Z"] = {{"total", number(Z.error)},
                         {"tail", number(Z.breakdown.truncation_tail)},
                         {"statistical", number(Z.breakdown.statistical)},
                         {"discretization", number(Z.breakdown.discretization)}};
  if (!cfg.has("a")) {
    t.rows.push_back({kNaN, Z.value, Z.error, kNaN, kNaN, kNaN, kNaN});
    return t;
  }
  const double a = edge(cfg);
  const Estimate Zm = dilute_partition_function(p, build_partition(p.box, a), tr, pol, cfg.seed());
  const Estimate r = ratio(Zm, Z);
  t.truncations["Zminus"] = truncation_json(tr, Zm);
  t.error_bounds["Zminus"] = number(Zm.error);
  t.rows.push_back({a, Z.value, Z.error, Zm.value, Zm.error, r.value, r.error});
  return t;
}

Table cmd_rho(const RunConfig& cfg) {
  const EnsembleParams p = cfg.ensemble();
  const Truncation tr = cfg.truncation();
  const MethodPolicy pol = cfg.policy();
  const Configuration eta = cfg.eta();
  const Estimate rho = correlation(p, eta, tr, pol, cfg.seed());
  Table t;
  t.header = {"a", "rho", "rho_err", "rhominus", "rhominus_err", "absdiff"};
  t.error_bounds["rho"] = number(rho.error);
  if (!cfg.has("a")) {
    t.rows.push_back({kNaN, rho.value, rho.error, kNaN, kNaN, kNaN});
    return t;
  }
  const double a = edge(cfg);
  const Estimate rm = dilute_correlation(p, eta, build_partition(p.box, a), tr, pol, cfg.seed());
  t.error_bounds["rhominus"] = number(rm.error);
  t.rows.push_back({a, rho.value, rho.error, rm.value, rm.error, std::abs(rho.value - rm.value)});
  return t;
}

std::vector<double> edges(const RunConfig& cfg) {
  if (cfg.has("a_list")) return cfg.get_list("a_list");
  return {edge(cfg)};
}

Table cmd_epsilon1(const RunConfig& cfg) {
  const EnsembleParams p = cfg.ensemble();
  const auto list = edges(cfg);
  const long long n_cap = cfg.get_int("epsilon1.n_cap", 64);
  if (n_cap < 2) throw InvalidArgument("epsilon1.n_cap must be >= 2");
  const bool explicit_constants = cfg.has("epsilon1.A");
  const ConstantsProvider provider = default_constants(p.energy, static_cast<int>(cfg.get_int("constants.cutoff", 64)));
  Table t;
  t.header = {"a", "eps1", "eps1_err", "A", "B", "upsilon"};
  json errs = json::array();
  for (double a : list) {
    if (!(a > 0)) throw InvalidArgument("a must be positive");
    BoundConstants bc;
    if (explicit_constants) {
      bc.constants.a = a;
      bc.constants.A = cfg.get_double("epsilon1.A", 1.0);
      bc.constants.B = cfg.get_double("epsilon1.B", 0.0);
      bc.upsilon_star = cfg.get_double("epsilon1.upsilon", 0.0);
    } else {
      bc = provider(a);
    }
    const Estimate e = epsilon1(a, p.box.dim(), p.z, p.beta, bc.constants, bc.upsilon_star,
                                static_cast<std::size_t>(n_cap));
    t.rows.push_back({a, e.value, e.error, bc.constants.A, bc.constants.B, bc.upsilon_star});
    errs.push_back(number(e.error));
  }
  t.error_bounds["eps1_tail"] = errs;
  return t;
}

Table cmd_sweep(const RunConfig& cfg) {
  const EnsembleParams p = cfg.ensemble();
  const Truncation tr = cfg.truncation();
  if (!cfg.has("a_list")) throw InvalidArgument("sweep needs config key 'a_list'");
  const auto list = cfg.get_list("a_list");
  check_a_list(p.box, list);
  const SweepResult res = sweep(p, cfg.eta(), list, tr, cfg.policy(), cfg.seed(), cfg.get_double("sweep.epsilon", 0.05),
                                default_constants(p.energy, static_cast<int>(cfg.get_int("constants.cutoff", 64))));
  Table t;
  t.header = {"a", "Z", "Z_err", "Zminus", "Zminus_err", "ratio", "rho", "rhominus", "absdiff", "eps1", "rbound"};
  json errs = json::array();
  for (const auto& r : res.rows) {
    t.rows.push_back({r.a, r.Z.value, r.Z.error, r.Z_minus.value, r.Z_minus.error, r.ratio.value, r.rho.value,
                      r.rho_minus.value, r.absdiff, r.eps1.value, r.rbound});
    errs.push_back({{"a", r.a},
                    {"ratio_err", number(r.ratio.error)},
                    {"rho_err", number(r.rho.error)},
                    {"rhominus_err", number(r.rho_minus.error)},
                    {"absdiff_err", number(r.absdiff_error)},
                    {"eps1_err", number(r.eps1.error)},
                    {"constants", r.constants_note}});
  }
  t.error_bounds["rows"] = errs;
  t.error_bounds["first_below_epsilon"] = res.first_below ? json(*res.first_below) : json(nullptr);
  if (!res.rows.empty()) {
    t.truncations["Z"] = truncation_json(tr, res.rows.front().Z);
    t.truncations["Zminus_last"] = truncation_json(tr, res.rows.back().Z_minus);
  }
  return t;
}

Table cmd_verify_identity(const RunConfig& cfg) {
  const EnsembleParams p = cfg.ensemble();
  const double a = edge(cfg);
  std::optional<BoundConstants> bound;
  if (cfg.has("bound.A")) {
    BoundConstants b;
    b.constants.a = a;
    b.constants.A = cfg.get_double("bound.A", 0.0);
    b.constants.B = cfg.get_double("bound.B", 0.0);
    b.upsilon_star = cfg.get_double("bound.upsilon", 0.0);
    bound = b;
  }
  const Truncation tr = cfg.truncation();
  const IdentityReport r =
      verify_identity58(p, cfg.eta(), build_partition(p.box, a), tr, cfg.policy(), cfg.seed(), bound);
  Table t;
  t.header = {"a",         "rho",      "rhs",         "difference",      "combined_error",
              "holds",     "remainder", "remainder_err", "remainder_bound", "bound_holds"};
  t.rows.push_back({a, r.lhs, r.rhs, r.difference, r.combined_error, r.identity_holds ? 1.0 : 0.0, r.remainder.value,
                    r.remainder.error, r.remainder_bound.value_or(kNaN),
                    r.bound_holds ? (*r.bound_holds ? 1.0 : 0.0) : kNaN});
  t.truncations["n_max"] = r.n_max;
  t.error_bounds["combined"] = number(r.combined_error);
  return t;
}

Table dispatch(const std::string& sub, const RunConfig& cfg) {
  if (sub == "constants") return cmd_constants(cfg);
  if (sub == "check-stability") return cmd_check_stability(cfg);
  if (sub == "zfun") return cmd_zfun(cfg);
  if (sub == "rho") return cmd_rho(cfg);
  if (sub == "epsilon1") return cmd_epsilon1(cfg);
  if (sub == "sweep") return cmd_sweep(cfg);
  if (sub == "verify-identity") return cmd_verify_identity(cfg);
  throw InvalidArgument("unknown subcommand '" + sub + "'");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path + "'");
  f << content;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Quasi-continuous approximation of a continuum gas"};
  std::string sub, config_path;
  std::vector<std::string> overrides;
  int workers = -1;
  app.add_option("subcommand", sub, "constants | check-stability | zfun | rho | epsilon1 | sweep | verify-identity")
      ->required();
  app.add_option("-c,--config", config_path, "key = value file, or a JSON sidecar of an earlier run");
  app.add_option("-s,--set", overrides, "override one config key (key=value)");
  app.add_option("-w,--workers", workers, "worker threads (outputs do not depend on it)");
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), sub) == kSubcommands.end())
      throw InvalidArgument("unknown subcommand '" + sub + "'");
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (workers >= 0) cfg.set("workers", std::to_string(workers));

    const Table table = dispatch(sub, cfg);
    const std::string out = csv(table);
    if (cfg.has("output.csv"))
      write_file(cfg.get_string("output.csv", ""), out);
    else
      std::cout << out;

    if (cfg.has("output.json")) {
      json side;
      side["subcommand"] = sub;
      json echo = json::object();
      for (const auto& [k, v] : cfg.values())
        if (k != "workers") echo[k] = v;
      side["config"] = echo;
      side["seed"] = cfg.seed();
      side["truncations"] = table.truncations;
      side["error_bounds"] = table.error_bounds;
      side["notes"] = table.notes;
      side["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_file(cfg.get_string("output.json", ""), side.dump(2) + "\n");
    }
    return kExitOk;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NumericalRejection& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace qca
