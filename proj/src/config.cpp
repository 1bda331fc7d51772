#include "qca/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qca/errors.hpp"

namespace qca {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  // Accept simple fractions such as 1/16.
  const auto slash = t.find('/');
  if (slash != std::string::npos)
    return to_double(key, t.substr(0, slash)) / to_double(key, t.substr(slash + 1));
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw InvalidArgument("config key '" + key + "': cannot read '" + text + "' as a number");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

}  // namespace

const std::set<std::string>& RunConfig::known_keys() {
  static const std::set<std::string> keys{
      "potential.kind", "potential.phi0", "potential.s", "potential.phi1", "potential.kappa",
      "potential.sigma", "potential.depth", "potential.range",
      "family.triple_strength", "family.triple_range",
      "box.dim", "box.sides",
      "z", "beta", "a", "a_list", "eta",
      "n_max", "tolerance", "method", "budget.quadrature", "budget.mc", "seed", "workers",
      "ensemble.B",
      "stability.kind", "stability.samples", "stability.max_n", "stability.finite_only", "stability.A",
      "stability.B", "stability.m",
      "constants.eps", "constants.delta", "constants.cutoff",
      "epsilon1.A", "epsilon1.B", "epsilon1.upsilon", "epsilon1.n_cap",
      "bound.A", "bound.B", "bound.upsilon",
      "sweep.epsilon",
      "output.csv", "output.json"};
  return keys;
}

void RunConfig::set(const std::string& key_in, const std::string& value) {
  const std::string key = trim(key_in);
  if (!known_keys().count(key)) throw InvalidArgument("unknown config key '" + key + "'");
  values_[key] = trim(value);
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("malformed JSON config: ") + e.what());
    }
    if (!doc.contains("config") || !doc["config"].is_object())
      throw InvalidArgument("JSON config needs a \"config\" object");
    for (const auto& [k, v] : doc["config"].items()) {
      if (!v.is_string()) throw InvalidArgument("config key '" + k + "' must hold a string");
      cfg.set(k, v.get<std::string>());
    }
    return cfg;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + " has no '='");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

std::optional<double> RunConfig::get_optional_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return to_double(key, it->second);
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const double v = to_double(key, it->second);
  if (v != std::floor(v)) throw InvalidArgument("config key '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split(get_string(key, ""), ',')) out.push_back(to_double(key, s));
  return out;
}

std::vector<std::vector<double>> RunConfig::get_points(const std::string& key) const {
  std::vector<std::vector<double>> out;
  for (const auto& p : split(get_string(key, ""), ';')) {
    std::vector<double> pt;
    for (const auto& s : split(p, ',')) pt.push_back(to_double(key, s));
    out.push_back(std::move(pt));
  }
  return out;
}

int RunConfig::dim() const {
  const long long d = get_int("box.dim", 1);
  if (d < 1 || d > 3) throw InvalidArgument("box.dim must be 1, 2 or 3");
  return static_cast<int>(d);
}

Box RunConfig::box() const {
  const int d = dim();
  auto sides = get_list("box.sides");
  if (sides.empty()) sides = {1.0};
  if (sides.size() == 1) sides.assign(static_cast<std::size_t>(d), sides[0]);
  if (sides.size() != static_cast<std::size_t>(d)) throw InvalidArgument("box.sides needs 1 or box.dim entries");
  return Box(d, sides);
}

EnergyModel RunConfig::energy() const {
  const int d = dim();
  const std::string kind = get_string("potential.kind", "ideal");
  std::optional<PairPotential> pot;
  if (kind == "ideal") {
    if (has("family.triple_strength")) throw InvalidArgument("family.triple_strength needs a pair potential");
    return EnergyModel::ideal(d);
  } else if (kind == "inverse_power") {
    pot = inverse_power(d, get_double("potential.phi0", 1.0), get_double("potential.s", 1.0));
  } else if (kind == "hard_core") {
    pot = hard_core(d, get_double("potential.sigma", 0.3));
  } else if (kind == "hard_core_plus_well") {
    pot = hard_core_plus_well(d, get_double("potential.sigma", 0.3), get_double("potential.depth", 1.0),
                              get_double("potential.range", 0.6));
  } else if (kind == "power_core_exp_tail") {
    pot = power_core_exp_tail(d, get_double("potential.phi0", 1.0), get_double("potential.s", 2.0),
                              get_double("potential.phi1", 1.0), get_double("potential.kappa", 1.0));
  } else {
    throw InvalidArgument("unknown potential.kind '" + kind +
                          "' (ideal, inverse_power, hard_core, hard_core_plus_well, power_core_exp_tail)");
  }
  if (has("family.triple_strength"))
    return EnergyModel::many_body(pair_plus_triple(*pot, get_double("family.triple_strength", 0.0),
                                                   get_double("family.triple_range", 1.0)));
  return EnergyModel::pair(*pot);
}

EnsembleParams RunConfig::ensemble() const {
  EnsembleParams p{get_double("z", 1.0), get_double("beta", 1.0), box(), energy(), get_double("ensemble.B", 0.0)};
  return p;
}

MethodPolicy RunConfig::policy() const {
  MethodPolicy m;
  m.choice = parse_method(get_string("method", "auto"));
  const long long qb = get_int("budget.quadrature", static_cast<long long>(m.quad_budget));
  const long long mb = get_int("budget.mc", static_cast<long long>(m.mc_samples));
  const long long w = get_int("workers", 0);
  if (qb < 1 || mb < 1) throw InvalidArgument("budgets must be >= 1");
  if (w < 0) throw InvalidArgument("workers must be >= 0");
  m.quad_budget = static_cast<std::size_t>(qb);
  m.mc_samples = static_cast<std::size_t>(mb);
  m.workers = static_cast<unsigned>(w);
  return m;
}

Truncation RunConfig::truncation() const {
  Truncation t;
  t.tolerance = get_double("tolerance", t.tolerance);
  if (has("n_max")) {
    const long long n = get_int("n_max", 0);
    if (n < 0) throw InvalidArgument("n_max must be >= 0");
    t.n_max = static_cast<std::size_t>(n);
  }
  return t;
}

Configuration RunConfig::eta() const {
  const int d = dim();
  auto pts = get_points("eta");
  for (const auto& p : pts)
    if (p.size() != static_cast<std::size_t>(d)) throw InvalidArgument("eta points need box.dim coordinates");
  return Configuration::from_points(d, pts);
}

std::uint64_t RunConfig::seed() const {
  const long long s = get_int("seed", 1);
  if (s < 0) throw InvalidArgument("seed must be >= 0");
  return static_cast<std::uint64_t>(s);
}

}  // namespace qca
