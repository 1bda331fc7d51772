#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qca/cli.hpp"
#include "qca/config.hpp"
#include "qca/convergence.hpp"
#include "qca/ensemble.hpp"
#include "qca/errors.hpp"
#include "qca/manybody.hpp"
#include "qca/stability.hpp"

namespace py = pybind11;
using namespace qca;

namespace {

Configuration make_config(int dim, const std::vector<std::vector<double>>& points) {
  return Configuration::from_points(dim, points);
}

std::vector<std::vector<double>> to_points(const Configuration& c) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < c.size(); ++i) out.emplace_back(c.point(i).begin(), c.point(i).end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_qca, m) {
  m.doc() = "Grand-canonical continuum gas and its quasi-continuous approximation";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalRejection>(m, "NumericalRejection", PyExc_RuntimeError);

  py::class_<Box>(m, "Box")
      .def(py::init<int, std::vector<double>>(), py::arg("dim"), py::arg("sides"))
      .def_static("cube", &Box::cube, py::arg("dim"), py::arg("side"))
      .def_property_readonly("dim", &Box::dim)
      .def_property_readonly("sides", &Box::sides)
      .def("volume", &Box::volume);

  py::class_<Configuration>(m, "Configuration")
      .def(py::init(&make_config), py::arg("dim"), py::arg("points"))
      .def("__len__", &Configuration::size)
      .def_property_readonly("dim", &Configuration::dim)
      .def("points", &to_points);

  py::class_<CubePartition>(m, "CubePartition")
      .def(py::init<Box, double>(), py::arg("box"), py::arg("edge"))
      .def_property_readonly("edge", &CubePartition::edge)
      .def("cube_count", &CubePartition::cube_count)
      .def("cube_index", [](const CubePartition& p, std::vector<double> x) { return p.cube_index(x); });

  m.def("occupancy", &occupancy, py::arg("config"), py::arg("part"));
  m.def("is_dilute", &is_dilute, py::arg("config"), py::arg("part"));
  m.def("compatible_edges", &compatible_edges, py::arg("coarse"), py::arg("fine"));

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("value", &Estimate::value)
      .def_readonly("error", &Estimate::error)
      .def_readonly("tail_warning", &Estimate::tail_warning)
      .def_readonly("note", &Estimate::note)
      .def_property_readonly("method", [](const Estimate& e) { return std::string(to_string(e.method)); })
      .def_property_readonly("per_term", [](const Estimate& e) { return e.breakdown.per_term; })
      .def_property_readonly("truncation_tail", [](const Estimate& e) { return e.breakdown.truncation_tail; })
      .def("__repr__", [](const Estimate& e) {
        return "Estimate(" + std::to_string(e.value) + " +- " + std::to_string(e.error) + ")";
      });

  py::class_<PairPotential>(m, "PairPotential")
      .def("__call__", &PairPotential::operator())
      .def_property_readonly("name", &PairPotential::name)
      .def_property_readonly("dim", &PairPotential::dim)
      .def_property_readonly("hard_core_radius", &PairPotential::hard_core_radius);
  m.def("inverse_power", &inverse_power, py::arg("dim"), py::arg("phi0"), py::arg("s"));
  m.def("hard_core", &hard_core, py::arg("dim"), py::arg("sigma"));
  m.def("hard_core_plus_well", &hard_core_plus_well, py::arg("dim"), py::arg("sigma"), py::arg("depth"),
        py::arg("range"));
  m.def("power_core_exp_tail", &power_core_exp_tail, py::arg("dim"), py::arg("phi0"), py::arg("s"), py::arg("phi1"),
        py::arg("kappa"));
  m.def("zero_potential", &zero_potential, py::arg("dim"));
  m.def("b_of_a", [](const PairPotential& p, double a) { return b_of_a(p, a).value; }, py::arg("pot"), py::arg("a"));
  m.def("upsilon_eps", &upsilon_eps, py::arg("pot"), py::arg("a"), py::arg("eps") = 0.0, py::arg("cutoff") = 64);
  m.def("pair_energy", &pair_energy, py::arg("pot"), py::arg("config"));

  py::class_<StabilityConstants>(m, "StabilityConstants")
      .def(py::init([](double A, double B, double a, int m_exp) {
             StabilityConstants c;
             c.A = A;
             c.B = B;
             c.a = a;
             c.m = m_exp;
             return c;
           }),
           py::arg("A"), py::arg("B"), py::arg("a") = 0.0, py::arg("m") = 2)
      .def_readwrite("a", &StabilityConstants::a)
      .def_readwrite("b", &StabilityConstants::b)
      .def_readwrite("upsilon0", &StabilityConstants::upsilon0)
      .def_readwrite("A", &StabilityConstants::A)
      .def_readwrite("B", &StabilityConstants::B)
      .def_readwrite("m", &StabilityConstants::m);
  m.def("sss_constants", &sss_constants, py::arg("pot"), py::arg("a"), py::arg("cutoff") = 64);

  py::class_<AStar>(m, "AStar")
      .def_readonly("a_star", &AStar::a_star)
      .def_readonly("residual", &AStar::residual)
      .def_readonly("B_delta", &AStar::B_delta);
  m.def(
      "find_a_star",
      [](const PairPotential& p, double delta) { return find_a_star(p, delta); }, py::arg("pot"), py::arg("delta"));

  py::class_<ManyBodyFamily>(m, "ManyBodyFamily").def_property_readonly("p_max", &ManyBodyFamily::p_max);
  m.def("pair_only", &pair_only, py::arg("pot"));
  m.def("pair_plus_triple", &pair_plus_triple, py::arg("pot"), py::arg("strength"), py::arg("range"));
  m.def("mb_energy", &mb_energy, py::arg("family"), py::arg("config"));
  m.def("mb_interaction", &mb_interaction, py::arg("family"), py::arg("eta"), py::arg("gamma"));
  m.def("lemma21_constants", &lemma21_constants, py::arg("family"), py::arg("a"), py::arg("cutoff") = 4);

  py::class_<EnergyModel>(m, "EnergyModel")
      .def_static("ideal", &EnergyModel::ideal, py::arg("dim"))
      .def_static("pair", &EnergyModel::pair, py::arg("pot"))
      .def_static("many_body", &EnergyModel::many_body, py::arg("family"))
      .def("energy", py::overload_cast<const Configuration&>(&EnergyModel::energy, py::const_))
      .def("describe", &EnergyModel::describe);

  py::class_<EnsembleParams>(m, "EnsembleParams")
      .def(py::init([](double z, double beta, Box box, EnergyModel energy, double B) {
             return EnsembleParams{z, beta, std::move(box), std::move(energy), B};
           }),
           py::arg("z"), py::arg("beta"), py::arg("box"), py::arg("energy"), py::arg("stability_B") = 0.0)
      .def_readwrite("z", &EnsembleParams::z)
      .def_readwrite("beta", &EnsembleParams::beta);

  py::class_<MethodPolicy>(m, "MethodPolicy")
      .def(py::init([](const std::string& method, std::size_t quad_budget, std::size_t mc_samples, unsigned workers) {
             MethodPolicy p;
             p.choice = parse_method(method);
             p.quad_budget = quad_budget;
             p.mc_samples = mc_samples;
             p.workers = workers;
             return p;
           }),
           py::arg("method") = "auto", py::arg("quad_budget") = std::size_t{1} << 24,
           py::arg("mc_samples") = std::size_t{1} << 18, py::arg("workers") = 0);

  py::class_<Truncation>(m, "Truncation")
      .def(py::init([](std::optional<std::size_t> n_max, double tol) { return Truncation{n_max, tol}; }),
           py::arg("n_max") = std::nullopt, py::arg("tolerance") = 1e-10);

  m.def("partition_function", &partition_function, py::arg("params"), py::arg("trunc") = Truncation{},
        py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1);
  m.def("dilute_partition_function", &dilute_partition_function, py::arg("params"), py::arg("part"),
        py::arg("trunc") = Truncation{}, py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1);
  m.def("correlation", &correlation, py::arg("params"), py::arg("eta"), py::arg("trunc") = Truncation{},
        py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1);
  m.def("dilute_correlation", &dilute_correlation, py::arg("params"), py::arg("eta"), py::arg("part"),
        py::arg("trunc") = Truncation{}, py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1);
  m.def(
      "canonical_integral",
      [](const EnsembleParams& p, std::size_t n, const Configuration& extra, const CubePartition* part,
         const std::string& method, std::size_t budget, std::uint64_t seed) {
        return canonical_integral(p, n, extra, part,
                                  method == "mc" ? Method::monte_carlo : Method::quadrature, budget, seed);
      },
      py::arg("params"), py::arg("n"), py::arg("extra"), py::arg("dilute_part") = nullptr,
      py::arg("method") = "quadrature", py::arg("budget") = std::size_t{1} << 20, py::arg("seed") = 1);

  m.def("sample_configs", &sample_configs, py::arg("box"), py::arg("max_n"), py::arg("samples"), py::arg("seed"));
  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("samples", &StabilityReport::samples)
      .def_readonly("worst_margin", &StabilityReport::worst_margin)
      .def_readonly("note", &StabilityReport::note)
      .def_property_readonly("violations", [](const StabilityReport& r) { return r.violations.size(); });
  m.def(
      "verify_bound",
      [](const EnergyModel& e, const StabilityConstants& c, const std::string& kind, const CubePartition& part,
         const std::vector<Configuration>& configs) {
        return verify_bound([&](const Configuration& g) { return e.energy(g); }, c, parse_stability_kind(kind), part,
                            configs);
      },
      py::arg("energy"), py::arg("constants"), py::arg("kind"), py::arg("part"), py::arg("configs"));

  m.def(
      "epsilon1",
      [](double a, int dim, double z, double beta, const StabilityConstants& c, double ups) {
        return epsilon1(a, dim, z, beta, c, ups);
      },
      py::arg("a"), py::arg("dim"), py::arg("z"), py::arg("beta"), py::arg("constants"), py::arg("upsilon_star"));
  m.def("remainder_rhs", &remainder_rhs, py::arg("eta_size"), py::arg("volume"), py::arg("volume_eta"), py::arg("a"),
        py::arg("dim"), py::arg("z"), py::arg("beta"), py::arg("constants"), py::arg("upsilon_star"));

  py::class_<IdentityReport>(m, "IdentityReport")
      .def_readonly("lhs", &IdentityReport::lhs)
      .def_readonly("rhs", &IdentityReport::rhs)
      .def_readonly("difference", &IdentityReport::difference)
      .def_readonly("combined_error", &IdentityReport::combined_error)
      .def_readonly("identity_holds", &IdentityReport::identity_holds)
      .def_readonly("remainder", &IdentityReport::remainder);
  m.def(
      "verify_identity58",
      [](const EnsembleParams& p, const Configuration& eta, const CubePartition& part, const Truncation& tr,
         const MethodPolicy& pol, std::uint64_t seed) { return verify_identity58(p, eta, part, tr, pol, seed); },
      py::arg("params"), py::arg("eta"), py::arg("part"), py::arg("trunc") = Truncation{},
      py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1);

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("a", &SweepRow::a)
      .def_readonly("Z", &SweepRow::Z)
      .def_readonly("Z_minus", &SweepRow::Z_minus)
      .def_readonly("ratio", &SweepRow::ratio)
      .def_readonly("rho", &SweepRow::rho)
      .def_readonly("rho_minus", &SweepRow::rho_minus)
      .def_readonly("absdiff", &SweepRow::absdiff)
      .def_readonly("rbound", &SweepRow::rbound);
  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("rows", &SweepResult::rows)
      .def_readonly("first_below", &SweepResult::first_below);
  m.def(
      "sweep",
      [](const EnsembleParams& p, const Configuration& eta, const std::vector<double>& a_list, const Truncation& tr,
         const MethodPolicy& pol, std::uint64_t seed, double eps) { return sweep(p, eta, a_list, tr, pol, seed, eps); },
      py::arg("params"), py::arg("eta"), py::arg("a_list"), py::arg("trunc") = Truncation{},
      py::arg("policy") = MethodPolicy{}, py::arg("seed") = 1, py::arg("epsilon") = 0.05);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return run(args); }, py::arg("args"),
      "Run the command-line driver in-process; returns the exit code.");
}
