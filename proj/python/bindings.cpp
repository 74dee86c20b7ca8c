#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xiwf/config.hpp"
#include "xiwf/discrete.hpp"
#include "xiwf/dual.hpp"
#include "xiwf/errors.hpp"
#include "xiwf/experiment.hpp"
#include "xiwf/fixation.hpp"
#include "xiwf/limit.hpp"
#include "xiwf/selection.hpp"
#include "xiwf/simplex.hpp"

namespace py = pybind11;
using namespace xiwf;

namespace {

// Streams for single-path calls made from Python.
constexpr std::uint64_t kPyPathStream = 61;
constexpr std::uint64_t kPyDualStream = 62;

std::vector<Atom> to_atoms(const std::vector<std::pair<double, std::vector<double>>>& atoms) {
  std::vector<Atom> out;
  for (const auto& [w, z] : atoms) out.push_back({w, SimplexPoint(z)});
  return out;
}

}  // namespace

PYBIND11_MODULE(_xiwf, m) {
  m.doc() = "Wright-Fisher graphs with selection and extreme reproductive events";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FixationRefused>(m, "FixationRefused", PyExc_RuntimeError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

  py::class_<McEstimate>(m, "McEstimate")
      .def_property_readonly("mean", &McEstimate::mean)
      .def_property_readonly("std_error", &McEstimate::std_error)
      .def_property_readonly("replicates", &McEstimate::replicates)
      .def_property_readonly("is_exact", &McEstimate::is_exact)
      .def("interval", [](const McEstimate& e, double level) {
        const auto ci = e.interval(level);
        return py::make_tuple(ci.lower, ci.upper);
      }, py::arg("level") = 0.95)
      .def("__repr__", [](const McEstimate& e) {
        return "McEstimate(" + std::to_string(e.mean()) + " +- " + std::to_string(e.std_error()) + ")";
      });

  py::class_<SelectionLaw>(m, "SelectionLaw")
      .def_static("neutral", &SelectionLaw::neutral)
      .def_static("geometric", &SelectionLaw::geometric, py::arg("s"))
      .def_static("explicit_pmf", &SelectionLaw::explicit_pmf, py::arg("pmf"), py::arg("at_infinity") = 0.0)
      .def_static("from_branching", &SelectionLaw::from_branching, py::arg("rho"), py::arg("pi"),
                  py::arg("pi_inf") = 0.0)
      .def_static("offspring", &SelectionLaw::offspring, py::arg("pi"))
      .def_static("offspring_dirac", &SelectionLaw::offspring_dirac, py::arg("k"))
      .def_property_readonly("rho", &SelectionLaw::rho)
      .def_property_readonly("beta", &SelectionLaw::beta)
      .def("pmf", &SelectionLaw::pmf)
      .def("pi", &SelectionLaw::pi)
      .def("pgf", [](const SelectionLaw& q, double x) { return pgf(q, x); })
      .def("s", [](const SelectionLaw& q, double x) { return selection_s(q, x); })
      .def("drift", [](const SelectionLaw& q, double x) { return branching_drift(q, x); })
      .def("__repr__", &SelectionLaw::describe);

  py::class_<XiMeasure>(m, "XiMeasure")
      .def_static("finite_atomic", [](const std::vector<std::pair<double, std::vector<double>>>& atoms) {
        return XiMeasure::finite_atomic(to_atoms(atoms));
      }, py::arg("atoms"))
      .def_static("lambda_dirac", &XiMeasure::lambda_dirac, py::arg("y"), py::arg("total_mass") = 1.0)
      .def_static("lambda_beta", &XiMeasure::lambda_beta, py::arg("a"), py::arg("b"),
                  py::arg("total_mass") = 1.0)
      .def_static("stick_breaking_uniform", [](double mass) {
        return XiMeasure::stick_breaking(StickLaw{}, mass);
      }, py::arg("total_mass") = 1.0)
      .def_property_readonly("total_mass", &XiMeasure::total_mass)
      .def("intensity", [](const XiMeasure& xi, double floor) {
        const auto r = intensity_mass(xi, floor);
        return py::make_tuple(r.value, r.std_error);
      }, py::arg("floor"))
      .def("__repr__", &XiMeasure::describe);

  py::class_<DiscreteParams>(m, "DiscreteParams")
      .def(py::init<int, double, SelectionLaw, const XiMeasure&>(), py::arg("N"), py::arg("gamma"),
           py::arg("q"), py::arg("xi"))
      .def_readonly("N", &DiscreteParams::population)
      .def_readonly("gamma", &DiscreteParams::gamma);

  py::class_<DualityReport>(m, "DualityReport")
      .def_readonly("lhs", &DualityReport::lhs)
      .def_readonly("rhs", &DualityReport::rhs)
      .def_readonly("gap", &DualityReport::gap)
      .def_readonly("tolerance", &DualityReport::tolerance)
      .def_readonly("passed", &DualityReport::pass);

  m.def("sampling_probability", &sampling_probability_exact, py::arg("params"), py::arg("x"), py::arg("n"));
  m.def("forward_matrix", &forward_matrix, py::arg("params"));
  m.def("ancestral_matrix", &ancestral_matrix, py::arg("params"));
  m.def("sampling_duality_check", [](const DiscreteParams& p, int type0, int n, int g) {
    return sampling_duality_check(p, type0, n, g, SamplingMode::exact());
  }, py::arg("params"), py::arg("type0"), py::arg("n"), py::arg("generations"));
  m.def("moment_gap_exact", &moment_gap_exact, py::arg("params"), py::arg("type0"), py::arg("n"),
        py::arg("generations"));
  m.def("forward_trajectory", [](const DiscreteParams& p, int type0, int g, std::uint64_t seed) {
    Rng rng = make_rng(seed, kPyPathStream, 0);
    return forward_trajectory(p, type0, g, rng);
  }, py::arg("params"), py::arg("type0"), py::arg("generations"), py::arg("seed"));

  py::class_<LimitParams>(m, "LimitParams")
      .def(py::init([](double kappa, double sigma, SelectionLaw pi, std::optional<XiMeasure> xi,
                       double floor) { return LimitParams(kappa, sigma, std::move(pi), std::move(xi), floor); }),
           py::arg("kappa"), py::arg("sigma"), py::arg("pi"), py::arg("xi") = py::none(),
           py::arg("jump_floor") = 1e-3)
      .def_readonly("kappa", &LimitParams::kappa)
      .def_readonly("sigma", &LimitParams::sigma);

  m.def("generator_exact", &generator_apply_exact, py::arg("params"), py::arg("n"), py::arg("x"));
  m.def("dual_generator_exact", &dual_generator_exact, py::arg("params"), py::arg("x"), py::arg("n"));
  m.def("simulate_path", [](const LimitParams& p, double x0, double horizon, double dt, std::uint64_t seed) {
    Rng rng = make_rng(seed, kPyPathStream, 0);
    const auto path = simulate_path(p, x0, horizon, dt, rng, {1, false});
    return py::make_tuple(path.times, path.values);
  }, py::arg("params"), py::arg("x0"), py::arg("horizon"), py::arg("dt") = 1e-3, py::arg("seed") = 0);
  m.def("terminal_moment", &terminal_moment, py::arg("params"), py::arg("x0"), py::arg("power"),
        py::arg("horizon"), py::arg("dt"), py::arg("replicates"), py::arg("seed"));
  m.def("simulate_dual", [](const LimitParams& p, std::uint64_t n0, double horizon, std::uint64_t cap,
                            std::uint64_t seed) {
    Rng rng = make_rng(seed, kPyDualStream, 0);
    const auto path = simulate_dual(p, n0, horizon, rng, {cap, true});
    std::vector<double> times{0.0};
    std::vector<std::uint64_t> states{n0};
    for (const auto& e : path.log) times.push_back(e.time), states.push_back(e.state);
    return py::make_tuple(times, states, path.escaped);
  }, py::arg("params"), py::arg("n0"), py::arg("horizon"), py::arg("cap") = 10000, py::arg("seed") = 0);
  m.def("dual_moment", &dual_moment, py::arg("params"), py::arg("n0"), py::arg("x"), py::arg("horizon"),
        py::arg("replicates"), py::arg("seed"), py::arg("cap") = 10000);

  py::class_<RecurrenceReport>(m, "RecurrenceReport")
      .def_readonly("escape_fraction", &RecurrenceReport::escape_fraction)
      .def_readonly("mean_returns", &RecurrenceReport::mean_returns)
      .def_readonly("mean_return_time_to_1", &RecurrenceReport::mean_return_time_to_1)
      .def_property_readonly("verdict", [](const RecurrenceReport& r) { return to_string(r.verdict); });
  py::class_<StationaryEstimate>(m, "StationaryEstimate")
      .def_readonly("pmf", &StationaryEstimate::pmf)
      .def_readonly("std_error", &StationaryEstimate::std_error)
      .def_property_readonly("escape_fraction", &StationaryEstimate::escape_fraction)
      .def("pgf", &StationaryEstimate::pgf);

  m.def("recurrence_probe", &recurrence_probe, py::arg("params"), py::arg("n0"), py::arg("horizon"),
        py::arg("cap"), py::arg("replicates"), py::arg("seed"));
  m.def("stationary_estimate", &stationary_estimate, py::arg("params"), py::arg("n0"), py::arg("burn_in"),
        py::arg("horizon"), py::arg("replicates"), py::arg("seed"), py::arg("cap") = 10000);
  m.def("fixation_probability", &fixation_probability, py::arg("x"), py::arg("probe"), py::arg("stationary"));

  m.def("kappa_star_mc", [](const XiMeasure& xi, double beta, std::uint64_t reps, std::uint64_t seed) {
    const auto r = kappa_star_mc(xi, beta, reps, seed);
    return py::make_tuple(r.estimate, r.tail_share, r.possible_infinite_variance);
  }, py::arg("xi"), py::arg("beta"), py::arg("replicates"), py::arg("seed"));
  m.def("kappa_star_lambda_dirac", &kappa_star_lambda_dirac, py::arg("y"), py::arg("beta") = 1.0);

  m.def("run_experiment", [](const std::string& command, const std::string& config_text) {
    const auto config = build_experiment(ConfigFile::parse(config_text));
    const auto report = run_experiment(command, config);
    return py::make_tuple(report.exit_code, report.to_json(), report.table.to_csv());
  }, py::arg("command"), py::arg("config_text"),
     "Runs a CLI subcommand on config text; returns (exit_code, json, csv).");
  m.attr("commands") = experiment_commands();
}
