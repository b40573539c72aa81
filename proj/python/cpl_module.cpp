// Python bindings for the consensus laboratory. The module mirrors the C++
// surface: graph construction and privacy queries, perturbation signals,
// scenario simulation, observers, admissibility limits, and the
// indistinguishability constructions. input_error maps to ValueError and
// numeric_error to ArithmeticError.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "cpl/admissibility.hpp"
#include "cpl/benchmark.hpp"
#include "cpl/errors.hpp"
#include "cpl/graph.hpp"
#include "cpl/indist.hpp"
#include "cpl/observers.hpp"
#include "cpl/scenario_io.hpp"
#include "cpl/signal.hpp"
#include "cpl/sim.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Privacy-preserving average consensus laboratory: weight-balanced "
      "digraphs, admissible perturbation signals, fixed-step simulation, "
      "reference-value observers, and output-indistinguishability "
      "constructions.";

  py::register_exception<cpl::input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<cpl::numeric_error>(m, "NumericError", PyExc_ArithmeticError);

  // ---- graph ----

  py::class_<cpl::IslandClasses>(m, "IslandClasses")
      .def_readonly("v2", &cpl::IslandClasses::v2)
      .def_readonly("v3", &cpl::IslandClasses::v3)
      .def_readonly("v4", &cpl::IslandClasses::v4);

  py::class_<cpl::ReducedLaplacian>(m, "ReducedLaplacian")
      .def_readonly("basis", &cpl::ReducedLaplacian::basis)
      .def_readonly("reduced", &cpl::ReducedLaplacian::reduced);

  py::class_<cpl::Digraph>(m, "Digraph")
      .def(py::init<>())
      .def(py::init<int>(), py::arg("n"))
      .def(py::init<int, Eigen::MatrixXd>(), py::arg("n"), py::arg("weights"))
      .def("size", &cpl::Digraph::size)
      .def("weights", &cpl::Digraph::weights, py::return_value_policy::copy)
      .def("add_edge", &cpl::Digraph::add_edge, py::arg("from_node"), py::arg("to_node"),
           py::arg("weight"))
      .def("weight", &cpl::Digraph::weight, py::arg("from_node"), py::arg("to_node"))
      .def("out_neighbors", &cpl::Digraph::out_neighbors, py::arg("node"))
      .def("out_degree", &cpl::Digraph::out_degree, py::arg("node"))
      .def("out_degrees", &cpl::Digraph::out_degrees)
      .def("in_degrees", &cpl::Digraph::in_degrees)
      .def("laplacian", &cpl::Digraph::laplacian)
      .def("reduced_laplacian", &cpl::Digraph::reduced_laplacian)
      .def("is_weight_balanced", &cpl::Digraph::is_weight_balanced, py::arg("tol") = 1e-9)
      .def("is_strongly_connected", &cpl::Digraph::is_strongly_connected)
      .def("islands", &cpl::Digraph::islands, py::arg("agent"))
      .def("partition_island", &cpl::Digraph::partition_island, py::arg("agent"),
           py::arg("island"))
      .def("can_identify_internal", &cpl::Digraph::can_identify_internal, py::arg("observer"),
           py::arg("target"))
      .def("can_identify_external", &cpl::Digraph::can_identify_external, py::arg("target"),
           py::arg("intercepted"))
      .def("all_private", &cpl::Digraph::all_private)
      .def("induced_subgraph", &cpl::Digraph::induced_subgraph, py::arg("nodes"));

  m.def("directed_ring", &cpl::directed_ring, py::arg("n"));
  m.def("cyclic_bipartite", &cpl::cyclic_bipartite, py::arg("m"));
  m.def("ring_lattice_4regular", &cpl::ring_lattice_4regular, py::arg("n"));
  m.def("stacked_prism", &cpl::stacked_prism, py::arg("rings"), py::arg("ring_size"));
  m.def("grid_lattice", &cpl::grid_lattice, py::arg("rows"), py::arg("cols"));
  m.def("parse_graph_text", &cpl::parse_graph_text, py::arg("text"));
  m.def("format_graph_text", &cpl::format_graph_text, py::arg("graph"));

  // ---- signals ----

  py::class_<cpl::Signal, std::shared_ptr<cpl::Signal>>(m, "Signal")
      .def("eval", &cpl::Signal::eval, py::arg("t"))
      .def("rate_bound", &cpl::Signal::rate_bound, py::arg("horizon"))
      .def("to_json", [](const cpl::Signal& s) { return cpl::signal_to_json(s).dump(); });

  m.def("make_constant", &cpl::make_constant, py::arg("value"));
  m.def("make_zero", &cpl::make_zero);
  m.def("make_expdecay", &cpl::make_expdecay, py::arg("amp"), py::arg("rate"));
  m.def("make_chirp", &cpl::make_chirp, py::arg("amp"), py::arg("phase"), py::arg("quad"),
        py::arg("lin"));
  m.def("make_filter", &cpl::make_filter, py::arg("state_matrix"), py::arg("output_row"),
        py::arg("initial_state"));
  m.def("make_sum", &cpl::make_sum, py::arg("terms"));
  m.def("make_scaled", &cpl::make_scaled, py::arg("factor"), py::arg("inner"));
  m.def("signal_from_json",
        [](const std::string& text) {
          nlohmann::json j;
          try {
            j = nlohmann::json::parse(text);
          } catch (const nlohmann::json::exception& e) {
            throw cpl::input_error(std::string("cannot parse signal text: ") + e.what());
          }
          return cpl::signal_from_json(j);
        },
        py::arg("text"));

  py::class_<cpl::AgentSignals>(m, "AgentSignals")
      .def(py::init<>())
      .def(py::init([](cpl::SignalPtr f, cpl::SignalPtr g) {
             return cpl::AgentSignals{std::move(f), std::move(g)};
           }),
           py::arg("f"), py::arg("g"))
      .def_readwrite("f", &cpl::AgentSignals::f)
      .def_readwrite("g", &cpl::AgentSignals::g);

  // ---- simulation ----

  py::class_<cpl::Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("graph", &cpl::Scenario::graph)
      .def_readwrite("x0", &cpl::Scenario::x0)
      .def_readwrite("agents", &cpl::Scenario::agents)
      .def_readwrite("horizon", &cpl::Scenario::horizon)
      .def_readwrite("step", &cpl::Scenario::step)
      .def_readwrite("allow_unbalanced", &cpl::Scenario::allow_unbalanced);

  py::class_<cpl::Trajectory>(m, "Trajectory")
      .def_readonly("times", &cpl::Trajectory::times)
      .def_readonly("x", &cpl::Trajectory::x)
      .def_readonly("y", &cpl::Trajectory::y)
      .def_readonly("aux", &cpl::Trajectory::aux)
      .def_readonly("step_used", &cpl::Trajectory::step_used)
      .def_readonly("warnings", &cpl::Trajectory::warnings)
      .def("samples", &cpl::Trajectory::samples);

  m.def("simulate", [](const cpl::Scenario& s) { return cpl::simulate(s); }, py::arg("scenario"),
        "Integrate the scenario with classical fourth-order Runge-Kutta.");
  m.def("consensus_error", &cpl::consensus_error, py::arg("trajectory"),
        "Per-agent |x_i(T) - mean(x(0))|.");
  m.def("conservation_residual", &cpl::conservation_residual, py::arg("trajectory"),
        py::arg("scenario"),
        "Worst violation of the summed-state conservation identity.");
  m.def("trajectory_csv", &cpl::trajectory_csv, py::arg("trajectory"));
  m.def("write_trajectory_csv", &cpl::write_trajectory_csv, py::arg("trajectory"),
        py::arg("path"));

  // ---- admissibility ----

  py::class_<cpl::LimitEstimate>(m, "LimitEstimate")
      .def_readonly("value", &cpl::LimitEstimate::value)
      .def_readonly("converged", &cpl::LimitEstimate::converged);

  py::class_<cpl::AdmissibilityReport>(m, "AdmissibilityReport")
      .def_readonly("beta_estimates", &cpl::AdmissibilityReport::beta_estimates)
      .def_readonly("alpha_estimates", &cpl::AdmissibilityReport::alpha_estimates)
      .def_readonly("sum_beta", &cpl::AdmissibilityReport::sum_beta)
      .def_readonly("beta_converged", &cpl::AdmissibilityReport::beta_converged)
      .def_readonly("alpha_converged", &cpl::AdmissibilityReport::alpha_converged)
      .def_readonly("sum_beta_zero", &cpl::AdmissibilityReport::sum_beta_zero)
      .def_readonly("alphas_equal", &cpl::AdmissibilityReport::alphas_equal)
      .def_readonly("admissible", &cpl::AdmissibilityReport::admissible)
      .def_readonly("horizon", &cpl::AdmissibilityReport::horizon)
      .def_readonly("tol", &cpl::AdmissibilityReport::tol);

  m.def("beta_limit", &cpl::beta_limit, py::arg("f"), py::arg("g"), py::arg("d_out"),
        py::arg("horizon") = cpl::kDefaultHorizon, py::arg("tol") = cpl::kDefaultLimitTol,
        "Settled integral of f + d_out * g.");
  m.def("alpha_limit", &cpl::alpha_limit, py::arg("g"),
        py::arg("horizon") = cpl::kDefaultHorizon, py::arg("tol") = cpl::kDefaultLimitTol,
        "Settled unit low-pass of g.");
  m.def("network_admissibility", &cpl::network_admissibility, py::arg("agents"),
        py::arg("graph"), py::arg("horizon") = cpl::kDefaultHorizon,
        py::arg("tol") = cpl::kDefaultLimitTol);
  m.def("theorem1_check", &cpl::theorem1_check, py::arg("agents"), py::arg("graph"),
        py::arg("horizon") = cpl::kDefaultHorizon, py::arg("tol") = cpl::kDefaultLimitTol,
        "Reduced-space settling check of the perturbed dynamics.");

  // ---- observers ----

  py::class_<cpl::ObserverRun>(m, "ObserverRun")
      .def_readonly("times", &cpl::ObserverRun::times)
      .def_readonly("estimate", &cpl::ObserverRun::estimate)
      .def_readonly("zeta", &cpl::ObserverRun::zeta)
      .def_readonly("eta", &cpl::ObserverRun::eta)
      .def_readonly("error_trace", &cpl::ObserverRun::error_trace)
      .def_readonly("final_estimate", &cpl::ObserverRun::final_estimate)
      .def_readonly("trajectory", &cpl::ObserverRun::trajectory);

  m.def("run_internal", &cpl::run_internal, py::arg("scenario"), py::arg("observer"),
        py::arg("target"), py::arg("beta") = 0.0,
        "Neighbour observer of one target's reference value.");
  m.def("run_external", &cpl::run_external, py::arg("scenario"), py::arg("target"),
        py::arg("beta") = 0.0, py::arg("alpha") = 0.0, py::arg("eta0") = 0.0,
        "Wiretap observer of one target's reference value.");
  m.def("run_island",
        [](const cpl::Scenario& s, int agent, const std::vector<int>& island,
           const std::map<int, double>& betas) { return cpl::run_island(s, agent, island, betas); },
        py::arg("scenario"), py::arg("agent"), py::arg("island"),
        py::arg("betas") = std::map<int, double>{},
        "Island-mean observer over the members outside the agent's reach.");

  // ---- indistinguishability ----

  py::enum_<cpl::ConstructionKind>(m, "ConstructionKind")
      .value("island", cpl::ConstructionKind::island)
      .value("external_scalar", cpl::ConstructionKind::external_scalar)
      .value("alpha_shift", cpl::ConstructionKind::alpha_shift)
      .value("beta_exchange", cpl::ConstructionKind::beta_exchange);

  py::class_<cpl::AlternativePair>(m, "AlternativePair")
      .def_readonly("original", &cpl::AlternativePair::original)
      .def_readonly("alternative", &cpl::AlternativePair::alternative)
      .def_readonly("observable", &cpl::AlternativePair::observable)
      .def_readonly("construction", &cpl::AlternativePair::construction)
      .def_readonly("parameters", &cpl::AlternativePair::parameters);

  m.def("island_alternative", &cpl::island_alternative, py::arg("scenario"), py::arg("agent"),
        py::arg("island"), py::arg("delta_x3"));
  m.def("external_scalar_alternative", &cpl::external_scalar_alternative, py::arg("scenario"),
        py::arg("visible"), py::arg("hidden"), py::arg("delta"));
  m.def("alpha_shift_alternative", &cpl::alpha_shift_alternative, py::arg("scenario"),
        py::arg("a"));
  m.def("beta_exchange_alternative", &cpl::beta_exchange_alternative, py::arg("scenario"),
        py::arg("i"), py::arg("k"), py::arg("beta_ik"), py::arg("d"));
  m.def("output_distance", &cpl::output_distance, py::arg("trajectory"), py::arg("trajectory2"),
        py::arg("agents"), "Sup over samples and agents of |y - y2|.");

  // ---- bundled benchmark ----

  m.def("benchmark_graph", &cpl::benchmark_graph);
  m.def("benchmark_chirp_integral", &cpl::benchmark_chirp_integral, py::arg("l"));
  m.def("benchmark_signals", &cpl::benchmark_signals, py::arg("corrected_sign") = true);
  m.def("benchmark_scenario", &cpl::benchmark_scenario, py::arg("corrected_sign") = true);

  // ---- scenario files ----

  py::class_<cpl::Knowledge>(m, "Knowledge")
      .def(py::init<>())
      .def_readwrite("case_tag", &cpl::Knowledge::case_tag)
      .def_readwrite("alpha", &cpl::Knowledge::alpha)
      .def_readwrite("beta", &cpl::Knowledge::beta)
      .def("knows_alpha", &cpl::Knowledge::knows_alpha)
      .def("knows_beta", &cpl::Knowledge::knows_beta);

  py::class_<cpl::ScenarioFile>(m, "ScenarioFile")
      .def(py::init<>())
      .def_readwrite("scenario", &cpl::ScenarioFile::scenario)
      .def_readwrite("knowledge", &cpl::ScenarioFile::knowledge);

  m.def("scenario_from_json",
        [](const std::string& text) {
          nlohmann::json j;
          try {
            j = nlohmann::json::parse(text);
          } catch (const nlohmann::json::exception& e) {
            throw cpl::input_error(std::string("cannot parse scenario text: ") + e.what());
          }
          return cpl::scenario_from_json(j);
        },
        py::arg("text"));
  m.def("scenario_to_json",
        [](const cpl::ScenarioFile& file) { return cpl::scenario_to_json(file).dump(2); },
        py::arg("file"));
  m.def("load_scenario_file", &cpl::load_scenario_file, py::arg("path"));
  m.def("save_scenario_file", &cpl::save_scenario_file, py::arg("path"), py::arg("file"));
  m.def("graph_from_family", &cpl::graph_from_family, py::arg("family"), py::arg("args"));
}
