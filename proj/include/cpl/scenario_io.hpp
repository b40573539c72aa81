#pragma once

// Scenario file codec: one strict JSON document per scenario, carrying a
// version field, the graph (inline edges or a generator family reference),
// references, signals, the time grid, and the declared attacker knowledge.
// Unknown fields are rejected so typos in signal parameters fail loudly.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cpl/sim.hpp"

namespace cpl {

// Declared attacker knowledge. Case 1 publishes both condition parameters,
// case 2 only the common output offset, case 3 only the per-agent state
// perturbation integrals.
struct Knowledge {
  int case_tag = 1;
  double alpha = 0.0;    // meaningful for cases 1 and 2
  Eigen::VectorXd beta;  // per-agent, for cases 1 and 3; empty otherwise

  bool knows_alpha() const { return case_tag == 1 || case_tag == 2; }
  bool knows_beta() const { return case_tag == 1 || case_tag == 3; }
};

struct ScenarioFile {
  Scenario scenario;
  Knowledge knowledge;
};

// Strict decoding; every structural defect raises input_error with the
// offending field named. A missing knowledge block defaults to case 1 with
// zero offsets.
ScenarioFile scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioFile& file);

// File variants; read failures and JSON syntax errors also raise input_error.
ScenarioFile load_scenario_file(const std::string& path);
void save_scenario_file(const std::string& path, const ScenarioFile& file);

// Generator dispatch for family references: directed_ring(n),
// cyclic_bipartite(m), ring_lattice_4regular(n), stacked_prism(rings, size),
// grid_lattice(rows, cols).
Digraph graph_from_family(const std::string& family, const std::vector<long long>& args);

}  // namespace cpl
