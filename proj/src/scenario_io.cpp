#include "cpl/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <utility>

#include "cpl/errors.hpp"
#include "cpl/signal.hpp"

namespace cpl {

namespace {

void require_exact_keys(const nlohmann::json& j, const std::string& where,
                        std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw input_error(where + " must be a JSON object");
  for (const char* key : keys)
    if (!j.contains(key)) throw input_error(where + " is missing field '" + key + "'");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(),
                     [&item](const char* key) { return item.key() == key; }))
      throw input_error(where + " has unknown field '" + item.key() + "'");
  }
}

double get_number(const nlohmann::json& j, const std::string& where, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_number()) throw input_error(where + " field '" + key + "' must be a number");
  return v.get<double>();
}

long long get_integer(const nlohmann::json& j, const std::string& where, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_number_integer()) throw input_error(where + " field '" + key + "' must be an integer");
  return v.get<long long>();
}

Eigen::VectorXd get_vector(const nlohmann::json& j, const std::string& where, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_array()) throw input_error(where + " field '" + key + "' must be an array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw input_error(where + " field '" + key + "' must contain numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Digraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw input_error("scenario graph must be a JSON object");
  if (j.contains("family")) {
    require_exact_keys(j, "scenario graph", {"family", "args"});
    if (!j.at("family").is_string())
      throw input_error("scenario graph field 'family' must be a string");
    const nlohmann::json& args_json = j.at("args");
    if (!args_json.is_array()) throw input_error("scenario graph field 'args' must be an array");
    std::vector<long long> args;
    for (const auto& a : args_json) {
      if (!a.is_number_integer())
        throw input_error("scenario graph field 'args' must contain integers");
      args.push_back(a.get<long long>());
    }
    return graph_from_family(j.at("family").get<std::string>(), args);
  }

  require_exact_keys(j, "scenario graph", {"n", "edges"});
  const long long n = get_integer(j, "scenario graph", "n");
  if (n < 0 || n > 100000) throw input_error("scenario graph size is out of range");
  Digraph g(static_cast<int>(n));
  const nlohmann::json& edges = j.at("edges");
  if (!edges.is_array()) throw input_error("scenario graph field 'edges' must be an array");
  for (const auto& edge : edges) {
    if (!edge.is_array() || edge.size() != 3)
      throw input_error("each scenario graph edge must be a [from, to, weight] triple");
    if (!edge[0].is_number_integer() || !edge[1].is_number_integer() || !edge[2].is_number())
      throw input_error("each scenario graph edge must be [integer, integer, number]");
    g.add_edge(edge[0].get<int>(), edge[1].get<int>(), edge[2].get<double>());
  }
  return g;
}

nlohmann::json graph_to_json(const Digraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (int from = 1; from <= g.size(); ++from)
    for (int to = 1; to <= g.size(); ++to)
      if (g.weight(from, to) > 0.0)
        edges.push_back(nlohmann::json::array({from, to, g.weight(from, to)}));
  return {{"n", g.size()}, {"edges", std::move(edges)}};
}

Knowledge knowledge_from_json(const nlohmann::json& j, int agents) {
  Knowledge k;
  if (!j.is_object()) throw input_error("scenario knowledge must be a JSON object");
  if (!j.contains("case")) throw input_error("scenario knowledge is missing field 'case'");
  const long long tag = get_integer(j, "scenario knowledge", "case");
  if (tag < 1 || tag > 3)
    throw input_error("scenario knowledge case must be 1, 2, or 3");
  k.case_tag = static_cast<int>(tag);
  switch (k.case_tag) {
    case 1: require_exact_keys(j, "scenario knowledge", {"case", "alpha", "beta"}); break;
    case 2: require_exact_keys(j, "scenario knowledge", {"case", "alpha"}); break;
    default: require_exact_keys(j, "scenario knowledge", {"case", "beta"}); break;
  }
  if (k.knows_alpha()) k.alpha = get_number(j, "scenario knowledge", "alpha");
  if (k.knows_beta()) {
    k.beta = get_vector(j, "scenario knowledge", "beta");
    if (k.beta.size() != agents)
      throw input_error("scenario knowledge declares " + std::to_string(k.beta.size()) +
                        " integrals for " + std::to_string(agents) + " agents");
  }
  return k;
}

nlohmann::json knowledge_to_json(const Knowledge& k) {
  nlohmann::json j{{"case", k.case_tag}};
  if (k.knows_alpha()) j["alpha"] = k.alpha;
  if (k.knows_beta()) j["beta"] = vector_to_json(k.beta);
  return j;
}

}  // namespace

Digraph graph_from_family(const std::string& family, const std::vector<long long>& args) {
  const auto expect_args = [&](std::size_t count) {
    if (args.size() != count)
      throw input_error("graph family '" + family + "' takes " + std::to_string(count) +
                        " argument(s), got " + std::to_string(args.size()));
  };
  const auto as_int = [&](std::size_t idx) {
    if (args[idx] < -1000000 || args[idx] > 1000000)
      throw input_error("graph family argument is out of range");
    return static_cast<int>(args[idx]);
  };
  if (family == "directed_ring") {
    expect_args(1);
    return directed_ring(as_int(0));
  }
  if (family == "cyclic_bipartite") {
    expect_args(1);
    return cyclic_bipartite(as_int(0));
  }
  if (family == "ring_lattice_4regular") {
    expect_args(1);
    return ring_lattice_4regular(as_int(0));
  }
  if (family == "stacked_prism") {
    expect_args(2);
    return stacked_prism(as_int(0), as_int(1));
  }
  if (family == "grid_lattice") {
    expect_args(2);
    return grid_lattice(as_int(0), as_int(1));
  }
  throw input_error("unknown graph family '" + family + "'");
}

ScenarioFile scenario_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.contains("knowledge"))
    require_exact_keys(j, "scenario",
                       {"version", "graph", "x0", "agents", "horizon", "step", "knowledge"});
  else
    require_exact_keys(j, "scenario", {"version", "graph", "x0", "agents", "horizon", "step"});

  if (get_integer(j, "scenario", "version") != 1)
    throw input_error("unsupported scenario version (expected 1)");

  ScenarioFile file;
  file.scenario.graph = graph_from_json(j.at("graph"));
  const int n = file.scenario.graph.size();

  file.scenario.x0 = get_vector(j, "scenario", "x0");
  if (file.scenario.x0.size() != n)
    throw input_error("scenario lists " + std::to_string(file.scenario.x0.size()) +
                      " reference values for " + std::to_string(n) + " agents");

  const nlohmann::json& agents = j.at("agents");
  if (!agents.is_array() || static_cast<int>(agents.size()) != n)
    throw input_error("scenario must list exactly one signal pair per agent");
  for (int i = 0; i < n; ++i) {
    const std::string where = "agent " + std::to_string(i + 1);
    require_exact_keys(agents[static_cast<std::size_t>(i)], where, {"f", "g"});
    try {
      file.scenario.agents.push_back(
          {signal_from_json(agents[static_cast<std::size_t>(i)].at("f")),
           signal_from_json(agents[static_cast<std::size_t>(i)].at("g"))});
    } catch (const input_error& err) {
      throw input_error(where + ": " + err.what());
    }
  }

  file.scenario.horizon = get_number(j, "scenario", "horizon");
  file.scenario.step = get_number(j, "scenario", "step");

  if (j.contains("knowledge")) {
    file.knowledge = knowledge_from_json(j.at("knowledge"), n);
  } else {
    file.knowledge.case_tag = 1;
    file.knowledge.alpha = 0.0;
    file.knowledge.beta = Eigen::VectorXd::Zero(n);
  }
  return file;
}

nlohmann::json scenario_to_json(const ScenarioFile& file) {
  nlohmann::json agents = nlohmann::json::array();
  for (const AgentSignals& pair : file.scenario.agents)
    agents.push_back({{"f", signal_to_json(*pair.f)}, {"g", signal_to_json(*pair.g)}});
  return {{"version", 1},
          {"graph", graph_to_json(file.scenario.graph)},
          {"x0", vector_to_json(file.scenario.x0)},
          {"agents", std::move(agents)},
          {"horizon", file.scenario.horizon},
          {"step", file.scenario.step},
          {"knowledge", knowledge_to_json(file.knowledge)}};
}

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& err) {
    throw input_error("cannot parse scenario file " + path + ": " + err.what());
  }
  return scenario_from_json(j);
}

void save_scenario_file(const std::string& path, const ScenarioFile& file) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write scenario file " + path);
  out << scenario_to_json(file).dump(2) << "\n";
  if (!out) throw input_error("failed while writing scenario file " + path);
}

}  // namespace cpl
