// Command-line driver. Every subcommand prints one JSON summary object on
// standard output; diagnostics go to standard error.
//
// Exit codes: 0 success, 1 reproduction threshold miss, 2 input error,
// 3 numeric failure, 4 attack refused by the declared knowledge case.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "cpl/admissibility.hpp"
#include "cpl/benchmark.hpp"
#include "cpl/errors.hpp"
#include "cpl/indist.hpp"
#include "cpl/observers.hpp"
#include "cpl/scenario_io.hpp"
#include "cpl/sim.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

// Thresholds the reproduce-paper summary is judged against.
constexpr double kConsensusTol = 1e-2;
constexpr double kObserverTol = 1e-2;
constexpr double kInvisibleTol = 1e-6;
constexpr double kHiddenGapMin = 0.5;
constexpr double kAdmissibilityTol = 1e-3;

// Attack refused because the declared knowledge case withholds a parameter
// the requested observer depends on. Exit code 4.
struct knowledge_refusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json vec_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// Runs independent tasks, at most `jobs` at a time.
void run_tasks(int jobs, std::vector<std::function<void()>> tasks) {
  if (jobs <= 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::vector<std::future<void>> pending;
  for (auto& task : tasks) {
    if (static_cast<int>(pending.size()) >= jobs) {
      pending.front().get();
      pending.erase(pending.begin());
    }
    pending.push_back(std::async(std::launch::async, std::move(task)));
  }
  for (auto& f : pending) f.get();
}

void require_beta_knowledge(const cpl::Knowledge& k, bool force) {
  if (k.knows_beta() || force) return;
  throw knowledge_refusal(
      "the declared knowledge case withholds the state-perturbation integrals; "
      "without them an integral-exchange between two agents produces identical "
      "outputs under different references, so no estimate is trustworthy "
      "(rerun with --force to attack anyway)");
}

void require_alpha_knowledge(const cpl::Knowledge& k, bool force) {
  if (k.knows_alpha() || force) return;
  throw knowledge_refusal(
      "the declared knowledge case withholds the common output offset; an "
      "offset-shift of every reference produces identical outputs under "
      "different references, so no estimate is trustworthy (rerun with "
      "--force to attack anyway)");
}

double beta_for(const cpl::Knowledge& k, int node) {
  return node <= k.beta.size() ? k.beta(node - 1) : 0.0;
}

// Copies the estimate columns of later runs into the first run's trajectory
// so a single CSV carries every observer on the shared sample grid.
cpl::Trajectory merge_observer_columns(const std::vector<cpl::ObserverRun>& runs) {
  cpl::Trajectory merged = runs.front().trajectory;
  for (std::size_t i = 1; i < runs.size(); ++i)
    for (const auto& [name, column] : runs[i].trajectory.aux)
      if (name.rfind("obs_", 0) == 0) merged.aux[name] = column;
  return merged;
}

void print_summary(const json& summary) { std::cout << summary.dump(2) << "\n"; }

int cmd_simulate(const cpl::Scenario& s, const std::string& out_csv) {
  const cpl::Trajectory tr = cpl::simulate(s);
  cpl::write_trajectory_csv(tr, out_csv);
  json summary;
  summary["command"] = "simulate";
  summary["csv"] = out_csv;
  summary["samples"] = tr.samples();
  summary["step_used"] = tr.step_used;
  summary["horizon"] = s.horizon;
  summary["final_state"] = vec_json(tr.x.row(tr.samples() - 1).transpose());
  summary["consensus_error"] = cpl::consensus_error(tr).maxCoeff();
  summary["conservation_residual"] = cpl::conservation_residual(tr, s);
  summary["warnings"] = tr.warnings;
  print_summary(summary);
  return 0;
}

int cmd_verify(const cpl::ScenarioFile& file, double horizon) {
  const cpl::AdmissibilityReport report =
      cpl::network_admissibility(file.scenario.agents, file.scenario.graph, horizon);
  const bool settles = cpl::theorem1_check(file.scenario.agents, file.scenario.graph, horizon);
  json summary;
  summary["command"] = "verify";
  summary["horizon"] = report.horizon;
  summary["beta"] = vec_json(report.beta_estimates);
  summary["alpha"] = vec_json(report.alpha_estimates);
  summary["sum_beta"] = report.sum_beta;
  summary["sum_beta_zero"] = report.sum_beta_zero;
  summary["alphas_equal"] = report.alphas_equal;
  summary["admissible"] = report.admissible;
  summary["reduced_dynamics_settle"] = settles;
  print_summary(summary);
  return 0;
}

int cmd_attack(const cpl::ScenarioFile& file, const std::string& kind, int observer, int target,
               bool target_given, const std::vector<int>& intercepted,
               const std::vector<int>& island, bool force, const std::string& out_csv) {
  const cpl::Scenario& s = file.scenario;
  const cpl::Knowledge& k = file.knowledge;
  json summary;
  summary["command"] = "attack";
  summary["kind"] = kind;
  summary["forced"] = force;
  std::vector<cpl::ObserverRun> runs;

  if (kind == "internal") {
    require_beta_knowledge(k, force);
    std::vector<int> identifiable, shielded;
    for (int j = 1; j <= s.graph.size(); ++j) {
      if (j == observer) continue;
      (s.graph.can_identify_internal(observer, j) ? identifiable : shielded).push_back(j);
    }
    summary["observer"] = observer;
    summary["identifiable"] = identifiable;
    summary["protected"] = shielded;
    const std::vector<int> targets = target_given ? std::vector<int>{target} : identifiable;
    json estimates = json::object();
    for (int t : targets) {
      runs.push_back(cpl::run_internal(s, observer, t, beta_for(k, t)));
      estimates[std::to_string(t)] = runs.back().final_estimate;
    }
    summary["estimates"] = estimates;
  } else if (kind == "external") {
    require_beta_knowledge(k, force);
    require_alpha_knowledge(k, force);
    if (!target_given) throw cpl::input_error("the external attack needs --target");
    if (intercepted.empty()) throw cpl::input_error("the external attack needs --intercepted");
    if (!s.graph.can_identify_external(target, intercepted))
      throw cpl::input_error("the intercepted set must include agent " + std::to_string(target) +
                             " and all of its out-neighbours");
    summary["target"] = target;
    summary["intercepted"] = intercepted;
    runs.push_back(cpl::run_external(s, target, beta_for(k, target), k.alpha));
    summary["estimate"] = runs.back().final_estimate;
  } else if (kind == "island") {
    require_beta_knowledge(k, force);
    if (island.empty()) throw cpl::input_error("the island attack needs --island");
    const cpl::IslandClasses classes = s.graph.partition_island(observer, island);
    std::vector<int> recovered = classes.v2;
    recovered.insert(recovered.end(), classes.v3.begin(), classes.v3.end());
    std::sort(recovered.begin(), recovered.end());
    std::map<int, double> betas;
    for (int member : island)
      if (member != observer) betas[member] = beta_for(k, member);
    summary["agent"] = observer;
    summary["island"] = island;
    summary["recovered_mean_over"] = recovered;
    runs.push_back(cpl::run_island(s, observer, island, betas));
    summary["estimate"] = runs.back().final_estimate;
  } else {
    throw cpl::input_error("unknown attack kind '" + kind + "'");
  }

  if (!out_csv.empty() && !runs.empty()) {
    cpl::write_trajectory_csv(merge_observer_columns(runs), out_csv);
    summary["csv"] = out_csv;
  }
  print_summary(summary);
  return 0;
}

int cmd_indist(const cpl::ScenarioFile& file, const std::string& kind, int agent,
               const std::vector<int>& island, const std::vector<double>& deltas, int visible,
               int hidden, double shift, int source, int sink, double exchange, double decay,
               int jobs, const std::string& out_prefix) {
  const cpl::Scenario& s = file.scenario;
  cpl::AlternativePair pair;
  if (kind == "island") {
    if (island.empty()) throw cpl::input_error("the island construction needs --island");
    if (deltas.empty()) throw cpl::input_error("the island construction needs --delta");
    Eigen::VectorXd d(static_cast<Eigen::Index>(deltas.size()));
    for (std::size_t i = 0; i < deltas.size(); ++i) d(static_cast<Eigen::Index>(i)) = deltas[i];
    pair = cpl::island_alternative(s, agent, island, d);
  } else if (kind == "external_scalar") {
    if (deltas.size() != 1)
      throw cpl::input_error("the external_scalar construction needs exactly one --delta value");
    pair = cpl::external_scalar_alternative(s, visible, hidden, deltas[0]);
  } else if (kind == "alpha_shift") {
    pair = cpl::alpha_shift_alternative(s, shift);
  } else if (kind == "beta_exchange") {
    pair = cpl::beta_exchange_alternative(s, source, sink, exchange, decay);
  } else {
    throw cpl::input_error("unknown construction kind '" + kind + "'");
  }

  cpl::Trajectory base, alt;
  std::vector<std::function<void()>> tasks;
  tasks.push_back([&] { base = cpl::simulate(pair.original); });
  tasks.push_back([&] { alt = cpl::simulate(pair.alternative); });
  run_tasks(jobs, std::move(tasks));

  json per_agent = json::object();
  double worst = 0.0;
  for (int a : pair.observable) {
    const double gap = cpl::output_distance(base, alt, {a});
    per_agent[std::to_string(a)] = gap;
    worst = std::max(worst, gap);
  }

  // The emitted alternative declares the knowledge parameters it actually
  // realizes: alpha_shift moves the common offset, beta_exchange trades the
  // two agents' integrals, the island and scalar constructions keep both.
  cpl::Knowledge alt_knowledge = file.knowledge;
  if (pair.construction == cpl::ConstructionKind::alpha_shift && alt_knowledge.knows_alpha())
    alt_knowledge.alpha += pair.parameters.at("a");
  if (pair.construction == cpl::ConstructionKind::beta_exchange && alt_knowledge.knows_beta() &&
      alt_knowledge.beta.size() == s.graph.size()) {
    alt_knowledge.beta(source - 1) += exchange;
    alt_knowledge.beta(sink - 1) -= exchange;
  }
  const std::string original_path = out_prefix + "_original.json";
  const std::string alternative_path = out_prefix + "_alternative.json";
  cpl::save_scenario_file(original_path, {pair.original, file.knowledge});
  cpl::save_scenario_file(alternative_path, {pair.alternative, alt_knowledge});

  json summary;
  summary["command"] = "indist";
  summary["construction"] = cpl::construction_name(pair.construction);
  summary["parameters"] = pair.parameters;
  summary["observable"] = pair.observable;
  summary["max_delta_y"] = per_agent;
  summary["worst_delta_y"] = worst;
  summary["final_original"] = vec_json(base.x.row(base.samples() - 1).transpose());
  summary["final_alternative"] = vec_json(alt.x.row(alt.samples() - 1).transpose());
  summary["files"] = {{"original", original_path}, {"alternative", alternative_path}};
  print_summary(summary);
  return 0;
}

int cmd_islands(const cpl::Scenario& s, int agent) {
  const std::vector<std::vector<int>> result = s.graph.islands(agent);
  json entries = json::array();
  for (const std::vector<int>& members : result) {
    const cpl::Digraph sub = s.graph.induced_subgraph(members);
    entries.push_back({{"members", members},
                       {"strongly_connected", sub.is_strongly_connected()},
                       {"weight_balanced", sub.is_weight_balanced(1e-9)}});
  }
  json summary;
  summary["command"] = "islands";
  summary["agent"] = agent;
  summary["count"] = result.size();
  summary["islands"] = entries;
  print_summary(summary);
  return 0;
}

int cmd_classify(const cpl::Scenario& s, int observer) {
  std::vector<int> identifiable, shielded;
  for (int j = 1; j <= s.graph.size(); ++j) {
    if (j == observer) continue;
    (s.graph.can_identify_internal(observer, j) ? identifiable : shielded).push_back(j);
  }
  json summary;
  summary["command"] = "classify";
  summary["observer"] = observer;
  summary["identifiable"] = identifiable;
  summary["protected"] = shielded;
  summary["all_private"] = s.graph.all_private();
  print_summary(summary);
  return 0;
}

int cmd_reproduce(const std::string& out_dir, double horizon, double step, int jobs,
                  bool uncorrected) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  cpl::Scenario s = cpl::benchmark_scenario(!uncorrected);
  s.horizon = horizon;
  s.step = step;
  Eigen::VectorXd delta(1);
  delta << 1.0;
  const cpl::AlternativePair pair = cpl::island_alternative(s, 1, {1, 2, 3}, delta);

  cpl::Trajectory base, alt;
  cpl::ObserverRun nu4, nu5, nu2;
  cpl::AdmissibilityReport report;
  std::vector<std::function<void()>> tasks;
  tasks.push_back([&] { base = cpl::simulate(pair.original); });
  tasks.push_back([&] { alt = cpl::simulate(pair.alternative); });
  tasks.push_back([&] { nu4 = cpl::run_internal(s, 1, 4); });
  tasks.push_back([&] { nu5 = cpl::run_internal(s, 1, 5); });
  tasks.push_back([&] { nu2 = cpl::run_external(s, 2); });
  tasks.push_back([&] { report = cpl::network_admissibility(s.agents, s.graph); });
  run_tasks(jobs, std::move(tasks));

  const double max_alpha = report.alpha_estimates.cwiseAbs().maxCoeff();
  const double consensus_gap = cpl::consensus_error(base).maxCoeff();
  const double alternative_gap = cpl::consensus_error(alt).maxCoeff();
  const double visible_gap = cpl::output_distance(base, alt, pair.observable);
  const double hidden_gap = cpl::output_distance(base, alt, {3});

  json checks = json::array();
  const auto add_check = [&checks](const char* name, bool pass, json details) {
    details["name"] = name;
    details["pass"] = pass;
    checks.push_back(std::move(details));
  };
  add_check("admissibility",
            report.admissible && std::abs(report.sum_beta) <= kAdmissibilityTol &&
                max_alpha <= kAdmissibilityTol,
            {{"sum_beta", report.sum_beta},
             {"max_abs_alpha", max_alpha},
             {"tolerance", kAdmissibilityTol}});
  add_check("consensus", consensus_gap <= kConsensusTol,
            {{"max_final_deviation", consensus_gap}, {"tolerance", kConsensusTol}});
  add_check("indistinguishability",
            visible_gap <= kInvisibleTol && hidden_gap >= kHiddenGapMin &&
                alternative_gap <= kConsensusTol,
            {{"max_visible_delta_y", visible_gap},
             {"hidden_delta_y", hidden_gap},
             {"alternative_final_deviation", alternative_gap},
             {"visible_tolerance", kInvisibleTol},
             {"hidden_minimum", kHiddenGapMin}});
  add_check("internal_observer",
            std::abs(nu4.final_estimate - s.x0(3)) <= kObserverTol &&
                std::abs(nu5.final_estimate - s.x0(4)) <= kObserverTol,
            {{"estimate_4", nu4.final_estimate},
             {"estimate_5", nu5.final_estimate},
             {"expected_4", s.x0(3)},
             {"expected_5", s.x0(4)},
             {"tolerance", kObserverTol}});
  add_check("external_observer", std::abs(nu2.final_estimate - s.x0(1)) <= kObserverTol,
            {{"estimate_2", nu2.final_estimate},
             {"expected_2", s.x0(1)},
             {"tolerance", kObserverTol}});

  const std::string consensus_csv = (fs::path(out_dir) / "consensus.csv").string();
  const std::string alternative_csv = (fs::path(out_dir) / "alternative.csv").string();
  const std::string internal_csv = (fs::path(out_dir) / "internal_observers.csv").string();
  const std::string external_csv = (fs::path(out_dir) / "external_observer.csv").string();
  cpl::write_trajectory_csv(base, consensus_csv);
  cpl::write_trajectory_csv(alt, alternative_csv);
  cpl::write_trajectory_csv(merge_observer_columns({nu4, nu5}), internal_csv);
  cpl::write_trajectory_csv(nu2.trajectory, external_csv);

  bool all_pass = true;
  for (const json& check : checks) all_pass = all_pass && check.at("pass").get<bool>();

  json summary;
  summary["command"] = "reproduce-paper";
  summary["out_dir"] = out_dir;
  summary["horizon"] = horizon;
  summary["step"] = step;
  summary["uncorrected_sign"] = uncorrected;
  summary["checks"] = checks;
  summary["all_pass"] = all_pass;
  summary["csv"] = {consensus_csv, alternative_csv, internal_csv, external_csv};
  print_summary(summary);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbed-consensus privacy laboratory"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string simulate_out = "trajectory.csv";
  std::string attack_out;
  std::string indist_out = "indist";
  std::string reproduce_out = ".";
  double horizon = 0.0;
  double step = 0.0;
  double reproduce_horizon = 30.0;
  double reproduce_step = 1e-4;
  int jobs = 1;
  bool force = false;

  std::string kind;
  int observer = 1;
  int target = 0;
  std::vector<int> intercepted;
  std::vector<int> island;
  std::vector<double> deltas;
  int visible = 0, hidden = 0;
  double shift = 0.0;
  int source = 0, sink = 0;
  double exchange = 0.0;
  double decay = 3.0;
  bool uncorrected = false;

  const auto add_scenario_arg = [&scenario_path](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path, "scenario file (JSON)")->required();
  };
  const auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--horizon", horizon, "override the scenario horizon");
    cmd->add_option("--step", step, "override the integration step");
    cmd->add_flag("--force", force, "run despite balance or knowledge refusals");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "integrate a scenario and write its CSV");
  add_scenario_arg(simulate);
  add_run_flags(simulate);
  simulate->add_option("--out", simulate_out, "trajectory CSV path");

  CLI::App* verify = app.add_subcommand("verify", "check perturbation admissibility");
  add_scenario_arg(verify);
  verify->add_option("--horizon", horizon, "integral horizon (default 60)");

  CLI::App* attack = app.add_subcommand("attack", "classify and run an observer");
  add_scenario_arg(attack);
  add_run_flags(attack);
  attack->add_option("--kind", kind, "internal | external | island")->required();
  attack->add_option("--observer", observer, "intercepting agent (island: the shared agent)");
  attack->add_option("--target", target, "agent whose reference is estimated");
  attack->add_option("--intercepted", intercepted, "wiretapped agents (external)")
      ->delimiter(',');
  attack->add_option("--island", island, "island members including the shared agent")
      ->delimiter(',');
  attack->add_option("--out", attack_out, "optional observer trajectory CSV");

  CLI::App* indist = app.add_subcommand("indist", "emit an indistinguishable scenario pair");
  add_scenario_arg(indist);
  add_run_flags(indist);
  indist->add_option("--kind", kind, "island | external_scalar | alpha_shift | beta_exchange")
      ->required();
  indist->add_option("--agent", observer, "observing agent (island construction)");
  indist->add_option("--island", island, "island members including the observing agent")
      ->delimiter(',');
  indist->add_option("--delta", deltas, "hidden reference offsets (ascending node order)")
      ->delimiter(',');
  indist->add_option("--visible", visible, "compensating agent (external_scalar)");
  indist->add_option("--hidden", hidden, "hidden out-neighbour (external_scalar)");
  indist->add_option("--shift", shift, "common offset change (alpha_shift)");
  indist->add_option("--source", source, "integral-donating agent (beta_exchange)");
  indist->add_option("--sink", sink, "integral-receiving agent (beta_exchange)");
  indist->add_option("--exchange", exchange, "traded integral amount (beta_exchange)");
  indist->add_option("--decay", decay, "exchange decay rate, must exceed both out-degrees");
  indist->add_option("--jobs", jobs, "parallel scenario runs");
  indist->add_option("--out", indist_out, "output file prefix");

  CLI::App* islands_cmd = app.add_subcommand("islands", "list the islands of an agent");
  add_scenario_arg(islands_cmd);
  islands_cmd->add_option("--agent", observer, "agent whose removal splits the graph");

  CLI::App* classify = app.add_subcommand("classify", "privacy verdict per agent");
  add_scenario_arg(classify);
  classify->add_option("--observer", observer, "intercepting agent");

  CLI::App* reproduce =
      app.add_subcommand("reproduce-paper", "rerun the bundled reference experiment");
  reproduce->add_option("--out", reproduce_out, "output directory");
  reproduce->add_option("--horizon", reproduce_horizon, "run horizon");
  reproduce->add_option("--step", reproduce_step, "integration step");
  reproduce->add_option("--jobs", jobs, "parallel scenario runs");
  reproduce->add_flag("--uncorrected-sign", uncorrected,
                      "flip the state-pulse sign (admissibility must then fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*reproduce)
      return cmd_reproduce(reproduce_out, reproduce_horizon, reproduce_step, jobs, uncorrected);

    cpl::ScenarioFile file = cpl::load_scenario_file(scenario_path);
    if (*simulate || *attack || *indist) {
      if (simulate->count("--horizon") || attack->count("--horizon") ||
          indist->count("--horizon"))
        file.scenario.horizon = horizon;
      if (simulate->count("--step") || attack->count("--step") || indist->count("--step"))
        file.scenario.step = step;
      file.scenario.allow_unbalanced = force;
    }

    if (*simulate) return cmd_simulate(file.scenario, simulate_out);
    if (*verify)
      return cmd_verify(file, verify->count("--horizon") ? horizon : cpl::kDefaultHorizon);
    if (*attack)
      return cmd_attack(file, kind, observer, target, attack->count("--target") > 0, intercepted,
                        island, force, attack_out);
    if (*indist)
      return cmd_indist(file, kind, observer, island, deltas, visible, hidden, shift, source,
                        sink, exchange, decay, jobs, indist_out);
    if (*islands_cmd) return cmd_islands(file.scenario, observer);
    if (*classify) return cmd_classify(file.scenario, observer);
  } catch (const knowledge_refusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 4;
  } catch (const cpl::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cpl::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
