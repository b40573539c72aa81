#include "cpl/observers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

// Correction integrator shared by the neighbour and wiretap observers: the
// weighted sum of output differences along the tapped node's own row.
AuxBlock row_integrator(std::string name, const Eigen::RowVectorXd& row, int node, double init) {
  Eigen::VectorXd start(1);
  start << init;
  return {std::move(name), start,
          [row, node](const SimView& view, const Eigen::Ref<const Eigen::VectorXd>&,
                      Eigen::Ref<Eigen::VectorXd> d) {
            double acc = 0.0;
            const double own = view.y(node);
            for (int j = 0; j < row.size(); ++j)
              if (row(j) != 0.0) acc += row(j) * (own - view.y(j + 1));
            d(0) = acc;
          }};
}

// Running integral of f + d_out * g for one agent, the quantity whose limit
// is the agent's admissibility offset.
AuxBlock perturbation_integral(std::string name, int node, double degree) {
  return {std::move(name), Eigen::VectorXd::Zero(1),
          [node, degree](const SimView& view, const Eigen::Ref<const Eigen::VectorXd>&,
                         Eigen::Ref<Eigen::VectorXd> d) {
            d(0) = view.f_value(node) + degree * view.g_value(node);
          }};
}

int tail_count(int samples) { return std::max(1, samples / 100); }

double tail_mean(const Eigen::VectorXd& series) {
  const int count = tail_count(static_cast<int>(series.size()));
  return series.tail(count).mean();
}

void attach_estimate_column(Trajectory& tr, const std::string& name,
                            const Eigen::VectorXd& estimate) {
  Eigen::MatrixXd column(estimate.size(), 1);
  column.col(0) = estimate;
  tr.aux[name] = std::move(column);
}

}  // namespace

ObserverRun run_internal(const Scenario& s, int observer, int target, double beta) {
  if (!s.graph.can_identify_internal(observer, target))
    throw input_error("agent " + std::to_string(observer) + " does not intercept all of agent " +
                      std::to_string(target) + "'s inputs, so it cannot identify that reference");

  const Eigen::RowVectorXd row = s.graph.weights().row(target - 1);
  const double degree = s.graph.out_degree(target);
  const std::vector<AuxBlock> blocks = {
      row_integrator(".obs.zeta", row, target, -beta),
      perturbation_integral(".obs.acc", target, degree),
  };

  ObserverRun run;
  run.trajectory = simulate(s, blocks);
  const Trajectory& tr = run.trajectory;
  const int samples = tr.samples();

  run.times = tr.times;
  run.zeta = tr.aux.at(".obs.zeta");
  run.estimate = run.zeta.col(0) + tr.x.col(observer - 1);
  run.error_trace = tr.x.col(observer - 1) - tr.x.col(target - 1) +
                    tr.aux.at(".obs.acc").col(0) -
                    Eigen::VectorXd::Constant(samples, beta);
  run.final_estimate = tail_mean(run.estimate);
  attach_estimate_column(run.trajectory, "obs_internal_" + std::to_string(target), run.estimate);
  return run;
}

ObserverRun run_external(const Scenario& s, int target, double beta, double alpha, double eta0) {
  if (target < 1 || target > s.graph.size())
    throw input_error("observer target " + std::to_string(target) + " is out of range");

  const Eigen::RowVectorXd row = s.graph.weights().row(target - 1);
  const double degree = s.graph.out_degree(target);
  Eigen::VectorXd eta_init(1);
  eta_init << eta0;
  const std::vector<AuxBlock> blocks = {
      row_integrator(".obs.zeta", row, target, -beta - alpha),
      {".obs.eta", eta_init,
       [target](const SimView& view, const Eigen::Ref<const Eigen::VectorXd>& self,
                Eigen::Ref<Eigen::VectorXd> d) { d(0) = -self(0) + view.y(target); }},
      {".obs.state_lp", Eigen::VectorXd::Zero(1),
       [target](const SimView& view, const Eigen::Ref<const Eigen::VectorXd>& self,
                Eigen::Ref<Eigen::VectorXd> d) { d(0) = -self(0) + view.x(target); }},
      {".obs.output_lp", Eigen::VectorXd::Zero(1),
       [target](const SimView& view, const Eigen::Ref<const Eigen::VectorXd>& self,
                Eigen::Ref<Eigen::VectorXd> d) { d(0) = -self(0) + view.g_value(target); }},
      perturbation_integral(".obs.acc", target, degree),
  };

  ObserverRun run;
  run.trajectory = simulate(s, blocks);
  const Trajectory& tr = run.trajectory;
  const int samples = tr.samples();

  run.times = tr.times;
  run.zeta = tr.aux.at(".obs.zeta");
  run.eta = tr.aux.at(".obs.eta").col(0);
  run.estimate = run.zeta.col(0) + run.eta;
  // Closed-form error: the low-pass split into the decaying initial value
  // plus the filtered state and output perturbation, minus the state itself,
  // plus the perturbation integral, shifted by the assumed offsets.
  run.error_trace.resize(samples);
  for (int k = 0; k < samples; ++k) {
    const double decayed = std::exp(-tr.times[static_cast<std::size_t>(k)]) * eta0;
    run.error_trace(k) = decayed + tr.aux.at(".obs.state_lp")(k, 0) +
                         tr.aux.at(".obs.output_lp")(k, 0) - tr.x(k, target - 1) +
                         tr.aux.at(".obs.acc")(k, 0) - beta - alpha;
  }
  run.final_estimate = tail_mean(run.estimate);
  attach_estimate_column(run.trajectory, "obs_external_" + std::to_string(target), run.estimate);
  return run;
}

ObserverRun run_island(const Scenario& s, int agent, const std::vector<int>& island,
                       const std::map<int, double>& betas) {
  const IslandClasses classes = s.graph.partition_island(agent, island);
  if (classes.v2.empty())
    throw input_error("island observer for agent " + std::to_string(agent) +
                      " requires a member observed directly and not fully surrounded "
                      "(the v2 class is empty)");
  const auto beta_of = [&betas](int node) {
    const auto it = betas.find(node);
    return it == betas.end() ? 0.0 : it->second;
  };

  // One correction integrator per fully surrounded member, plus an island
  // inflow integrator on the agent's own row restricted to observed members.
  std::vector<AuxBlock> blocks;
  const Eigen::MatrixXd& weights = s.graph.weights();
  for (int member : classes.v4)
    blocks.push_back(row_integrator(".obs.zeta" + std::to_string(member),
                                    weights.row(member - 1), member, -beta_of(member)));

  double eta_init_value = 0.0;
  for (int member : island)
    if (member != agent) eta_init_value -= beta_of(member);
  std::vector<int> observed = classes.v2;
  observed.insert(observed.end(), classes.v4.begin(), classes.v4.end());
  Eigen::VectorXd eta_init(1);
  eta_init << eta_init_value;
  blocks.push_back({".obs.eta", eta_init,
                    [agent, observed, &weights](const SimView& view,
                                                const Eigen::Ref<const Eigen::VectorXd>&,
                                                Eigen::Ref<Eigen::VectorXd> d) {
                      double acc = 0.0;
                      const double own = view.y(agent);
                      for (int j : observed) acc -= weights(agent - 1, j - 1) * (own - view.y(j));
                      d(0) = acc;
                    }});

  ObserverRun run;
  run.trajectory = simulate(s, blocks);
  const Trajectory& tr = run.trajectory;
  const int samples = tr.samples();
  const auto group = static_cast<double>(classes.v2.size() + classes.v3.size());

  run.times = tr.times;
  run.eta = tr.aux.at(".obs.eta").col(0);
  run.zeta.resize(samples, static_cast<Eigen::Index>(classes.v4.size()));
  for (std::size_t c = 0; c < classes.v4.size(); ++c)
    run.zeta.col(static_cast<Eigen::Index>(c)) =
        tr.aux.at(".obs.zeta" + std::to_string(classes.v4[c])).col(0);
  run.estimate =
      (run.eta - run.zeta.rowwise().sum()) / group + tr.x.col(agent - 1);
  run.final_estimate = tail_mean(run.estimate);
  attach_estimate_column(run.trajectory, "obs_island_" + std::to_string(agent), run.estimate);
  return run;
}

ObserverRun run_observer(const Scenario& s, const ObserverSpec& spec) {
  switch (spec.kind) {
    case ObserverKind::internal:
      return run_internal(s, spec.observer, spec.target, spec.beta);
    case ObserverKind::external:
      return run_external(s, spec.target, spec.beta, spec.alpha, spec.eta0);
    case ObserverKind::island:
      return run_island(s, spec.observer, spec.island, spec.island_betas);
  }
  throw input_error("unknown observer kind");
}

}  // namespace cpl
