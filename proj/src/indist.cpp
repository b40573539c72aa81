#include "cpl/indist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "cpl/errors.hpp"
#include "cpl/signal.hpp"

namespace cpl {

namespace {

void check_node(const Scenario& s, int node, const char* role) {
  if (node < 1 || node > s.graph.size())
    throw input_error(std::string(role) + " agent " + std::to_string(node) + " is out of range");
}

std::vector<int> all_except(int n, const std::vector<int>& excluded) {
  std::vector<int> nodes;
  nodes.reserve(static_cast<std::size_t>(n));
  for (int v = 1; v <= n; ++v)
    if (std::find(excluded.begin(), excluded.end(), v) == excluded.end()) nodes.push_back(v);
  return nodes;
}

SignalPtr add_term(const SignalPtr& base, SignalPtr term) {
  return make_sum({base, std::move(term)});
}

}  // namespace

const char* construction_name(ConstructionKind kind) {
  switch (kind) {
    case ConstructionKind::island: return "island";
    case ConstructionKind::external_scalar: return "external_scalar";
    case ConstructionKind::alpha_shift: return "alpha_shift";
    case ConstructionKind::beta_exchange: return "beta_exchange";
  }
  return "unknown";
}

AlternativePair island_alternative(const Scenario& s, int agent, const std::vector<int>& island,
                                   const Eigen::VectorXd& delta_x3) {
  const IslandClasses classes = s.graph.partition_island(agent, island);
  if (classes.v2.empty())
    throw input_error("island construction for agent " + std::to_string(agent) +
                      " needs a directly observed member that is not fully surrounded "
                      "(the v2 class is empty)");
  const auto n2 = static_cast<Eigen::Index>(classes.v2.size());
  const auto n3 = static_cast<Eigen::Index>(classes.v3.size());
  if (delta_x3.size() != n3)
    throw input_error("expected " + std::to_string(n3) + " reference offsets for the " +
                      std::to_string(n3) + " unobserved members, got " +
                      std::to_string(delta_x3.size()));

  AlternativePair pair;
  pair.original = s;
  pair.alternative = s;
  pair.construction = ConstructionKind::island;
  pair.observable = all_except(s.graph.size(), classes.v3);
  for (Eigen::Index c = 0; c < n3; ++c)
    pair.parameters["delta_x3_" + std::to_string(classes.v3[static_cast<std::size_t>(c)])] =
        delta_x3(c);
  if (n3 == 0) return pair;

  // Coupling blocks between the observed and unobserved classes, taken from
  // the full Laplacian and adjacency.
  const Eigen::MatrixXd laplacian = s.graph.laplacian();
  const Eigen::MatrixXd& weights = s.graph.weights();
  Eigen::MatrixXd hidden_block(n3, n3);
  Eigen::MatrixXd coupling(n2, n3);
  for (Eigen::Index r = 0; r < n3; ++r)
    for (Eigen::Index c = 0; c < n3; ++c)
      hidden_block(r, c) = laplacian(classes.v3[static_cast<std::size_t>(r)] - 1,
                                     classes.v3[static_cast<std::size_t>(c)] - 1);
  for (Eigen::Index r = 0; r < n2; ++r)
    for (Eigen::Index c = 0; c < n3; ++c)
      coupling(r, c) = weights(classes.v2[static_cast<std::size_t>(r)] - 1,
                               classes.v3[static_cast<std::size_t>(c)] - 1);

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(hidden_block);
  if (!lu.isInvertible())
    throw numeric_error("the unobserved members' Laplacian block is singular");
  const Eigen::VectorXd delta_x2 = -coupling * lu.solve(delta_x3);

  for (Eigen::Index c = 0; c < n3; ++c) {
    const int node = classes.v3[static_cast<std::size_t>(c)];
    pair.alternative.x0(node - 1) += delta_x3(c);
  }
  for (Eigen::Index c = 0; c < n2; ++c) {
    const int node = classes.v2[static_cast<std::size_t>(c)];
    pair.alternative.x0(node - 1) += delta_x2(c);
    // The observed member cancels the hidden transient it keeps receiving
    // and masks its own reference change in the transmitted output.
    AgentSignals& signals = pair.alternative.agents[static_cast<std::size_t>(node - 1)];
    signals.f = add_term(signals.f,
                         make_scaled(-1.0, make_filter(-hidden_block, coupling.row(c), delta_x3)));
    signals.g = add_term(signals.g, make_expdecay(-delta_x2(c), s.graph.out_degree(node)));
  }
  return pair;
}

AlternativePair external_scalar_alternative(const Scenario& s, int visible, int hidden,
                                            double delta) {
  check_node(s, visible, "visible");
  check_node(s, hidden, "hidden");
  const double coupling = s.graph.weight(visible, hidden);
  if (coupling <= 0.0)
    throw input_error("agent " + std::to_string(hidden) + " is not an out-neighbour of agent " +
                      std::to_string(visible));
  const double hidden_degree = s.graph.out_degree(hidden);
  if (!(hidden_degree > 0.0))
    throw input_error("agent " + std::to_string(hidden) + " has no outgoing edges");

  AlternativePair pair;
  pair.original = s;
  pair.alternative = s;
  pair.construction = ConstructionKind::external_scalar;
  pair.observable = all_except(s.graph.size(), {hidden});
  pair.parameters = {{"visible", static_cast<double>(visible)},
                     {"hidden", static_cast<double>(hidden)},
                     {"delta", delta}};

  const double delta_visible = -(coupling / hidden_degree) * delta;
  pair.alternative.x0(hidden - 1) += delta;
  pair.alternative.x0(visible - 1) += delta_visible;
  AgentSignals& signals = pair.alternative.agents[static_cast<std::size_t>(visible - 1)];
  signals.f = add_term(signals.f, make_expdecay(-coupling * delta, hidden_degree));
  signals.g = add_term(signals.g, make_expdecay(-delta_visible, s.graph.out_degree(visible)));
  return pair;
}

AlternativePair alpha_shift_alternative(const Scenario& s, double a) {
  AlternativePair pair;
  pair.original = s;
  pair.alternative = s;
  pair.construction = ConstructionKind::alpha_shift;
  pair.observable = all_except(s.graph.size(), {});
  pair.parameters = {{"a", a}};

  for (int node = 1; node <= s.graph.size(); ++node) {
    pair.alternative.x0(node - 1) -= a;
    AgentSignals& signals = pair.alternative.agents[static_cast<std::size_t>(node - 1)];
    signals.f = add_term(signals.f, make_constant(-s.graph.out_degree(node) * a));
    signals.g = add_term(signals.g, make_constant(a));
  }
  return pair;
}

AlternativePair beta_exchange_alternative(const Scenario& s, int i, int k, double beta_ik,
                                          double d) {
  check_node(s, i, "source");
  check_node(s, k, "sink");
  if (i == k) throw input_error("the exchange needs two distinct agents");
  const double di = s.graph.out_degree(i);
  const double dk = s.graph.out_degree(k);
  if (!(d > std::max(di, dk)))
    throw input_error("decay rate " + std::to_string(d) +
                      " must exceed both out-degrees (max " + std::to_string(std::max(di, dk)) +
                      ")");

  AlternativePair pair;
  pair.original = s;
  pair.alternative = s;
  pair.construction = ConstructionKind::beta_exchange;
  pair.observable = all_except(s.graph.size(), {});
  pair.parameters = {{"i", static_cast<double>(i)},
                     {"k", static_cast<double>(k)},
                     {"beta_ik", beta_ik},
                     {"d", d}};

  pair.alternative.x0(i - 1) -= beta_ik;
  pair.alternative.x0(k - 1) += beta_ik;
  AgentSignals& source = pair.alternative.agents[static_cast<std::size_t>(i - 1)];
  source.f = add_term(source.f, make_expdecay(d * beta_ik, di + d));
  source.g = add_term(source.g, make_expdecay(beta_ik, di + d));
  AgentSignals& sink = pair.alternative.agents[static_cast<std::size_t>(k - 1)];
  sink.f = add_term(sink.f, make_expdecay(-d * beta_ik, dk + d));
  sink.g = add_term(sink.g, make_expdecay(-beta_ik, dk + d));
  return pair;
}

double output_distance(const Trajectory& tr, const Trajectory& tr2,
                       const std::vector<int>& agents) {
  if (tr.samples() != tr2.samples() || tr.times != tr2.times)
    throw input_error("trajectories do not share a sample grid");
  if (tr.y.cols() != tr2.y.cols()) throw input_error("trajectories have different agent counts");
  double sup = 0.0;
  for (int node : agents) {
    if (node < 1 || node > tr.y.cols())
      throw input_error("agent " + std::to_string(node) + " is out of range");
    for (int s = 0; s < tr.samples(); ++s)
      sup = std::max(sup, std::abs(tr.y(s, node - 1) - tr2.y(s, node - 1)));
  }
  return sup;
}

}  // namespace cpl
