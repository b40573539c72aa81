#pragma once

// Shared fixtures: the two reference topologies used across the test suite,
// a deliberately unbalanced counterexample, a generator of random strongly
// connected weight-balanced digraphs (unions of directed cycles), and the
// five-node benchmark's perturbation signal set.

#include <cmath>
#include <random>
#include <vector>

#include "cpl/graph.hpp"
#include "cpl/signal.hpp"
#include "cpl/sim.hpp"

namespace cpltest {

inline constexpr double kTestPi = 3.14159265358979323846;

// Five-node benchmark graph. Out-degrees (3,1,1,2,2); agent 1 listens to
// 2, 4, 5; the group splits into islands {1,2,3} and {1,4,5}.
inline cpl::Digraph five_node_demo() {
  cpl::Digraph g(5);
  g.add_edge(1, 2, 1.0);
  g.add_edge(1, 4, 1.0);
  g.add_edge(1, 5, 1.0);
  g.add_edge(2, 3, 1.0);
  g.add_edge(3, 1, 1.0);
  g.add_edge(4, 1, 1.0);
  g.add_edge(4, 5, 1.0);
  g.add_edge(5, 1, 1.0);
  g.add_edge(5, 4, 1.0);
  return g;
}

// Eight-node benchmark graph whose agent 1 has three islands:
// {1,2,3,4}, {1,5}, {1,6,7,8}. Weight-balanced by construction.
inline cpl::Digraph three_island_graph() {
  cpl::Digraph g(8);
  g.add_edge(1, 2, 1.0);
  g.add_edge(1, 3, 1.0);
  g.add_edge(2, 3, 2.0);
  g.add_edge(3, 4, 3.0);
  g.add_edge(4, 2, 1.0);
  g.add_edge(4, 1, 2.0);
  g.add_edge(1, 5, 3.0);
  g.add_edge(5, 1, 3.0);
  g.add_edge(1, 6, 3.0);
  g.add_edge(6, 1, 3.0);
  g.add_edge(6, 7, 1.0);
  g.add_edge(7, 8, 1.0);
  g.add_edge(8, 6, 1.0);
  return g;
}

// Strongly connected but not weight-balanced (node 3 pushes weight 2 into 1).
inline cpl::Digraph unbalanced_triangle() {
  cpl::Digraph g(3);
  g.add_edge(1, 2, 1.0);
  g.add_edge(2, 3, 1.0);
  g.add_edge(3, 1, 2.0);
  return g;
}

// Closed form of the improper chirp integral with quadratic coefficient
// l*pi: the value of the accumulated integral of sin(phase + l*pi*t^2).
inline double chirp_integral_closed_form(int l) {
  const double phase = l * kTestPi / 12.0;
  return (std::sin(phase) + std::cos(phase)) * std::sqrt(2.0 * l) / (4.0 * l);
}

// Benchmark perturbation set for the five-node graph: agent l drives its
// state with a decaying pulse sized to cancel the chirp's output integral,
// and its output with a unit chirp. With the corrected pulse sign every
// agent has beta = 0 and alpha = 0; the uncorrected sign doubles the
// integral instead of cancelling it.
inline std::vector<cpl::AgentSignals> five_node_demo_signals(bool corrected_sign = true) {
  const Eigen::VectorXd d = five_node_demo().out_degrees();
  std::vector<cpl::AgentSignals> pairs;
  for (int l = 1; l <= 5; ++l) {
    const double sign = corrected_sign ? -1.0 : 1.0;
    const double amp = sign * d(l - 1) * chirp_integral_closed_form(l);
    pairs.push_back({cpl::make_expdecay(amp, 1.0),
                     cpl::make_chirp(1.0, l * kTestPi / 12.0, l * kTestPi, 0.0)});
  }
  return pairs;
}

// Reference initial conditions for the five-node benchmark; mean 1.2.
inline Eigen::VectorXd reference_x0() {
  Eigen::VectorXd x0(5);
  x0 << 3.0, 2.0, 5.0, -3.0, -1.0;
  return x0;
}

// Five-node benchmark without perturbations.
inline cpl::Scenario quiet_five_scenario(double horizon = 20.0, double step = 1e-3) {
  cpl::Scenario s;
  s.graph = five_node_demo();
  s.x0 = reference_x0();
  s.agents.assign(5, {cpl::make_zero(), cpl::make_zero()});
  s.horizon = horizon;
  s.step = step;
  return s;
}

// Five-node benchmark with the full perturbation set.
inline cpl::Scenario benchmark_scenario(double horizon = 30.0, double step = 1e-4) {
  cpl::Scenario s = quiet_five_scenario(horizon, step);
  s.agents = five_node_demo_signals();
  return s;
}

// Union of directed cycles: one full-length cycle for strong connectivity
// plus `extra` random 3-cycles. Each cycle adds equal in- and out-weight at
// every node it touches, so the union is weight-balanced.
inline cpl::Digraph random_balanced_graph(std::mt19937& rng, int n, int extra = 3) {
  std::uniform_real_distribution<double> wdist(0.5, 1.5);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  const double base = wdist(rng);
  for (int i = 0; i < n; ++i) w(i, (i + 1) % n) += base;
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int c = 0; c < extra; ++c) {
    int a = node(rng), b = node(rng), d = node(rng);
    if (a == b || b == d || d == a) continue;
    const double wc = wdist(rng);
    w(a, b) += wc;
    w(b, d) += wc;
    w(d, a) += wc;
  }
  return cpl::Digraph(n, w);
}

}  // namespace cpltest
