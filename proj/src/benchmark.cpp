#include "cpl/benchmark.hpp"

#include <cmath>

#include "cpl/errors.hpp"

namespace cpl {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Digraph benchmark_graph() {
  Digraph g(5);
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

double benchmark_chirp_integral(int l) {
  if (l < 1) throw input_error("chirp index must be positive");
  const double phase = l * kPi / 12.0;
  return (std::sin(phase) + std::cos(phase)) * std::sqrt(2.0 * l) / (4.0 * l);
}

std::vector<AgentSignals> benchmark_signals(bool corrected_sign) {
  const Eigen::VectorXd d = benchmark_graph().out_degrees();
  std::vector<AgentSignals> pairs;
  for (int l = 1; l <= 5; ++l) {
    const double sign = corrected_sign ? -1.0 : 1.0;
    const double amp = sign * d(l - 1) * benchmark_chirp_integral(l);
    pairs.push_back({make_expdecay(amp, 1.0),
                     make_chirp(1.0, l * kPi / 12.0, l * kPi, 0.0)});
  }
  return pairs;
}

Scenario benchmark_scenario(bool corrected_sign) {
  Scenario s;
  s.graph = benchmark_graph();
  s.x0.resize(5);
  s.x0 << 3.0, 2.0, 5.0, -3.0, -1.0;
  s.agents = benchmark_signals(corrected_sign);
  s.horizon = 30.0;
  s.step = 1e-4;
  return s;
}

}  // namespace cpl
