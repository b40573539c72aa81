#pragma once

// Bundled five-agent reference experiment. The graph is weight-balanced with
// out-degrees (3,1,1,2,2); the reference values average 1.2; each agent
// transmits a unit chirp and drives its own state with a decaying pulse
// sized to cancel the chirp's settled output integral, so the whole signal
// set is admissible. Flipping the pulse sign doubles every integral instead
// of cancelling it, which makes a handy negative example.

#include <vector>

#include "cpl/graph.hpp"
#include "cpl/signal.hpp"
#include "cpl/sim.hpp"

namespace cpl {

Digraph benchmark_graph();

// Closed form of the settled integral of sin(l*pi/12 + l*pi*t^2) over t >= 0.
double benchmark_chirp_integral(int l);

std::vector<AgentSignals> benchmark_signals(bool corrected_sign = true);

// Full scenario: benchmark graph, references (3,2,5,-3,-1), horizon 30,
// step 1e-4 (the chirps demand a fine step near the end of the run).
Scenario benchmark_scenario(bool corrected_sign = true);

}  // namespace cpl
