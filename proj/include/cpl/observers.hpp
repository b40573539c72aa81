#pragma once

// Estimators that recover protected reference values from intercepted
// transmissions. All observer states ride along in the simulation's
// augmented vector, so estimate and error traces share the sample grid of
// the underlying run.

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "cpl/sim.hpp"

namespace cpl {

enum class ObserverKind { internal, external, island };

struct ObserverSpec {
  ObserverKind kind = ObserverKind::internal;
  int observer = 1;               // internal: the intercepting neighbour; island: the shared agent
  int target = 1;                 // internal and external kinds
  std::vector<int> island;        // island kind: members including the shared agent
  double beta = 0.0;              // assumed state-perturbation integral of the target
  double alpha = 0.0;             // external kind: assumed common output offset
  double eta0 = 0.0;              // external kind: arbitrary low-pass initial value
  std::map<int, double> island_betas;  // island kind: per-member beta, absent means 0
};

struct ObserverRun {
  std::vector<double> times;
  Eigen::VectorXd estimate;     // per-sample estimate of the protected value
  Eigen::MatrixXd zeta;         // correction integrators, one column each
  Eigen::VectorXd eta;          // low-pass interception state (empty for internal kind)
  Eigen::VectorXd error_trace;  // closed-form estimate error (empty for island kind)
  double final_estimate = 0.0;  // estimate averaged over the last 1% of samples
  Trajectory trajectory;        // network run with an obs_<kind>_<node> aux column added
};

// Neighbour observer: integrates the target's weighted output differences
// starting from -beta and adds its own state. Requires the observer to
// intercept the target's whole in-flow, i.e. can_identify_internal.
ObserverRun run_internal(const Scenario& s, int observer, int target, double beta = 0.0);

// Wiretap observer: same correction integrator started from -beta - alpha,
// plus a low-pass of the target's output; the estimate is their sum. The
// low-pass initial value is forgotten exponentially.
ObserverRun run_external(const Scenario& s, int target, double beta = 0.0, double alpha = 0.0,
                         double eta0 = 0.0);

// Island-mean observer: recovers the average reference of the island members
// that are not fully surrounded by the agent (classes v2 and v3). Requires a
// nonempty v2 class. Per-member betas default to zero.
ObserverRun run_island(const Scenario& s, int agent, const std::vector<int>& island,
                       const std::map<int, double>& betas = {});

// Dispatch helper for spec-driven callers.
ObserverRun run_observer(const Scenario& s, const ObserverSpec& spec);

}  // namespace cpl
