#pragma once

// Fixed-step integration of the perturbed consensus dynamics. Every
// auxiliary state (signal filter, observer state, verification accumulator)
// advances in the same augmented vector as the agent states, so outputs and
// accumulators are consistent at every Runge-Kutta stage.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpl/graph.hpp"
#include "cpl/signal.hpp"

namespace cpl {

struct Scenario {
  Digraph graph;
  Eigen::VectorXd x0;               // per-agent reference values
  std::vector<AgentSignals> agents; // one (f, g) pair per agent
  double horizon = 30.0;
  double step = 1e-3;
  // Explicit override for counterexample runs on graphs that are not
  // strongly connected and weight-balanced.
  bool allow_unbalanced = false;
};

// Stage view handed to auxiliary dynamics. Node arguments are 1-based; y is
// the transmitted output x + g evaluated with the stage-consistent filter
// states.
class SimView {
 public:
  SimView(double t, const Eigen::VectorXd& state, const SignalBank& bank,
          const std::vector<int>& f_handles, const std::vector<int>& g_handles)
      : t_(t), state_(state), bank_(bank), f_handles_(f_handles), g_handles_(g_handles) {}

  double time() const { return t_; }
  double x(int node) const { return state_(node - 1); }
  double g_value(int node) const { return bank_.output(g_handles_[node - 1], t_, state_); }
  double f_value(int node) const { return bank_.output(f_handles_[node - 1], t_, state_); }
  double y(int node) const { return x(node) + g_value(node); }

 private:
  double t_;
  const Eigen::VectorXd& state_;
  const SignalBank& bank_;
  const std::vector<int>& f_handles_;
  const std::vector<int>& g_handles_;
};

// One extra co-integrated block. dynamics writes the derivative of the
// block given the stage view and the block's own current values. Block
// names starting with '.' are kept in the trajectory but hidden from CSV.
struct AuxBlock {
  std::string name;
  Eigen::VectorXd init;
  std::function<void(const SimView& view, const Eigen::Ref<const Eigen::VectorXd>& self,
                     Eigen::Ref<Eigen::VectorXd> dself)>
      dynamics;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd x;    // one row per sample, one column per agent
  Eigen::MatrixXd y;    // x + g at the sample time, filter-state consistent
  std::map<std::string, Eigen::MatrixXd> aux;
  double step_used = 0.0;
  std::vector<std::string> warnings;

  int samples() const { return static_cast<int>(times.size()); }
};

// Name of the always-registered hidden accumulator of the summed
// perturbations; conservation_residual reads it back.
inline constexpr const char* kBalanceAux = ".balance_integral";

// Integrates the scenario with classical fourth-order Runge-Kutta. The user
// step is clamped so that both the fastest forcing frequency and the largest
// out-degree are resolved (h * rate <= 0.1); a clamp adds a warning. Stored
// samples are decimated to at most ~100k rows; the final time is always
// stored. Accumulators always integrate at full resolution.
Trajectory simulate(const Scenario& s, const std::vector<AuxBlock>& extra = {});

// Max over samples of |sum x(t) - sum x(0) - integral of sum(f + D_out g)|,
// the conservation identity that holds exactly for weight-balanced graphs.
double conservation_residual(const Trajectory& tr, const Scenario& s);

// Per-agent |x_i(T) - mean(x(0))|.
Eigen::VectorXd consensus_error(const Trajectory& tr);

// CSV export: header t,x1..xN,y1..yN then one column per visible aux
// coordinate (single-state blocks use the block name, wider blocks append
// _1.._k), 17 significant digits per value.
std::string trajectory_csv(const Trajectory& tr);
void write_trajectory_csv(const Trajectory& tr, const std::string& path);

}  // namespace cpl
