#pragma once

// Constructive output-indistinguishability: given a scenario, build an
// alternative scenario with different protected values whose transmitted
// outputs coincide on a stated observable set, then verify the claim by
// simulating both.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpl/sim.hpp"

namespace cpl {

enum class ConstructionKind { island, external_scalar, alpha_shift, beta_exchange };

const char* construction_name(ConstructionKind kind);

struct AlternativePair {
  Scenario original;
  Scenario alternative;
  std::vector<int> observable;  // agents whose outputs must coincide
  ConstructionKind construction = ConstructionKind::island;
  std::map<std::string, double> parameters;
};

// Moves the references of an island's unobserved members (class v3) by
// delta_x3 and hides the change behind compensating perturbations on the
// directly observed members (class v2). delta_x3 is indexed by the island's
// v3 class in ascending node order. Everything outside v3 keeps its output.
AlternativePair island_alternative(const Scenario& s, int agent, const std::vector<int>& island,
                                   const Eigen::VectorXd& delta_x3);

// Scalar special case: one visible agent compensates for one hidden
// out-neighbour whose reference moves by delta.
AlternativePair external_scalar_alternative(const Scenario& s, int visible, int hidden,
                                            double delta);

// Shifts every reference by -a and every output perturbation by +a, with the
// state perturbations absorbing the coupling. No agent's output changes, so
// the observable set is everyone; the common output offset moves by a.
AlternativePair alpha_shift_alternative(const Scenario& s, double a);

// Trades beta_ik of perturbation integral from agent i to agent k while
// moving their references in the opposite direction. The decay rate d must
// exceed both out-degrees. No agent's output changes.
AlternativePair beta_exchange_alternative(const Scenario& s, int i, int k, double beta_ik,
                                          double d);

// Sup over stored samples and the listed agents of |y - y2|. The two
// trajectories must share the sample grid exactly.
double output_distance(const Trajectory& tr, const Trajectory& tr2,
                       const std::vector<int>& agents);

}  // namespace cpl
