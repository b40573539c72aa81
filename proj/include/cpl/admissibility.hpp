#pragma once

// Numeric verification of perturbation admissibility: the per-agent integral
// limits, the network-level report, the reduced-space settling check, and a
// generic low-pass limit oracle for stable linear systems.

#include <vector>

#include <Eigen/Dense>

#include "cpl/graph.hpp"
#include "cpl/signal.hpp"

namespace cpl {

// Defaults for every improper-integral estimate; chirp integrals converge at
// rate O(1/t), so horizon and tolerance are coupled.
inline constexpr double kDefaultHorizon = 60.0;
inline constexpr double kDefaultLimitTol = 1e-3;

struct LimitEstimate {
  double value = 0.0;
  bool converged = false;
};

// lim_{t->inf} of the accumulated integral of f + d_out * g.
LimitEstimate beta_limit(const SignalPtr& f, const SignalPtr& g, double d_out,
                         double horizon = kDefaultHorizon, double tol = kDefaultLimitTol);

// Settled state of the unit low-pass filter driven by g: z' = -z + g, z(0)=0.
LimitEstimate alpha_limit(const SignalPtr& g, double horizon = kDefaultHorizon,
                          double tol = kDefaultLimitTol);

struct AdmissibilityReport {
  Eigen::VectorXd beta_estimates;
  Eigen::VectorXd alpha_estimates;
  double sum_beta = 0.0;
  std::vector<bool> beta_converged;
  std::vector<bool> alpha_converged;
  bool sum_beta_zero = false;  // |sum of betas| <= n * tol
  bool alphas_equal = false;   // spread of alphas <= 2 * tol
  bool admissible = false;     // all converged, zero beta sum, common alpha
  double horizon = 0.0;
  double tol = 0.0;
};

AdmissibilityReport network_admissibility(const std::vector<AgentSignals>& pairs,
                                          const Digraph& graph,
                                          double horizon = kDefaultHorizon,
                                          double tol = kDefaultLimitTol);

// Settling check in the reduced space: co-integrates the scalar accumulator
// of the summed perturbations together with p' = -reduced * p + basis^T *
// (f + A g), p(0) = 0, and reports true when both settle to zero within tol.
bool theorem1_check(const std::vector<AgentSignals>& pairs, const Digraph& graph,
                    double horizon = kDefaultHorizon, double tol = kDefaultLimitTol);

// Settled value of z' = E z + u(t), z(0) = 0. Requires E + E^T negative
// definite, which certifies E is Hurwitz without an eigensolver.
Eigen::VectorXd lowpass_limit_oracle(const std::vector<SignalPtr>& u, const Eigen::MatrixXd& E,
                                     double horizon = kDefaultHorizon,
                                     double tol = kDefaultLimitTol);

}  // namespace cpl
