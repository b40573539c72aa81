#pragma once

// Shared fixed-step integration core and the tail-window statistic used by
// every improper-integral estimate in the library.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cpl {

using DerivFn = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
using SampleFn = std::function<void(double, const Eigen::VectorXd&)>;

// Classical fourth-order Runge-Kutta with a fixed step; the final step is
// shortened to land exactly on the horizon. `sample` fires at t = 0 and
// after every step. Throws numeric_error when the state leaves the finite
// range. Step times are computed as multiples of `step`, not accumulated,
// so long runs carry no time drift.
void rk4_drive(const DerivFn& deriv, Eigen::VectorXd state, double horizon, double step,
               const SampleFn& sample);

struct TailEstimate {
  double value = 0.0;      // mean of the samples inside the tail window
  double variation = 0.0;  // total variation across the sub-window means
  bool converged = false;
};

// Convergence statistic for an accumulator sampled on [0, horizon]: the
// final window_fraction of the horizon is cut into `chunks` equal
// sub-windows, and the series counts as settled when the total variation of
// the sub-window means is at most tol. The reported value is the mean over
// the whole window, which averages out bounded ripple such as the O(1/t)
// oscillation left by chirp forcing.
TailEstimate tail_settle(const std::vector<double>& times, const std::vector<double>& values,
                         double horizon, double tol, double window_fraction = 0.2,
                         int chunks = 5);

}  // namespace cpl
