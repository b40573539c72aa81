#include "cpl/integrate.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cpl/errors.hpp"

namespace cpl {

void rk4_drive(const DerivFn& deriv, Eigen::VectorXd state, double horizon, double step,
               const SampleFn& sample) {
  if (!(horizon > 0.0)) throw input_error("integration horizon must be positive");
  if (!(step > 0.0)) throw input_error("integration step must be positive");

  const auto n = state.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), work(n);
  const auto advance = [&](double t, double h) {
    deriv(t, state, k1);
    work = state + (0.5 * h) * k1;
    deriv(t + 0.5 * h, work, k2);
    work = state + (0.5 * h) * k2;
    deriv(t + 0.5 * h, work, k3);
    work = state + h * k3;
    deriv(t + h, work, k4);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!state.allFinite())
      throw numeric_error("integration state became non-finite near t = " + std::to_string(t + h));
  };

  sample(0.0, state);
  const auto full = static_cast<long long>(horizon / step);
  for (long long i = 1; i <= full; ++i) {
    advance(static_cast<double>(i - 1) * step, step);
    sample(static_cast<double>(i) * step, state);
  }
  const double reached = static_cast<double>(full) * step;
  if (reached < horizon) {
    advance(reached, horizon - reached);
    sample(horizon, state);
  }
}

TailEstimate tail_settle(const std::vector<double>& times, const std::vector<double>& values,
                         double horizon, double tol, double window_fraction, int chunks) {
  TailEstimate est;
  est.variation = std::numeric_limits<double>::infinity();
  if (times.size() != values.size() || times.empty() || chunks < 2 || !(horizon > 0.0) ||
      !(window_fraction > 0.0 && window_fraction <= 1.0))
    return est;

  const double start = horizon * (1.0 - window_fraction);
  const double width = horizon * window_fraction / chunks;
  std::vector<double> sums(chunks, 0.0);
  std::vector<long long> counts(chunks, 0);
  double total = 0.0;
  long long total_count = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < start || times[i] > horizon) continue;
    const int k = std::min(chunks - 1, static_cast<int>((times[i] - start) / width));
    sums[k] += values[i];
    ++counts[k];
    total += values[i];
    ++total_count;
  }
  if (total_count > 0) est.value = total / static_cast<double>(total_count);
  for (long long c : counts)
    if (c == 0) return est;  // an empty sub-window means the grid is too coarse

  est.variation = 0.0;
  for (int k = 0; k + 1 < chunks; ++k)
    est.variation += std::abs(sums[k + 1] / static_cast<double>(counts[k + 1]) -
                              sums[k] / static_cast<double>(counts[k]));
  est.converged = est.variation <= tol;
  return est;
}

}  // namespace cpl
