#include "cpl/admissibility.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "cpl/errors.hpp"
#include "cpl/integrate.hpp"

namespace cpl {

namespace {

// Accuracy-driven step rule shared by the limit estimators: resolve the
// fastest forcing frequency and system rate with at least ten steps each.
double limit_step(double rate, double horizon) {
  double h = std::min(0.01, horizon);
  if (rate > 0.0) h = std::min(h, 0.1 / rate);
  return h;
}

void check_horizon(double horizon) {
  if (!(horizon > 0.0)) throw input_error("limit horizon must be positive");
}

}  // namespace

LimitEstimate beta_limit(const SignalPtr& f, const SignalPtr& g, double d_out, double horizon,
                         double tol) {
  if (!f || !g) throw input_error("beta_limit needs both perturbation signals");
  if (d_out < 0.0) throw input_error("out-degree must be nonnegative");
  check_horizon(horizon);

  SignalBank bank;
  const int hf = bank.add(f);
  const int hg = bank.add(g);
  const int m = bank.state_size();
  const int acc = m;

  Eigen::VectorXd init = Eigen::VectorXd::Zero(m + 1);
  init.head(m) = bank.initial_state();

  std::vector<double> times;
  std::vector<double> values;
  rk4_drive(
      [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        bank.derivative(s, ds);
        ds(acc) = bank.output(hf, t, s) + d_out * bank.output(hg, t, s);
      },
      std::move(init), horizon, limit_step(bank.rate_bound(horizon), horizon),
      [&](double t, const Eigen::VectorXd& s) {
        times.push_back(t);
        values.push_back(s(acc));
      });

  const TailEstimate tail = tail_settle(times, values, horizon, tol);
  return {tail.value, tail.converged};
}

LimitEstimate alpha_limit(const SignalPtr& g, double horizon, double tol) {
  if (!g) throw input_error("alpha_limit needs a signal");
  check_horizon(horizon);

  SignalBank bank;
  const int hg = bank.add(g);
  const int m = bank.state_size();
  const int z = m;

  Eigen::VectorXd init = Eigen::VectorXd::Zero(m + 1);
  init.head(m) = bank.initial_state();

  std::vector<double> times;
  std::vector<double> values;
  rk4_drive(
      [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        bank.derivative(s, ds);
        ds(z) = -s(z) + bank.output(hg, t, s);
      },
      std::move(init), horizon, limit_step(std::max(1.0, bank.rate_bound(horizon)), horizon),
      [&](double t, const Eigen::VectorXd& s) {
        times.push_back(t);
        values.push_back(s(z));
      });

  const TailEstimate tail = tail_settle(times, values, horizon, tol);
  return {tail.value, tail.converged};
}

AdmissibilityReport network_admissibility(const std::vector<AgentSignals>& pairs,
                                          const Digraph& graph, double horizon, double tol) {
  const int n = graph.size();
  if (static_cast<int>(pairs.size()) != n)
    throw input_error("expected one (f, g) pair per agent");
  check_horizon(horizon);

  AdmissibilityReport report;
  report.horizon = horizon;
  report.tol = tol;
  report.beta_estimates.resize(n);
  report.alpha_estimates.resize(n);
  const Eigen::VectorXd d_out = graph.out_degrees();

  bool all_converged = true;
  for (int i = 0; i < n; ++i) {
    const LimitEstimate beta = beta_limit(pairs[i].f, pairs[i].g, d_out(i), horizon, tol);
    const LimitEstimate alpha = alpha_limit(pairs[i].g, horizon, tol);
    report.beta_estimates(i) = beta.value;
    report.alpha_estimates(i) = alpha.value;
    report.beta_converged.push_back(beta.converged);
    report.alpha_converged.push_back(alpha.converged);
    all_converged = all_converged && beta.converged && alpha.converged;
  }

  report.sum_beta = report.beta_estimates.sum();
  report.sum_beta_zero = std::abs(report.sum_beta) <= n * tol;
  const double spread =
      n > 0 ? report.alpha_estimates.maxCoeff() - report.alpha_estimates.minCoeff() : 0.0;
  report.alphas_equal = spread <= 2.0 * tol;
  report.admissible = all_converged && report.sum_beta_zero && report.alphas_equal;
  return report;
}

bool theorem1_check(const std::vector<AgentSignals>& pairs, const Digraph& graph, double horizon,
                    double tol) {
  const int n = graph.size();
  if (static_cast<int>(pairs.size()) != n)
    throw input_error("expected one (f, g) pair per agent");
  check_horizon(horizon);
  const ReducedLaplacian rl = graph.reduced_laplacian();
  const Eigen::MatrixXd& weights = graph.weights();
  const Eigen::VectorXd d_out = graph.out_degrees();

  SignalBank bank;
  std::vector<int> hf(n), hg(n);
  for (int i = 0; i < n; ++i) {
    if (!pairs[i].f || !pairs[i].g) throw input_error("agent signals must be non-null");
    hf[i] = bank.add(pairs[i].f);
    hg[i] = bank.add(pairs[i].g);
  }
  const int m = bank.state_size();
  const int acc = m;          // scalar accumulator of the summed perturbations
  const int p0 = m + 1;       // reduced disagreement forcing state
  const int dim = m + n;      // total: filters + accumulator + (n-1) reduced

  Eigen::VectorXd init = Eigen::VectorXd::Zero(dim);
  init.head(m) = bank.initial_state();

  Eigen::VectorXd fvals(n), gvals(n), q(n);
  const double rate =
      std::max({1.0, bank.rate_bound(horizon), rl.reduced.norm(), d_out.maxCoeff()});
  const double step = limit_step(rate, horizon);

  // Only the tail window feeds the settling statistic; skip earlier samples
  // to bound memory on fine chirp grids.
  const double record_from = horizon * 0.75;
  std::vector<double> times;
  std::vector<std::vector<double>> series(n);  // accumulator + each reduced coordinate

  rk4_drive(
      [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        bank.derivative(s, ds);
        for (int i = 0; i < n; ++i) {
          fvals(i) = bank.output(hf[i], t, s);
          gvals(i) = bank.output(hg[i], t, s);
        }
        ds(acc) = fvals.sum() + d_out.dot(gvals);
        q = fvals + weights * gvals;
        ds.segment(p0, n - 1).noalias() =
            -rl.reduced * s.segment(p0, n - 1) + rl.basis.transpose() * q;
      },
      std::move(init), horizon, step,
      [&](double t, const Eigen::VectorXd& s) {
        if (t < record_from) return;
        times.push_back(t);
        series[0].push_back(s(acc));
        for (int k = 0; k + 1 < n; ++k) series[k + 1].push_back(s(p0 + k));
      });

  for (const std::vector<double>& trace : series) {
    const TailEstimate tail = tail_settle(times, trace, horizon, tol);
    if (!tail.converged || std::abs(tail.value) > tol) return false;
  }
  return true;
}

Eigen::VectorXd lowpass_limit_oracle(const std::vector<SignalPtr>& u, const Eigen::MatrixXd& E,
                                     double horizon, double tol) {
  const int n = static_cast<int>(u.size());
  if (E.rows() != n || E.cols() != n)
    throw input_error("system matrix shape must match the input vector length");
  if (n == 0) return Eigen::VectorXd();
  check_horizon(horizon);
  Eigen::LLT<Eigen::MatrixXd> llt(-(E + E.transpose()));
  if (llt.info() != Eigen::Success)
    throw input_error("system matrix fails the negative-definiteness certificate");

  SignalBank bank;
  std::vector<int> hu(n);
  for (int i = 0; i < n; ++i) {
    if (!u[i]) throw input_error("input signals must be non-null");
    hu[i] = bank.add(u[i]);
  }
  const int m = bank.state_size();
  const int z0 = m;

  Eigen::VectorXd init = Eigen::VectorXd::Zero(m + n);
  init.head(m) = bank.initial_state();

  const double rate = std::max({1.0, bank.rate_bound(horizon), E.norm()});
  const double record_from = horizon * 0.75;
  std::vector<double> times;
  std::vector<std::vector<double>> series(n);

  rk4_drive(
      [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        bank.derivative(s, ds);
        ds.segment(z0, n).noalias() = E * s.segment(z0, n);
        for (int i = 0; i < n; ++i) ds(z0 + i) += bank.output(hu[i], t, s);
      },
      std::move(init), horizon, limit_step(rate, horizon),
      [&](double t, const Eigen::VectorXd& s) {
        if (t < record_from) return;
        times.push_back(t);
        for (int i = 0; i < n; ++i) series[i].push_back(s(z0 + i));
      });

  Eigen::VectorXd settled(n);
  for (int i = 0; i < n; ++i) settled(i) = tail_settle(times, series[i], horizon, tol).value;
  return settled;
}

}  // namespace cpl
