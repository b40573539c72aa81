#include "cpl/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "cpl/errors.hpp"
#include "cpl/integrate.hpp"

namespace cpl {

namespace {

constexpr long long kMaxStoredSamples = 100000;

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate_scenario(const Scenario& s, const std::vector<AuxBlock>& extra) {
  const int n = s.graph.size();
  if (n < 1) throw input_error("scenario graph must have at least one agent");
  if (s.x0.size() != n)
    throw input_error("scenario has " + std::to_string(s.x0.size()) +
                      " reference values for " + std::to_string(n) + " agents");
  if (static_cast<int>(s.agents.size()) != n)
    throw input_error("scenario has " + std::to_string(s.agents.size()) +
                      " signal pairs for " + std::to_string(n) + " agents");
  for (int i = 0; i < n; ++i) {
    if (!s.agents[i].f)
      throw input_error("agent " + std::to_string(i + 1) + " is missing its f signal");
    if (!s.agents[i].g)
      throw input_error("agent " + std::to_string(i + 1) + " is missing its g signal");
  }
  if (!(s.horizon > 0.0)) throw input_error("scenario horizon must be positive");
  if (!(s.step > 0.0)) throw input_error("scenario step must be positive");
  if (s.step > s.horizon) throw input_error("scenario step exceeds the horizon");
  if (!s.allow_unbalanced) {
    if (!s.graph.is_strongly_connected())
      throw input_error(
          "scenario graph is not strongly connected; consensus is not guaranteed "
          "(set allow_unbalanced to integrate anyway)");
    if (!s.graph.is_weight_balanced())
      throw input_error(
          "scenario graph is not weight-balanced; the conservation identity fails "
          "(set allow_unbalanced to integrate anyway)");
  }
  std::set<std::string> names{kBalanceAux};
  for (const auto& block : extra) {
    if (block.name.empty()) throw input_error("auxiliary block names must be non-empty");
    if (!names.insert(block.name).second)
      throw input_error("duplicate auxiliary block name: " + block.name);
    if (block.init.size() < 1)
      throw input_error("auxiliary block " + block.name + " has no state");
    if (!block.dynamics)
      throw input_error("auxiliary block " + block.name + " has no dynamics");
  }
}

}  // namespace

Trajectory simulate(const Scenario& s, const std::vector<AuxBlock>& extra) {
  validate_scenario(s, extra);
  const int n = s.graph.size();

  SignalBank bank;
  std::vector<int> f_handles(n), g_handles(n);
  for (int i = 0; i < n; ++i) {
    f_handles[i] = bank.add(s.agents[i].f);
    g_handles[i] = bank.add(s.agents[i].g);
  }
  bank.set_base(n);
  const int filter_size = bank.state_size();

  // Augmented layout: agent states, filter states, then the hidden balance
  // accumulator followed by the caller's auxiliary blocks.
  struct Placed {
    const AuxBlock* block;
    int offset;
  };
  int cursor = n + filter_size;
  const int balance_offset = cursor++;
  std::vector<Placed> placed;
  placed.reserve(extra.size());
  for (const auto& block : extra) {
    placed.push_back({&block, cursor});
    cursor += static_cast<int>(block.init.size());
  }
  const int aug_size = cursor;

  Trajectory tr;
  const Eigen::VectorXd d_out = s.graph.out_degrees();
  const double rate = std::max(bank.rate_bound(s.horizon), d_out.size() ? d_out.maxCoeff() : 0.0);
  double step_used = s.step;
  if (rate > 0.0) step_used = std::min(step_used, 0.1 / rate);
  if (step_used < s.step) {
    tr.warnings.push_back("step clamped from " + format_full(s.step) + " to " +
                          format_full(step_used) + " to resolve dynamics with rate " +
                          format_full(rate));
  }
  tr.step_used = step_used;

  Eigen::VectorXd aug = Eigen::VectorXd::Zero(aug_size);
  aug.head(n) = s.x0;
  if (filter_size > 0) aug.segment(n, filter_size) = bank.initial_state();
  for (const auto& p : placed) aug.segment(p.offset, p.block->init.size()) = p.block->init;

  const Eigen::MatrixXd laplacian = s.graph.laplacian();
  const Eigen::MatrixXd weights = s.graph.weights();

  Eigen::VectorXd f_vals(n), g_vals(n);
  const auto deriv = [&](double t, const Eigen::VectorXd& state, Eigen::VectorXd& out) {
    for (int i = 0; i < n; ++i) {
      f_vals(i) = bank.output(f_handles[i], t, state);
      g_vals(i) = bank.output(g_handles[i], t, state);
    }
    out.head(n) = -laplacian * state.head(n) + f_vals + weights * g_vals;
    bank.derivative(state, out);
    out(balance_offset) = f_vals.sum() + d_out.dot(g_vals);
    if (!placed.empty()) {
      const SimView view(t, state, bank, f_handles, g_handles);
      for (const auto& p : placed) {
        const auto size = p.block->init.size();
        p.block->dynamics(view, state.segment(p.offset, size), out.segment(p.offset, size));
      }
    }
  };

  // Sample bookkeeping: rk4_drive reports the initial state and one state
  // per step, so the last report index is known up front and the stride can
  // preallocate exact row counts. The final time is always stored.
  const auto full = static_cast<long long>(s.horizon / step_used);
  const bool partial = static_cast<double>(full) * step_used < s.horizon;
  const long long last_idx = full + (partial ? 1 : 0);
  const long long stride = (last_idx + kMaxStoredSamples) / kMaxStoredSamples;
  const long long rows = last_idx / stride + 1 + (last_idx % stride != 0 ? 1 : 0);

  tr.times.reserve(static_cast<std::size_t>(rows));
  tr.x.resize(rows, n);
  tr.y.resize(rows, n);
  tr.aux[kBalanceAux].resize(rows, 1);
  for (const auto& p : placed) tr.aux[p.block->name].resize(rows, p.block->init.size());

  long long idx = 0;
  long long row = 0;
  const auto sample = [&](double t, const Eigen::VectorXd& state) {
    if (idx % stride == 0 || idx == last_idx) {
      tr.times.push_back(t);
      for (int i = 0; i < n; ++i) {
        tr.x(row, i) = state(i);
        tr.y(row, i) = state(i) + bank.output(g_handles[i], t, state);
      }
      tr.aux[kBalanceAux](row, 0) = state(balance_offset);
      for (const auto& p : placed)
        tr.aux[p.block->name].row(row) = state.segment(p.offset, p.block->init.size());
      ++row;
    }
    ++idx;
  };

  rk4_drive(deriv, aug, s.horizon, step_used, sample);
  if (row != rows) throw numeric_error("sample bookkeeping mismatch in simulate");
  return tr;
}

double conservation_residual(const Trajectory& tr, const Scenario& s) {
  if (tr.samples() == 0 || tr.x.cols() != s.graph.size())
    throw input_error("trajectory does not match the scenario");
  const auto it = tr.aux.find(kBalanceAux);
  if (it == tr.aux.end())
    throw input_error("trajectory does not carry the balance accumulator");
  const double sum0 = tr.x.row(0).sum();
  double worst = 0.0;
  for (int k = 0; k < tr.samples(); ++k)
    worst = std::max(worst, std::abs(tr.x.row(k).sum() - sum0 - it->second(k, 0)));
  return worst;
}

Eigen::VectorXd consensus_error(const Trajectory& tr) {
  if (tr.samples() == 0) throw input_error("trajectory is empty");
  const double target = tr.x.row(0).mean();
  return (tr.x.row(tr.samples() - 1).array() - target).abs();
}

std::string trajectory_csv(const Trajectory& tr) {
  if (tr.samples() == 0) throw input_error("trajectory is empty");
  const int n = static_cast<int>(tr.x.cols());
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (int i = 1; i <= n; ++i) out += ",y" + std::to_string(i);
  std::vector<const std::pair<const std::string, Eigen::MatrixXd>*> visible;
  for (const auto& entry : tr.aux) {
    if (entry.first.empty() || entry.first[0] == '.') continue;
    visible.push_back(&entry);
    if (entry.second.cols() == 1) {
      out += "," + entry.first;
    } else {
      for (int c = 1; c <= entry.second.cols(); ++c)
        out += "," + entry.first + "_" + std::to_string(c);
    }
  }
  out += "\n";
  for (int k = 0; k < tr.samples(); ++k) {
    out += format_full(tr.times[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n; ++i) out += "," + format_full(tr.x(k, i));
    for (int i = 0; i < n; ++i) out += "," + format_full(tr.y(k, i));
    for (const auto* entry : visible)
      for (int c = 0; c < entry->second.cols(); ++c) out += "," + format_full(entry->second(k, c));
    out += "\n";
  }
  return out;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw input_error("cannot write trajectory CSV to " + path);
  file << trajectory_csv(tr);
  if (!file) throw input_error("failed while writing trajectory CSV to " + path);
}

}  // namespace cpl
