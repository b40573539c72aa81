#pragma once

// Scalar perturbation signals: closed-form primitives, an autonomous linear
// filter, and sum/scale combinators. Signals serialize to strict JSON. For
// integration alongside other dynamics, SignalBank hands every distinct
// filter node a slice of a shared state vector so filter outputs stay
// consistent at intermediate Runge-Kutta stages.

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace cpl {

class FilterSignal;

// Read-only view of the filter slices inside an externally integrated state
// vector, keyed by filter node identity.
class FilterContext {
 public:
  FilterContext(const std::unordered_map<const FilterSignal*, int>& offsets,
                const Eigen::VectorXd& state, int base = 0)
      : offsets_(offsets), state_(state), base_(base) {}
  Eigen::Ref<const Eigen::VectorXd> slice(const FilterSignal& filter) const;

 private:
  const std::unordered_map<const FilterSignal*, int>& offsets_;
  const Eigen::VectorXd& state_;
  int base_;
};

class Signal {
 public:
  virtual ~Signal() = default;

  // Value at time t >= 0 as a pure function of t; filters use their matrix
  // exponential solution.
  virtual double eval(double t) const = 0;

  // Upper bound on the fastest rate or angular frequency (per unit time)
  // active on [0, horizon]; zero for constants. Drives step-size clamping.
  virtual double rate_bound(double horizon) const;

  virtual nlohmann::json to_json() const = 0;

  // Co-integration hooks: enumerate the filter nodes of the tree and
  // evaluate against externally integrated filter states.
  virtual void visit_filters(const std::function<void(const FilterSignal&)>& fn) const;
  virtual double output(double t, const FilterContext& ctx) const;
};

using SignalPtr = std::shared_ptr<const Signal>;

class ConstantSignal final : public Signal {
 public:
  explicit ConstantSignal(double value) : value_(value) {}
  double eval(double t) const override;
  nlohmann::json to_json() const override;
  double value() const { return value_; }

 private:
  double value_;
};

// amp * exp(-rate * t); rate must be positive so the signal vanishes.
class ExpDecaySignal final : public Signal {
 public:
  ExpDecaySignal(double amp, double rate);
  double eval(double t) const override;
  double rate_bound(double horizon) const override;
  nlohmann::json to_json() const override;
  double amp() const { return amp_; }
  double rate() const { return rate_; }

 private:
  double amp_;
  double rate_;
};

// amp * sin(phase + quad * t^2 + lin * t).
class ChirpSignal final : public Signal {
 public:
  ChirpSignal(double amp, double phase, double quad, double lin);
  double eval(double t) const override;
  double rate_bound(double horizon) const override;
  nlohmann::json to_json() const override;
  double amp() const { return amp_; }
  double phase() const { return phase_; }
  double quad() const { return quad_; }
  double lin() const { return lin_; }

 private:
  double amp_;
  double phase_;
  double quad_;
  double lin_;
};

// output_row * s(t) with ds/dt = state_matrix * s, s(0) = initial_state.
// Construction requires state_matrix + state_matrix^T negative semidefinite,
// which certifies bounded trajectories without an eigensolver.
class FilterSignal final : public Signal {
 public:
  FilterSignal(Eigen::MatrixXd state_matrix, Eigen::RowVectorXd output_row,
               Eigen::VectorXd initial_state);
  double eval(double t) const override;
  double rate_bound(double horizon) const override;
  nlohmann::json to_json() const override;
  void visit_filters(const std::function<void(const FilterSignal&)>& fn) const override;
  double output(double t, const FilterContext& ctx) const override;

  int size() const { return static_cast<int>(initial_state_.size()); }
  const Eigen::MatrixXd& state_matrix() const { return state_matrix_; }
  const Eigen::RowVectorXd& output_row() const { return output_row_; }
  const Eigen::VectorXd& initial_state() const { return initial_state_; }

 private:
  Eigen::MatrixXd state_matrix_;
  Eigen::RowVectorXd output_row_;
  Eigen::VectorXd initial_state_;
};

class SumSignal final : public Signal {
 public:
  explicit SumSignal(std::vector<SignalPtr> terms);
  double eval(double t) const override;
  double rate_bound(double horizon) const override;
  nlohmann::json to_json() const override;
  void visit_filters(const std::function<void(const FilterSignal&)>& fn) const override;
  double output(double t, const FilterContext& ctx) const override;
  const std::vector<SignalPtr>& terms() const { return terms_; }

 private:
  std::vector<SignalPtr> terms_;
};

class ScaledSignal final : public Signal {
 public:
  ScaledSignal(double factor, SignalPtr inner);
  double eval(double t) const override;
  double rate_bound(double horizon) const override;
  nlohmann::json to_json() const override;
  void visit_filters(const std::function<void(const FilterSignal&)>& fn) const override;
  double output(double t, const FilterContext& ctx) const override;
  double factor() const { return factor_; }
  const SignalPtr& inner() const { return inner_; }

 private:
  double factor_;
  SignalPtr inner_;
};

SignalPtr make_constant(double value);
SignalPtr make_zero();
SignalPtr make_expdecay(double amp, double rate);
SignalPtr make_chirp(double amp, double phase, double quad, double lin);
SignalPtr make_filter(Eigen::MatrixXd state_matrix, Eigen::RowVectorXd output_row,
                      Eigen::VectorXd initial_state);
SignalPtr make_sum(std::vector<SignalPtr> terms);
SignalPtr make_scaled(double factor, SignalPtr inner);

// Strict JSON codec: unknown or missing fields are rejected. Kinds:
// constant, expdecay, chirp, filter, sum, scale.
SignalPtr signal_from_json(const nlohmann::json& j);
nlohmann::json signal_to_json(const Signal& s);

// One agent's perturbation pair: f acts on the state derivative, g on the
// transmitted output.
struct AgentSignals {
  SignalPtr f;
  SignalPtr g;
};

// Registry that flattens the filter nodes of many signal trees into one
// state vector. A filter node shared by several trees gets a single slice.
class SignalBank {
 public:
  // Returns the handle to use with output(). Null signals are rejected.
  int add(const SignalPtr& s);

  int state_size() const { return total_; }
  // Anchors the filter block at `base` inside a larger augmented vector;
  // state arguments to derivative() and output() must then be that full
  // vector. initial_state() always returns just the filter block.
  void set_base(int base) { base_ = base; }
  int base() const { return base_; }

  Eigen::VectorXd initial_state() const;
  // Writes the filter-block derivative into out[base, base+state_size).
  void derivative(const Eigen::VectorXd& state, Eigen::Ref<Eigen::VectorXd> out) const;
  double output(int handle, double t, const Eigen::VectorXd& state) const;
  double rate_bound(double horizon) const;

 private:
  std::vector<SignalPtr> signals_;
  std::vector<const FilterSignal*> filters_;
  std::unordered_map<const FilterSignal*, int> offsets_;
  int total_ = 0;
  int base_ = 0;
};

}  // namespace cpl
