#include "cpl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/MatrixFunctions>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

void check_time(double t) {
  if (t < 0.0) throw input_error("signals are defined for t >= 0 only");
}

// Strict field access: the object must carry exactly the listed keys.
void require_exact_keys(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw input_error("signal JSON node must be an object");
  for (const char* key : keys)
    if (!j.contains(key))
      throw input_error(std::string("signal JSON is missing field '") + key + "'");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(),
                     [&item](const char* key) { return item.key() == key; }))
      throw input_error("signal JSON has unknown field '" + item.key() + "'");
  }
}

double get_number(const nlohmann::json& j, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_number()) throw input_error(std::string("signal field '") + key + "' must be a number");
  return v.get<double>();
}

Eigen::VectorXd get_vector(const nlohmann::json& j, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_array()) throw input_error(std::string("signal field '") + key + "' must be an array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw input_error(std::string("signal field '") + key + "' must contain numbers");
    out(static_cast<int>(i)) = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd get_matrix(const nlohmann::json& j, const char* key) {
  const nlohmann::json& v = j.at(key);
  if (!v.is_array() || v.empty())
    throw input_error(std::string("signal field '") + key + "' must be a nonempty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(v.size(), cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (!v[r].is_array() || v[r].size() != cols)
      throw input_error(std::string("signal field '") + key + "' must be rectangular");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number())
        throw input_error(std::string("signal field '") + key + "' must contain numbers");
      out(static_cast<int>(r), static_cast<int>(c)) = v[r][c].get<double>();
    }
  }
  return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

Eigen::Ref<const Eigen::VectorXd> FilterContext::slice(const FilterSignal& filter) const {
  const auto it = offsets_.find(&filter);
  if (it == offsets_.end())
    throw std::logic_error("filter state requested for an unregistered signal");
  return state_.segment(base_ + it->second, filter.size());
}

double Signal::rate_bound(double) const { return 0.0; }

void Signal::visit_filters(const std::function<void(const FilterSignal&)>&) const {}

double Signal::output(double t, const FilterContext&) const { return eval(t); }

double ConstantSignal::eval(double t) const {
  check_time(t);
  return value_;
}

nlohmann::json ConstantSignal::to_json() const {
  return {{"kind", "constant"}, {"value", value_}};
}

ExpDecaySignal::ExpDecaySignal(double amp, double rate) : amp_(amp), rate_(rate) {
  if (!(rate > 0.0)) throw input_error("expdecay rate must be positive");
}

double ExpDecaySignal::eval(double t) const {
  check_time(t);
  return amp_ * std::exp(-rate_ * t);
}

double ExpDecaySignal::rate_bound(double) const { return amp_ == 0.0 ? 0.0 : rate_; }

nlohmann::json ExpDecaySignal::to_json() const {
  return {{"kind", "expdecay"}, {"amp", amp_}, {"rate", rate_}};
}

ChirpSignal::ChirpSignal(double amp, double phase, double quad, double lin)
    : amp_(amp), phase_(phase), quad_(quad), lin_(lin) {}

double ChirpSignal::eval(double t) const {
  check_time(t);
  return amp_ * std::sin(phase_ + quad_ * t * t + lin_ * t);
}

double ChirpSignal::rate_bound(double horizon) const {
  if (amp_ == 0.0) return 0.0;
  return std::max(std::abs(lin_), std::abs(2.0 * quad_ * horizon + lin_));
}

nlohmann::json ChirpSignal::to_json() const {
  return {{"kind", "chirp"}, {"amp", amp_}, {"phase", phase_}, {"quad", quad_}, {"lin", lin_}};
}

FilterSignal::FilterSignal(Eigen::MatrixXd state_matrix, Eigen::RowVectorXd output_row,
                           Eigen::VectorXd initial_state)
    : state_matrix_(std::move(state_matrix)),
      output_row_(std::move(output_row)),
      initial_state_(std::move(initial_state)) {
  const int n = static_cast<int>(initial_state_.size());
  if (n == 0) throw input_error("filter state must be nonempty");
  if (state_matrix_.rows() != n || state_matrix_.cols() != n || output_row_.size() != n)
    throw input_error("filter state matrix, output row, and initial state sizes disagree");
  // Bounded-trajectory certificate: M + M^T negative semidefinite, verified
  // by a Cholesky attempt on its negation nudged into definiteness.
  const Eigen::MatrixXd gram =
      -(state_matrix_ + state_matrix_.transpose()) + 1e-12 * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw input_error("filter state matrix fails the boundedness certificate");
}

double FilterSignal::eval(double t) const {
  check_time(t);
  return output_row_ * (state_matrix_ * t).exp() * initial_state_;
}

double FilterSignal::rate_bound(double) const {
  // Frobenius norm bounds every eigenvalue magnitude.
  return state_matrix_.norm();
}

nlohmann::json FilterSignal::to_json() const {
  return {{"kind", "filter"},
          {"state_matrix", matrix_to_json(state_matrix_)},
          {"output_row", vector_to_json(output_row_.transpose())},
          {"initial_state", vector_to_json(initial_state_)}};
}

void FilterSignal::visit_filters(const std::function<void(const FilterSignal&)>& fn) const {
  fn(*this);
}

double FilterSignal::output(double, const FilterContext& ctx) const {
  return output_row_ * ctx.slice(*this);
}

SumSignal::SumSignal(std::vector<SignalPtr> terms) : terms_(std::move(terms)) {
  for (const SignalPtr& term : terms_)
    if (!term) throw input_error("sum signal has a null term");
}

double SumSignal::eval(double t) const {
  check_time(t);
  double total = 0.0;
  for (const SignalPtr& term : terms_) total += term->eval(t);
  return total;
}

double SumSignal::rate_bound(double horizon) const {
  double bound = 0.0;
  for (const SignalPtr& term : terms_) bound = std::max(bound, term->rate_bound(horizon));
  return bound;
}

nlohmann::json SumSignal::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const SignalPtr& term : terms_) terms.push_back(term->to_json());
  return {{"kind", "sum"}, {"terms", std::move(terms)}};
}

void SumSignal::visit_filters(const std::function<void(const FilterSignal&)>& fn) const {
  for (const SignalPtr& term : terms_) term->visit_filters(fn);
}

double SumSignal::output(double t, const FilterContext& ctx) const {
  double total = 0.0;
  for (const SignalPtr& term : terms_) total += term->output(t, ctx);
  return total;
}

ScaledSignal::ScaledSignal(double factor, SignalPtr inner)
    : factor_(factor), inner_(std::move(inner)) {
  if (!inner_) throw input_error("scaled signal has a null inner signal");
}

double ScaledSignal::eval(double t) const { return factor_ * inner_->eval(t); }

double ScaledSignal::rate_bound(double horizon) const {
  return factor_ == 0.0 ? 0.0 : inner_->rate_bound(horizon);
}

nlohmann::json ScaledSignal::to_json() const {
  return {{"kind", "scale"}, {"factor", factor_}, {"signal", inner_->to_json()}};
}

void ScaledSignal::visit_filters(const std::function<void(const FilterSignal&)>& fn) const {
  inner_->visit_filters(fn);
}

double ScaledSignal::output(double t, const FilterContext& ctx) const {
  return factor_ * inner_->output(t, ctx);
}

SignalPtr make_constant(double value) { return std::make_shared<ConstantSignal>(value); }

SignalPtr make_zero() { return make_constant(0.0); }

SignalPtr make_expdecay(double amp, double rate) {
  return std::make_shared<ExpDecaySignal>(amp, rate);
}

SignalPtr make_chirp(double amp, double phase, double quad, double lin) {
  return std::make_shared<ChirpSignal>(amp, phase, quad, lin);
}

SignalPtr make_filter(Eigen::MatrixXd state_matrix, Eigen::RowVectorXd output_row,
                      Eigen::VectorXd initial_state) {
  return std::make_shared<FilterSignal>(std::move(state_matrix), std::move(output_row),
                                        std::move(initial_state));
}

SignalPtr make_sum(std::vector<SignalPtr> terms) {
  return std::make_shared<SumSignal>(std::move(terms));
}

SignalPtr make_scaled(double factor, SignalPtr inner) {
  return std::make_shared<ScaledSignal>(factor, std::move(inner));
}

SignalPtr signal_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw input_error("signal JSON node needs a string 'kind' field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    require_exact_keys(j, {"kind", "value"});
    return make_constant(get_number(j, "value"));
  }
  if (kind == "expdecay") {
    require_exact_keys(j, {"kind", "amp", "rate"});
    return make_expdecay(get_number(j, "amp"), get_number(j, "rate"));
  }
  if (kind == "chirp") {
    require_exact_keys(j, {"kind", "amp", "phase", "quad", "lin"});
    return make_chirp(get_number(j, "amp"), get_number(j, "phase"), get_number(j, "quad"),
                      get_number(j, "lin"));
  }
  if (kind == "filter") {
    require_exact_keys(j, {"kind", "state_matrix", "output_row", "initial_state"});
    return make_filter(get_matrix(j, "state_matrix"),
                       get_vector(j, "output_row").transpose(),
                       get_vector(j, "initial_state"));
  }
  if (kind == "sum") {
    require_exact_keys(j, {"kind", "terms"});
    const nlohmann::json& terms = j.at("terms");
    if (!terms.is_array()) throw input_error("signal field 'terms' must be an array");
    std::vector<SignalPtr> parsed;
    parsed.reserve(terms.size());
    for (const nlohmann::json& term : terms) parsed.push_back(signal_from_json(term));
    return make_sum(std::move(parsed));
  }
  if (kind == "scale") {
    require_exact_keys(j, {"kind", "factor", "signal"});
    return make_scaled(get_number(j, "factor"), signal_from_json(j.at("signal")));
  }
  throw input_error("unknown signal kind '" + kind + "'");
}

nlohmann::json signal_to_json(const Signal& s) { return s.to_json(); }

int SignalBank::add(const SignalPtr& s) {
  if (!s) throw input_error("cannot register a null signal");
  const int handle = static_cast<int>(signals_.size());
  signals_.push_back(s);
  s->visit_filters([this](const FilterSignal& filter) {
    if (offsets_.emplace(&filter, total_).second) {
      filters_.push_back(&filter);
      total_ += filter.size();
    }
  });
  return handle;
}

Eigen::VectorXd SignalBank::initial_state() const {
  Eigen::VectorXd state(total_);
  for (const FilterSignal* filter : filters_)
    state.segment(offsets_.at(filter), filter->size()) = filter->initial_state();
  return state;
}

void SignalBank::derivative(const Eigen::VectorXd& state, Eigen::Ref<Eigen::VectorXd> out) const {
  for (const FilterSignal* filter : filters_) {
    const int off = base_ + offsets_.at(filter);
    out.segment(off, filter->size()).noalias() =
        filter->state_matrix() * state.segment(off, filter->size());
  }
}

double SignalBank::output(int handle, double t, const Eigen::VectorXd& state) const {
  const FilterContext ctx(offsets_, state, base_);
  return signals_.at(static_cast<std::size_t>(handle))->output(t, ctx);
}

double SignalBank::rate_bound(double horizon) const {
  double bound = 0.0;
  for (const SignalPtr& s : signals_) bound = std::max(bound, s->rate_bound(horizon));
  return bound;
}

}  // namespace cpl
