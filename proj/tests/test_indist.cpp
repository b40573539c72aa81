#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "cpl/admissibility.hpp"
#include "cpl/errors.hpp"
#include "cpl/indist.hpp"
#include "doctest.h"
#include "helpers.hpp"

namespace {

using cpltest::benchmark_scenario;
using cpltest::quiet_five_scenario;

// Largest gap between a constructed signal and its expected closed form over
// a fixed probe grid.
double eval_gap(const cpl::SignalPtr& actual, const std::function<double(double)>& expected) {
  double worst = 0.0;
  for (double t : {0.0, 0.3, 0.5, 1.0, 2.0, 4.0})
    worst = std::max(worst, std::abs(actual->eval(t) - expected(t)));
  return worst;
}

// Randomized strongly connected weight-balanced scenario with admissible
// signals: common output offset 0.4, per-agent pulse integrals that sum to
// zero. Seed 1 gives agent 1 an island whose v2 and v3 classes are both
// nonempty, which the island construction test requires.
cpl::Scenario random_admissible_scenario() {
  std::mt19937 rng(1);
  cpl::Scenario s;
  s.graph = cpltest::random_balanced_graph(rng, 5, 3);
  std::uniform_real_distribution<double> xdist(-3.0, 4.0);
  std::uniform_real_distribution<double> udist(-1.0, 1.0);
  s.x0.resize(5);
  for (int i = 0; i < 5; ++i) s.x0(i) = xdist(rng);
  Eigen::VectorXd pulses(5), lows(5);
  for (int i = 0; i < 5; ++i) pulses(i) = udist(rng);
  for (int i = 0; i < 5; ++i) lows(i) = udist(rng);
  pulses.array() -= pulses.mean();
  const Eigen::VectorXd d = s.graph.out_degrees();
  const double alpha = 0.4;
  for (int i = 0; i < 5; ++i) {
    // Keep each agent's perturbation integral at pulses(i) despite the low
    // pass tail, and compensate the constant offset so the sum stays finite.
    const double amp = pulses(i) - d(i) * lows(i) / 2.0;
    s.agents.push_back({cpl::make_sum({cpl::make_constant(-alpha * d(i)),
                                       cpl::make_expdecay(amp, 1.0)}),
                        cpl::make_sum({cpl::make_constant(alpha),
                                       cpl::make_expdecay(lows(i), 2.0)})});
  }
  s.horizon = 5.0;
  s.step = 1e-3;
  return s;
}

double observable_distance(const cpl::AlternativePair& pair) {
  const cpl::Trajectory tr = cpl::simulate(pair.original);
  const cpl::Trajectory tr2 = cpl::simulate(pair.alternative);
  return cpl::output_distance(tr, tr2, pair.observable);
}

}  // namespace

TEST_CASE("island construction reproduces the published alternative") {
  const cpl::Scenario s = benchmark_scenario();
  Eigen::VectorXd delta(1);
  delta << 1.0;
  const cpl::AlternativePair pair = cpl::island_alternative(s, 1, {1, 2, 3}, delta);

  Eigen::VectorXd expected(5);
  expected << 3.0, 1.0, 6.0, -3.0, -1.0;
  CHECK(pair.alternative.x0 == expected);
  CHECK(pair.alternative.x0.sum() == s.x0.sum());
  CHECK(pair.observable == std::vector<int>{1, 2, 4, 5});
  CHECK(pair.construction == cpl::ConstructionKind::island);
  CHECK(pair.parameters.at("delta_x3_3") == 1.0);

  // Agent 2 masks the change: its state perturbation loses e^(-t) and its
  // output perturbation gains e^(-t); everyone else is untouched.
  const cpl::SignalPtr f2 = s.agents[1].f;
  const cpl::SignalPtr g2 = s.agents[1].g;
  CHECK(eval_gap(pair.alternative.agents[1].f,
                 [&](double t) { return f2->eval(t) - std::exp(-t); }) <= 1e-12);
  CHECK(eval_gap(pair.alternative.agents[1].g,
                 [&](double t) { return g2->eval(t) + std::exp(-t); }) <= 1e-12);
  CHECK(pair.alternative.agents[2].f == s.agents[2].f);
  CHECK(pair.alternative.agents[2].g == s.agents[2].g);
  CHECK(pair.alternative.agents[0].f == s.agents[0].f);

  SUBCASE("negative offset keeps the sum") {
    Eigen::VectorXd down(1);
    down << -2.0;
    const cpl::AlternativePair other = cpl::island_alternative(s, 1, {1, 2, 3}, down);
    Eigen::VectorXd shifted(5);
    shifted << 3.0, 4.0, 3.0, -3.0, -1.0;
    CHECK(other.alternative.x0 == shifted);
    CHECK(other.alternative.x0.sum() == 6.0);
  }

  SUBCASE("zero offset is the identity") {
    const cpl::Scenario quiet = quiet_five_scenario(2.0, 1e-3);
    const cpl::AlternativePair same =
        cpl::island_alternative(quiet, 1, {1, 2, 3}, Eigen::VectorXd::Zero(1));
    CHECK(same.alternative.x0 == quiet.x0);
    CHECK(observable_distance(same) == 0.0);
  }
}

TEST_CASE("published pair leaves observable outputs unchanged") {
  const cpl::Scenario s = benchmark_scenario();
  Eigen::VectorXd delta(1);
  delta << 1.0;
  const cpl::AlternativePair pair = cpl::island_alternative(s, 1, {1, 2, 3}, delta);
  const cpl::Trajectory tr = cpl::simulate(pair.original);
  const cpl::Trajectory tr2 = cpl::simulate(pair.alternative);

  CHECK(cpl::output_distance(tr, tr2, pair.observable) <= 1e-6);

  // The hidden agent's own output differs visibly, decaying from 1 at t=0.
  CHECK(cpl::output_distance(tr, tr2, {3}) >= 0.5);
  std::size_t early = 0;
  while (tr.times[early] < 0.25) ++early;
  CHECK(std::abs(tr.y(static_cast<int>(early), 2) - tr2.y(static_cast<int>(early), 2)) > 0.1);

  // Both runs still settle on the true average of the original references.
  for (int i = 0; i < 5; ++i) {
    CHECK(tr.x(tr.samples() - 1, i) == doctest::Approx(1.2).epsilon(1e-2));
    CHECK(tr2.x(tr2.samples() - 1, i) == doctest::Approx(1.2).epsilon(1e-2));
  }
}

TEST_CASE("scalar construction matches the published island case") {
  const cpl::Scenario s = benchmark_scenario();
  const cpl::AlternativePair pair = cpl::external_scalar_alternative(s, 2, 3, 1.0);
  Eigen::VectorXd expected(5);
  expected << 3.0, 1.0, 6.0, -3.0, -1.0;
  CHECK(pair.alternative.x0 == expected);
  CHECK(pair.observable == std::vector<int>{1, 2, 4, 5});
  CHECK(pair.construction == cpl::ConstructionKind::external_scalar);

  const cpl::SignalPtr f2 = s.agents[1].f;
  const cpl::SignalPtr g2 = s.agents[1].g;
  SUBCASE("fractional offset scales the compensation") {
    const cpl::AlternativePair half = cpl::external_scalar_alternative(s, 2, 3, 0.5);
    CHECK(half.alternative.x0(1) == 1.5);
    CHECK(half.alternative.x0(2) == 5.5);
    CHECK(eval_gap(half.alternative.agents[1].f,
                   [&](double t) { return f2->eval(t) - 0.5 * std::exp(-t); }) <= 1e-12);
    CHECK(eval_gap(half.alternative.agents[1].g,
                   [&](double t) { return g2->eval(t) + 0.5 * std::exp(-t); }) <= 1e-12);
  }
  SUBCASE("zero offset is the identity") {
    const cpl::Scenario quiet = quiet_five_scenario(2.0, 1e-3);
    const cpl::AlternativePair same = cpl::external_scalar_alternative(quiet, 2, 3, 0.0);
    CHECK(same.alternative.x0 == quiet.x0);
    CHECK(observable_distance(same) == 0.0);
  }
  SUBCASE("hidden agent must be an out-neighbour") {
    CHECK_THROWS_WITH_AS(cpl::external_scalar_alternative(s, 2, 4, 1.0),
                         doctest::Contains("not an out-neighbour"), cpl::input_error);
    CHECK_THROWS_AS(cpl::external_scalar_alternative(s, 2, 9, 1.0), cpl::input_error);
    CHECK_THROWS_AS(cpl::external_scalar_alternative(s, 0, 3, 1.0), cpl::input_error);
  }
}

TEST_CASE("offset shift construction moves every reference invisibly") {
  const cpl::Scenario s = benchmark_scenario(5.0, 5e-4);
  const cpl::AlternativePair pair = cpl::alpha_shift_alternative(s, 1.0);
  Eigen::VectorXd expected(5);
  expected << 2.0, 1.0, 4.0, -4.0, -2.0;
  CHECK(pair.alternative.x0 == expected);
  CHECK(pair.observable == std::vector<int>{1, 2, 3, 4, 5});

  for (double a : {-1.0, 0.5, 1.0}) {
    const cpl::AlternativePair shifted = cpl::alpha_shift_alternative(s, a);
    CHECK(observable_distance(shifted) <= 1e-6);
  }

  // The alternative's output perturbations settle on the shifted offset.
  const cpl::LimitEstimate limit = cpl::alpha_limit(pair.alternative.agents[0].g);
  CHECK(limit.converged);
  CHECK(limit.value == doctest::Approx(1.0).epsilon(2e-3));

  const cpl::AlternativePair same = cpl::alpha_shift_alternative(quiet_five_scenario(2.0), 0.0);
  CHECK(observable_distance(same) == 0.0);
}

TEST_CASE("integral exchange construction trades references invisibly") {
  const cpl::Scenario s = benchmark_scenario(5.0, 5e-4);
  const cpl::AlternativePair pair = cpl::beta_exchange_alternative(s, 4, 5, 1.0, 3.0);
  Eigen::VectorXd expected(5);
  expected << 3.0, 2.0, 5.0, -4.0, 0.0;
  CHECK(pair.alternative.x0 == expected);
  CHECK(pair.alternative.x0.sum() == s.x0.sum());
  CHECK(pair.observable.size() == 5);

  for (double beta : {-2.0, 1.0}) {
    const cpl::AlternativePair traded = cpl::beta_exchange_alternative(s, 4, 5, beta, 3.0);
    CHECK(observable_distance(traded) <= 1e-6);
  }

  // The source agent's perturbation integral gains exactly the traded amount.
  const cpl::LimitEstimate moved =
      cpl::beta_limit(pair.alternative.agents[3].f, pair.alternative.agents[3].g, 2.0);
  CHECK(moved.converged);
  CHECK(moved.value == doctest::Approx(1.0).epsilon(2e-3));

  SUBCASE("guards") {
    CHECK_THROWS_WITH_AS(cpl::beta_exchange_alternative(s, 4, 5, 1.0, 2.0),
                         doctest::Contains("must exceed both out-degrees"), cpl::input_error);
    CHECK_THROWS_AS(cpl::beta_exchange_alternative(s, 4, 4, 1.0, 3.0), cpl::input_error);
    CHECK_THROWS_AS(cpl::beta_exchange_alternative(s, 0, 5, 1.0, 3.0), cpl::input_error);
  }
}

TEST_CASE("island construction preconditions") {
  const cpl::Scenario s = quiet_five_scenario(1.0);
  CHECK_THROWS_WITH_AS(cpl::island_alternative(s, 1, {1, 4, 5}, Eigen::VectorXd::Zero(0)),
                       doctest::Contains("v2 class is empty"), cpl::input_error);
  CHECK_THROWS_AS(cpl::island_alternative(s, 1, {1, 2, 4}, Eigen::VectorXd::Zero(1)),
                  cpl::input_error);
  CHECK_THROWS_WITH_AS(cpl::island_alternative(s, 1, {1, 2, 3}, Eigen::VectorXd::Zero(2)),
                       doctest::Contains("expected 1 reference offsets"), cpl::input_error);
}

TEST_CASE("every construction stays invisible on a randomized scenario") {
  const cpl::Scenario s = random_admissible_scenario();
  REQUIRE(s.graph.is_strongly_connected());
  REQUIRE(s.graph.is_weight_balanced());

  std::vector<int> usable_island;
  cpl::IslandClasses classes;
  for (const auto& island : s.graph.islands(1)) {
    classes = s.graph.partition_island(1, island);
    if (!classes.v2.empty() && !classes.v3.empty()) {
      usable_island = island;
      break;
    }
  }
  REQUIRE(!usable_island.empty());
  REQUIRE(classes.v3.size() == 2);

  SUBCASE("island") {
    for (double scale : {0.7, -1.0, 0.25}) {
      Eigen::VectorXd delta(2);
      delta << scale, -0.4 * scale;
      const cpl::AlternativePair pair = cpl::island_alternative(s, 1, usable_island, delta);
      CHECK(observable_distance(pair) <= 1e-6);
      CHECK(pair.alternative.x0.sum() == doctest::Approx(s.x0.sum()).epsilon(1e-12));
    }
  }
  SUBCASE("external scalar") {
    // Seed 1 wires 2 -> 3, so agent 2 can cover for agent 3.
    REQUIRE(s.graph.weight(2, 3) > 0.0);
    for (double delta : {1.0, -0.5, 0.25}) {
      const cpl::AlternativePair pair = cpl::external_scalar_alternative(s, 2, 3, delta);
      CHECK(observable_distance(pair) <= 1e-6);
    }
  }
  SUBCASE("offset shift") {
    for (double a : {-1.0, 0.5, 1.0}) {
      const cpl::AlternativePair pair = cpl::alpha_shift_alternative(s, a);
      CHECK(observable_distance(pair) <= 1e-6);
    }
  }
  SUBCASE("integral exchange") {
    const double rate = s.graph.out_degrees().maxCoeff() + 1.5;
    for (double beta : {1.0, -2.0, 0.5}) {
      const cpl::AlternativePair pair = cpl::beta_exchange_alternative(s, 2, 4, beta, rate);
      CHECK(observable_distance(pair) <= 1e-6);
      CHECK(pair.alternative.x0.sum() == doctest::Approx(s.x0.sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("alternatives remain admissible with the stated limit changes") {
  const cpl::Scenario s = random_admissible_scenario();
  const cpl::AdmissibilityReport base = cpl::network_admissibility(s.agents, s.graph);
  REQUIRE(base.admissible);
  REQUIRE(std::abs(base.alpha_estimates(0) - 0.4) <= 1e-3);

  SUBCASE("island and scalar constructions keep every limit") {
    std::vector<int> usable_island;
    for (const auto& island : s.graph.islands(1)) {
      const cpl::IslandClasses classes = s.graph.partition_island(1, island);
      if (!classes.v2.empty() && !classes.v3.empty()) {
        usable_island = island;
        break;
      }
    }
    REQUIRE(!usable_island.empty());
    Eigen::VectorXd delta(2);
    delta << 0.8, -0.3;
    for (const cpl::AlternativePair& pair :
         {cpl::island_alternative(s, 1, usable_island, delta),
          cpl::external_scalar_alternative(s, 2, 3, 0.9)}) {
      const cpl::AdmissibilityReport report =
          cpl::network_admissibility(pair.alternative.agents, s.graph);
      CHECK(report.admissible);
      for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(report.beta_estimates(i) - base.beta_estimates(i)) <= 2e-3);
        CHECK(std::abs(report.alpha_estimates(i) - 0.4) <= 2e-3);
      }
    }
  }
  SUBCASE("offset shift moves every output limit together") {
    const cpl::AlternativePair pair = cpl::alpha_shift_alternative(s, 0.7);
    const cpl::AdmissibilityReport report =
        cpl::network_admissibility(pair.alternative.agents, s.graph);
    CHECK(report.admissible);
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(report.alpha_estimates(i) - 1.1) <= 2e-3);
      CHECK(std::abs(report.beta_estimates(i) - base.beta_estimates(i)) <= 2e-3);
    }
  }
  SUBCASE("integral exchange trades exactly one pair of limits") {
    const double rate = s.graph.out_degrees().maxCoeff() + 1.5;
    const cpl::AlternativePair pair = cpl::beta_exchange_alternative(s, 2, 4, 1.5, rate);
    const cpl::AdmissibilityReport report =
        cpl::network_admissibility(pair.alternative.agents, s.graph);
    CHECK(report.admissible);
    CHECK(std::abs(report.beta_estimates(1) - (base.beta_estimates(1) + 1.5)) <= 2e-3);
    CHECK(std::abs(report.beta_estimates(3) - (base.beta_estimates(3) - 1.5)) <= 2e-3);
    CHECK(std::abs(report.sum_beta - base.sum_beta) <= 5e-3);
    for (int i = 0; i < 5; ++i)
      CHECK(std::abs(report.alpha_estimates(i) - 0.4) <= 2e-3);
  }
}

TEST_CASE("sum preserving pairs share their consensus value") {
  // Thirty units of horizon on the randomized scenario: the original and the
  // exchanged alternative settle on the same average.
  cpl::Scenario s = random_admissible_scenario();
  s.horizon = 30.0;
  const double rate = s.graph.out_degrees().maxCoeff() + 1.5;
  const cpl::AlternativePair pair = cpl::beta_exchange_alternative(s, 2, 4, 1.5, rate);
  const cpl::Trajectory tr = cpl::simulate(pair.original);
  const cpl::Trajectory tr2 = cpl::simulate(pair.alternative);
  const double final_original = tr.x(tr.samples() - 1, 0);
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(tr2.x(tr2.samples() - 1, i) - final_original) <= 1e-2);
}

TEST_CASE("output distance requires a shared grid") {
  const cpl::Scenario a = quiet_five_scenario(1.0, 1e-3);
  cpl::Scenario b = a;
  b.step = 2e-3;
  const cpl::Trajectory tr = cpl::simulate(a);
  const cpl::Trajectory tr2 = cpl::simulate(b);
  CHECK_THROWS_WITH_AS(cpl::output_distance(tr, tr2, {1}), doctest::Contains("sample grid"),
                       cpl::input_error);
  CHECK(cpl::output_distance(tr, tr, {1, 2, 3, 4, 5}) == 0.0);
  CHECK_THROWS_AS(cpl::output_distance(tr, tr, {6}), cpl::input_error);
}
