#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "cpl/errors.hpp"
#include "cpl/sim.hpp"
#include "doctest.h"
#include "helpers.hpp"

namespace {

using cpltest::benchmark_scenario;
using cpltest::quiet_five_scenario;
using cpltest::reference_x0;

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("quiet benchmark settles on the reference mean") {
  const cpl::Scenario s = quiet_five_scenario();
  const cpl::Trajectory tr = cpl::simulate(s);

  CHECK(tr.step_used == 1e-3);
  CHECK(tr.warnings.empty());
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(20.0).epsilon(1e-12));

  const double mean = reference_x0().mean();
  CHECK(mean == 1.2);
  for (int i = 0; i < 5; ++i) CHECK(tr.x(tr.samples() - 1, i) == doctest::Approx(mean).epsilon(1e-3));
  CHECK(cpl::consensus_error(tr).maxCoeff() <= 1e-3);
  CHECK(cpl::conservation_residual(tr, s) <= 1e-9);
}

TEST_CASE("perturbed benchmark still reaches the reference mean") {
  const cpl::Scenario s = benchmark_scenario();
  const cpl::Trajectory tr = cpl::simulate(s);

  CHECK(tr.step_used == 1e-4);
  CHECK(tr.warnings.empty());
  CHECK(tr.samples() >= 70000);
  CHECK(tr.samples() <= 100001);
  CHECK(tr.times.back() == doctest::Approx(30.0).epsilon(1e-12));

  for (int i = 0; i < 5; ++i) CHECK(tr.x(tr.samples() - 1, i) == doctest::Approx(1.2).epsilon(1e-2));
  CHECK(cpl::consensus_error(tr).maxCoeff() <= 1e-2);
  CHECK(cpl::conservation_residual(tr, s) <= 1e-6);

  // The transmitted output equals state plus output perturbation exactly at
  // every stored sample, not just up to integration error.
  double worst = 0.0;
  for (int k = 0; k < tr.samples(); ++k)
    for (int i = 0; i < 5; ++i)
      worst = std::max(worst,
                       std::abs(tr.y(k, i) - (tr.x(k, i) + s.agents[i].g->eval(tr.times[k]))));
  CHECK(worst == 0.0);
}

TEST_CASE("single agent without neighbours holds its reference") {
  cpl::Scenario s;
  s.graph = cpl::Digraph(1);
  s.x0 = Eigen::VectorXd::Constant(1, 5.0);
  s.agents.assign(1, {cpl::make_zero(), cpl::make_zero()});
  s.horizon = 2.0;
  s.step = 0.1;
  const cpl::Trajectory tr = cpl::simulate(s);
  for (int k = 0; k < tr.samples(); ++k) {
    CHECK(tr.x(k, 0) == 5.0);
    CHECK(tr.y(k, 0) == 5.0);
  }
  CHECK(cpl::consensus_error(tr)(0) == 0.0);
  CHECK(cpl::conservation_residual(tr, s) == 0.0);
}

TEST_CASE("matrix exponential cross-check on a fully linear scenario") {
  // f1 comes from an undamped rotor, g3 from a scalar decay filter, so the
  // closed system [x; rotor; decay] is linear time-invariant and its exact
  // solution is the matrix exponential applied to the stacked initial state.
  const double omega = 2.0;
  Eigen::MatrixXd rotor(2, 2);
  rotor << 0.0, omega, -omega, 0.0;
  Eigen::RowVectorXd rotor_row(2);
  rotor_row << 1.0, 0.0;
  Eigen::VectorXd rotor_init(2);
  rotor_init << 0.3, -0.4;

  Eigen::MatrixXd decay(1, 1);
  decay << -1.5;
  Eigen::RowVectorXd decay_row(1);
  decay_row << 2.0;
  Eigen::VectorXd decay_init(1);
  decay_init << 0.7;

  cpl::Scenario s = quiet_five_scenario(3.0, 1e-3);
  s.agents[0].f = cpl::make_filter(rotor, rotor_row, rotor_init);
  s.agents[2].g = cpl::make_filter(decay, decay_row, decay_init);
  const cpl::Trajectory tr = cpl::simulate(s);

  const Eigen::MatrixXd laplacian = s.graph.laplacian();
  const Eigen::MatrixXd weights = s.graph.weights();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(8, 8);
  big.topLeftCorner(5, 5) = -laplacian;
  big.block(0, 5, 5, 2) = Eigen::VectorXd::Unit(5, 0) * rotor_row;
  big.block(0, 7, 5, 1) = weights * (Eigen::VectorXd::Unit(5, 2) * decay_row);
  big.block(5, 5, 2, 2) = rotor;
  big(7, 7) = decay(0, 0);
  Eigen::VectorXd z0(8);
  z0 << reference_x0(), rotor_init, decay_init;

  for (int k : {0, tr.samples() / 3, 2 * tr.samples() / 3, tr.samples() - 1}) {
    const double t = tr.times[static_cast<std::size_t>(k)];
    const Eigen::VectorXd exact = (big * t).exp() * z0;
    for (int i = 0; i < 5; ++i) CHECK(tr.x(k, i) == doctest::Approx(exact(i)).epsilon(5e-9));
    const double g3 = decay_row.dot(exact.tail(1));
    CHECK(tr.y(k, 2) == doctest::Approx(exact(2) + g3).epsilon(5e-9));
  }
}

TEST_CASE("step halving shows fourth order convergence") {
  // Power-of-two steps divide the horizon exactly, so the three runs land on
  // the same endpoint and the Richardson ratio is clean.
  const double h = 1.0 / 64.0;
  auto final_state = [&](double step) {
    cpl::Scenario s = quiet_five_scenario(5.0, step);
    const cpl::Trajectory tr = cpl::simulate(s);
    return Eigen::VectorXd(tr.x.row(tr.samples() - 1));
  };
  const Eigen::VectorXd coarse = final_state(h);
  const Eigen::VectorXd medium = final_state(h / 2.0);
  const Eigen::VectorXd fine = final_state(h / 4.0);
  const double e1 = (coarse - medium).cwiseAbs().maxCoeff();
  const double e2 = (medium - fine).cwiseAbs().maxCoeff();
  CHECK(e2 > 1e-14);  // above rounding noise, so the ratio is meaningful
  CHECK(e1 / e2 >= 8.0);
  CHECK(e1 / e2 <= 32.0);
}

TEST_CASE("non-cancelling state perturbations shift the final value") {
  cpl::Scenario s = quiet_five_scenario(30.0, 1e-3);
  s.agents[0].f = cpl::make_expdecay(2.0, 1.0);  // integral 2, split over 5 agents
  const cpl::Trajectory tr = cpl::simulate(s);
  for (int i = 0; i < 5; ++i) CHECK(tr.x(tr.samples() - 1, i) == doctest::Approx(1.6).epsilon(1e-2));
  CHECK(cpl::conservation_residual(tr, s) <= 1e-6);
}

TEST_CASE("fast forcing clamps the step and records a warning") {
  cpl::Scenario s = benchmark_scenario(1.0, 1e-2);
  const cpl::Trajectory tr = cpl::simulate(s);
  // Fastest chirp instantaneous rate over [0, 1] is 2 * 5 * pi; the clamp
  // resolves it with ten steps per unit rate.
  const double expected = 0.1 / (10.0 * cpltest::kTestPi);
  CHECK(tr.step_used == doctest::Approx(expected).epsilon(1e-12));
  REQUIRE(tr.warnings.size() == 1);
  CHECK(tr.warnings[0].find("clamped from 0.01") != std::string::npos);
  CHECK(tr.times.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unbalanced or disconnected graphs need the explicit override") {
  cpl::Scenario s;
  s.graph = cpltest::unbalanced_triangle();
  s.x0 = Eigen::VectorXd::Zero(3);
  s.x0 << 1.0, 2.0, 3.0;
  s.agents.assign(3, {cpl::make_zero(), cpl::make_zero()});
  s.horizon = 30.0;
  s.step = 1e-3;
  CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("weight-balanced"), cpl::input_error);

  s.allow_unbalanced = true;
  const cpl::Trajectory tr = cpl::simulate(s);
  // The column sums of this Laplacian are nonzero, so the state sum drifts
  // away from the conserved value by an O(1) amount.
  CHECK(cpl::conservation_residual(tr, s) >= 1e-2);

  cpl::Scenario iso;
  iso.graph = cpl::Digraph(3);
  iso.graph.add_edge(1, 2, 1.0);
  iso.graph.add_edge(2, 1, 1.0);
  iso.x0 = s.x0;
  iso.agents = s.agents;
  CHECK_THROWS_WITH_AS(cpl::simulate(iso), doctest::Contains("strongly connected"),
                       cpl::input_error);
  iso.allow_unbalanced = true;
  const cpl::Trajectory tr2 = cpl::simulate(iso);
  CHECK(tr2.x(tr2.samples() - 1, 2) == 3.0);  // the isolated agent never moves
  CHECK(tr2.x(tr2.samples() - 1, 0) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("scenario validation rejects malformed inputs") {
  cpl::Scenario s = quiet_five_scenario();

  SUBCASE("reference vector length") {
    s.x0 = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("4 reference values"),
                         cpl::input_error);
  }
  SUBCASE("signal pair count") {
    s.agents.pop_back();
    CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("4 signal pairs"), cpl::input_error);
  }
  SUBCASE("missing signals") {
    s.agents[2].f = nullptr;
    CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("agent 3 is missing its f"),
                         cpl::input_error);
    s.agents[2].f = cpl::make_zero();
    s.agents[4].g = nullptr;
    CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("agent 5 is missing its g"),
                         cpl::input_error);
  }
  SUBCASE("time grid") {
    s.horizon = 0.0;
    CHECK_THROWS_AS(cpl::simulate(s), cpl::input_error);
    s.horizon = 10.0;
    s.step = 0.0;
    CHECK_THROWS_AS(cpl::simulate(s), cpl::input_error);
    s.step = 11.0;
    CHECK_THROWS_WITH_AS(cpl::simulate(s), doctest::Contains("exceeds the horizon"),
                         cpl::input_error);
  }
  SUBCASE("empty graph") {
    cpl::Scenario empty;
    empty.graph = cpl::Digraph(0);
    empty.x0 = Eigen::VectorXd::Zero(0);
    CHECK_THROWS_WITH_AS(cpl::simulate(empty), doctest::Contains("at least one agent"),
                         cpl::input_error);
  }
  SUBCASE("auxiliary block names and shapes") {
    const auto noop = [](const cpl::SimView&, const Eigen::Ref<const Eigen::VectorXd>&,
                         Eigen::Ref<Eigen::VectorXd> d) { d.setZero(); };
    cpl::AuxBlock a{"acc", Eigen::VectorXd::Zero(1), noop};
    cpl::AuxBlock dup{"acc", Eigen::VectorXd::Zero(1), noop};
    CHECK_THROWS_WITH_AS(cpl::simulate(s, {a, dup}), doctest::Contains("duplicate"),
                         cpl::input_error);
    cpl::AuxBlock unnamed{"", Eigen::VectorXd::Zero(1), noop};
    CHECK_THROWS_AS(cpl::simulate(s, {unnamed}), cpl::input_error);
    cpl::AuxBlock stateless{"probe", Eigen::VectorXd::Zero(0), noop};
    CHECK_THROWS_WITH_AS(cpl::simulate(s, {stateless}), doctest::Contains("no state"),
                         cpl::input_error);
    cpl::AuxBlock lifeless{"probe", Eigen::VectorXd::Zero(1), nullptr};
    CHECK_THROWS_WITH_AS(cpl::simulate(s, {lifeless}), doctest::Contains("no dynamics"),
                         cpl::input_error);
  }
}

TEST_CASE("auxiliary blocks co-integrate with the agent states") {
  cpl::Scenario s;
  s.graph = cpl::Digraph(1);
  s.x0 = Eigen::VectorXd::Constant(1, 5.0);
  s.agents.assign(1, {cpl::make_zero(), cpl::make_zero()});
  s.horizon = 2.0;
  s.step = 1e-3;

  cpl::AuxBlock ramp{"ramp", Eigen::VectorXd::Zero(1),
                     [](const cpl::SimView& view, const Eigen::Ref<const Eigen::VectorXd>&,
                        Eigen::Ref<Eigen::VectorXd> d) { d(0) = view.x(1); }};
  cpl::AuxBlock pair{"pair", Eigen::VectorXd::Zero(2),
                     [](const cpl::SimView& view, const Eigen::Ref<const Eigen::VectorXd>&,
                        Eigen::Ref<Eigen::VectorXd> d) {
                       d(0) = 1.0;
                       d(1) = 2.0 * view.time();
                     }};
  cpl::AuxBlock hidden{".probe", Eigen::VectorXd::Zero(1),
                       [](const cpl::SimView& view, const Eigen::Ref<const Eigen::VectorXd>&,
                          Eigen::Ref<Eigen::VectorXd> d) { d(0) = view.y(1); }};
  const cpl::Trajectory tr = cpl::simulate(s, {ramp, pair, hidden});

  REQUIRE(tr.aux.count("ramp") == 1);
  REQUIRE(tr.aux.count("pair") == 1);
  REQUIRE(tr.aux.count(".probe") == 1);
  REQUIRE(tr.aux.count(cpl::kBalanceAux) == 1);
  for (int k = 0; k < tr.samples(); ++k) {
    const double t = tr.times[static_cast<std::size_t>(k)];
    CHECK(tr.aux.at("ramp")(k, 0) == doctest::Approx(5.0 * t).epsilon(1e-12));
    CHECK(tr.aux.at("pair")(k, 0) == doctest::Approx(t).epsilon(1e-12));
    CHECK(tr.aux.at("pair")(k, 1) == doctest::Approx(t * t).epsilon(1e-12));
    CHECK(tr.aux.at(".probe")(k, 0) == doctest::Approx(5.0 * t).epsilon(1e-12));
  }

  const std::vector<std::string> lines = split_lines(cpl::trajectory_csv(tr));
  CHECK(lines[0] == "t,x1,y1,pair_1,pair_2,ramp");
}

TEST_CASE("trajectory CSV is exact and complete") {
  cpl::Scenario s;
  s.graph = cpl::Digraph(2);
  s.graph.add_edge(1, 2, 1.0);
  s.graph.add_edge(2, 1, 1.0);
  s.x0 = Eigen::VectorXd::Zero(2);
  s.x0 << 1.0, 3.0;
  s.agents.assign(2, {cpl::make_zero(), cpl::make_zero()});
  s.agents[1].g = cpl::make_expdecay(1.0, 1.0);
  s.horizon = 1.0;
  s.step = 0.0625;  // binary exact and below the rate clamp of 0.1
  const cpl::Trajectory tr = cpl::simulate(s);
  CHECK(tr.warnings.empty());
  REQUIRE(tr.samples() == 17);

  const std::string csv = cpl::trajectory_csv(tr);
  const std::vector<std::string> lines = split_lines(csv);
  REQUIRE(lines.size() == 18);
  CHECK(lines[0] == "t,x1,x2,y1,y2");

  // Every value round-trips bit for bit through the printed form.
  for (int k = 0; k < 17; ++k) {
    std::istringstream row(lines[static_cast<std::size_t>(k) + 1]);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
    REQUIRE(values.size() == 5);
    CHECK(values[0] == tr.times[static_cast<std::size_t>(k)]);
    CHECK(values[1] == tr.x(k, 0));
    CHECK(values[2] == tr.x(k, 1));
    CHECK(values[3] == tr.y(k, 0));
    CHECK(values[4] == tr.y(k, 1));
  }

  const std::string path =
      (std::filesystem::temp_directory_path() / "cpl_sim_csv_test.csv").string();
  cpl::write_trajectory_csv(tr, path);
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == csv);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(cpl::write_trajectory_csv(tr, "/nonexistent_dir_cpl/out.csv"),
                  cpl::input_error);
}

TEST_CASE("long runs decimate storage but keep the endpoint") {
  const cpl::Scenario s = quiet_five_scenario(20.0, 5e-5);
  const cpl::Trajectory tr = cpl::simulate(s);
  CHECK(tr.samples() == 80001);  // 400000 reports, stride 5, remainder on the grid
  CHECK(tr.times.back() == doctest::Approx(20.0).epsilon(1e-12));
  const double spacing = tr.times[1] - tr.times[0];
  CHECK(spacing == doctest::Approx(5.0 * 5e-5).epsilon(1e-9));
  for (int i = 0; i < 5; ++i) CHECK(tr.x(tr.samples() - 1, i) == doctest::Approx(1.2).epsilon(1e-3));
}
