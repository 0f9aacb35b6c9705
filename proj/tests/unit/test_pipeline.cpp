#include <doctest.h>

#include <algorithm>

#include "ceilopt/errors.hpp"
#include "ceilopt/pipeline.hpp"
#include "ceilopt/transfer.hpp"

using namespace ceilopt;

namespace {

// 144 x 72 voxels: an 8-row ceiling the U-net can digest.
RunConfig small_config() {
  RunConfig c;
  c.nx = 144;
  c.ny = 72;
  c.stage1 = {2, 4};
  c.stage2 = {3, 4};
  c.evaluation = {2, 2};
  c.stage1_epochs = 12;
  c.stage2_epochs = 6;
  c.stage2_check_interval = 2;
  c.tuning_epochs = 3;
  c.filter_radius = 2.0 * 9.0 / 72.0;
  return c;
}

}  // namespace

TEST_CASE("run configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.stage1.subvoxels = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.stage2_check_interval = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.eta = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("linear run bookkeeping") {
  const Problem problem(ProblemSetup{}, small_config());
  const auto rec = optimize_linear(problem);
  const auto& c = problem.config();
  CHECK(rec.tuning_epochs == 3 * c.tuning_epochs);
  CHECK(rec.stage1_epochs == c.stage1_epochs);
  CHECK(rec.stage2_epochs >= 1);
  CHECK(rec.stage2_epochs <= c.stage2_epochs);
  CHECK(rec.history.size() == static_cast<std::size_t>(rec.stage1_epochs + rec.stage2_epochs));
  CHECK(rec.total_epochs() == rec.tuning_epochs + rec.stage1_epochs + rec.stage2_epochs);
  // epochs count globally and beta continues into stage 2
  for (std::size_t i = 0; i < rec.history.size(); ++i) {
    CHECK(rec.history[i].epoch == static_cast<int>(i));
    CHECK(rec.history[i].stage == (static_cast<int>(i) < c.stage1_epochs ? 1 : 2));
    CHECK(rec.history[i].beta == doctest::Approx(beta_schedule(static_cast<int>(i), i < 12 ? 75.0 : 150.0)));
  }
  CHECK(rec.stage1_cost == rec.history[c.stage1_epochs - 1].cost);
  // the stop test only fires on checked epochs, or at the budget
  const int k = rec.stage2_epochs - 1;
  CHECK((k % c.stage2_check_interval == 0 || rec.stage2_epochs == c.stage2_epochs));
  for (double v : rec.design_final) CHECK((v == 0.0 || v == 1.0));
  CHECK(rec.lp_final == doctest::Approx(evaluate_design(problem.evaluation(), rec.design_final)));
  CHECK(rec.history.back().lp < rec.history.front().lp);
}

TEST_CASE("stage 2 stops at the first epoch when already good enough") {
  auto c = small_config();
  c.stage2_factor = 1e6;
  const Problem problem(ProblemSetup{}, c);
  LinearAnsatz a(problem.grid().design_count(), 0.5);
  const auto rec = optimize(problem, a, 0.05);
  CHECK(rec.stage2_epochs == 1);
}

TEST_CASE("stage 2 can be skipped") {
  auto c = small_config();
  c.stage2_epochs = 0;
  const Problem problem(ProblemSetup{}, c);
  LinearAnsatz a(problem.grid().design_count(), 0.5);
  const auto rec = optimize(problem, a, 0.05);
  CHECK(rec.stage2_epochs == 0);
  CHECK(rec.lp_stage2 == rec.lp_stage1);
}

TEST_CASE("restarted beta in stage 2") {
  auto c = small_config();
  c.stage2_reset_beta = true;
  c.stage2_factor = 1e-9;  // never satisfied: run the full budget
  const Problem problem(ProblemSetup{}, c);
  LinearAnsatz a(problem.grid().design_count(), 0.5);
  const auto rec = optimize(problem, a, 0.05);
  CHECK(rec.stage2_epochs == c.stage2_epochs);
  CHECK(rec.history[c.stage1_epochs].beta == 1.0);
}

TEST_CASE("network bookkeeping and tuning grid") {
  auto c = small_config();
  const Problem problem(ProblemSetup{}, c);
  std::vector<nn::UNet> nets;
  for (auto s : c.seeds) nets.emplace_back(144, 8, s);
  const auto input = network_input(problem);
  CHECK(*std::max_element(input.begin(), input.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) != 0.0);
  const auto rec = optimize_nn(problem, nets, input);
  CHECK(rec.tuning_epochs == 9 * c.tuning_epochs);
  CHECK(rec.stage1_epochs == c.stage1_epochs);
  CHECK(std::find(c.nn_alphas.begin(), c.nn_alphas.end(), rec.alpha) != c.nn_alphas.end());
  // the network ansatz decays its learning rate
  CHECK(rec.history[10].alpha == doctest::Approx(lr_schedule(rec.alpha, 10)));
  CHECK_THROWS_AS(tune_nn(problem, {}, input), UsageError);
}

TEST_CASE("linear tuning prefers the first of equal candidates") {
  auto c = small_config();
  c.linear_guesses = {0.3, 0.3};
  const Problem problem(ProblemSetup{}, c);
  const auto choice = tune_linear(problem);
  CHECK(choice.probe_costs[0] == choice.probe_costs[1]);
  CHECK(choice.guess == 0.3);
  CHECK(choice.epochs == 2 * c.tuning_epochs);
}

TEST_CASE("max-abs scaling") {
  const auto s = scale_max_abs({-4.0, 2.0, 1.0});
  CHECK(s == std::vector<double>{-1.0, 0.5, 0.25});
  CHECK(scale_max_abs({0.0, 0.0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("discretization sweep reports relative speed") {
  auto c = small_config();
  c.stage1_epochs = 3;
  SweepConfig sweep;
  sweep.degrees = {1, 2};
  sweep.subvoxels = {1, 2};
  sweep.epochs = 3;
  const auto rows = discretization_sweep(ProblemSetup{}, c, sweep);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].speedup == doctest::Approx(1.0));
  for (const auto& r : rows) {
    CHECK(r.seconds > 0.0);
    CHECK(r.cost_increase > 0.0);
  }
}
