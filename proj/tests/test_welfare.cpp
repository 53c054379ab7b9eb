#include <cmath>

#include "doctest.h"
#include "fairbni/welfare.hpp"
#include "oracles.hpp"

using namespace fairbni;

namespace {

EffectTable table_from(const Eigen::VectorXd& group0, const Eigen::VectorXd& group1,
                       double p0 = 0.5) {
  EffectTable effects;
  effects.group0 = group0;
  effects.group1 = group1;
  effects.p0 = p0;
  effects.p1 = 1.0 - p0;
  effects.overall = effects.p0 * group0 + effects.p1 * group1;
  return effects;
}

EffectTable random_table(Eigen::Index J, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd g0(J), g1(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    g0(j) = scale * rng.normal();
    g1(j) = scale * rng.normal();
  }
  return table_from(g0, g1);
}

}  // namespace

TEST_CASE("policy evaluation endpoints") {
  Rng rng(401);
  const Dataset data = oracles::random_dataset(6, 4, 2, 2, rng);
  const EffectTable effects = random_table(4, rng);

  const WelfareReport zero = evaluate_policy(effects, data, Policy{Eigen::VectorXd::Zero(4)});
  CHECK(zero.w0 == 0.0);
  CHECK(zero.w1 == 0.0);
  CHECK(zero.disparity == 0.0);
  CHECK(zero.cost == 0.0);

  const WelfareReport full = evaluate_policy(effects, data, Policy{Eigen::VectorXd::Ones(4)});
  CHECK(full.w0 == doctest::Approx(effects.group0.mean()));
  CHECK(full.w1 == doctest::Approx(effects.group1.mean()));
}

TEST_CASE("policy evaluation matches the dot-product oracle") {
  Rng rng(402);
  const Dataset data = oracles::random_dataset(5, 4, 2, 2, rng);
  const EffectTable effects = random_table(4, rng);
  Eigen::VectorXd pi(4);
  pi << 0.2, 0.9, 0.0, 0.55;
  const WelfareReport report = evaluate_policy(effects, data, Policy{pi});
  double w0 = 0.0, w1 = 0.0, cost = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    w0 += pi(j) * effects.group0(j) / 4.0;
    w1 += pi(j) * effects.group1(j) / 4.0;
    cost += pi(j) * data.costs()(j);
  }
  CHECK(report.w0 == doctest::Approx(w0).epsilon(1e-12));
  CHECK(report.w1 == doctest::Approx(w1).epsilon(1e-12));
  CHECK(report.disparity == doctest::Approx(std::abs(w0 - w1)).epsilon(1e-12));
  CHECK(report.cost == doctest::Approx(cost).epsilon(1e-12));
}

TEST_CASE("grid defaults") {
  CHECK(default_grid_size(100) == 10);
  CHECK(default_grid_size(101) == 11);
  CHECK(default_grid_size(1000000) == 200);  // capped
  CHECK(default_grid_size(1000000, 500) == 500);
}

TEST_CASE("do-nothing optimum when treatment never helps") {
  Rng rng(403);
  const Dataset data = oracles::random_dataset(8, 5, 2, 2, rng);
  Eigen::VectorXd g0(5), g1(5);
  for (Eigen::Index j = 0; j < 5; ++j) {
    g0(j) = 0.2 + rng.uniform();
    g1(j) = 0.1 + rng.uniform();
  }
  GridOptions options;
  options.K = 7;
  const ParetoGrid grid = build_pareto_grid(table_from(g0, g1), data, options);
  for (int k = 0; k < 7; ++k) CHECK(grid.wbar(k) == 0.0);
}

TEST_CASE("single beneficial unit sets every gridpoint optimum") {
  Rng rng(404);
  const Dataset data = oracles::random_dataset(6, 4, 2, 2, rng);
  Eigen::VectorXd g0 = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(4);
  g0(2) = -1.0;
  g1(2) = -1.0;
  GridOptions options;
  options.K = 5;
  options.budget = data.universal_cost();  // never binds
  const ParetoGrid grid = build_pareto_grid(table_from(g0, g1), data, options);
  for (int k = 0; k < 5; ++k) CHECK(grid.wbar(k) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("gridpoint optima match binary enumeration without a budget") {
  Rng rng(405);
  const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
  const EffectTable effects = random_table(8, rng);
  GridOptions options;
  options.K = 5;
  const ParetoGrid grid = build_pareto_grid(effects, data, options);
  const auto points = oracles::enumerate_binary_policies(effects.group0, effects.group1,
                                                         data.costs());
  for (int k = 0; k < 5; ++k) {
    const double nu = grid.weights(k);
    double best = 0.0;
    for (const auto& point : points) {
      best = std::min(best, nu * point.w0 + (1.0 - nu) * point.w1);
    }
    CHECK(std::abs(grid.wbar(k) - best) < 1e-9);
  }
}

TEST_CASE("scalarization optimality against random feasible policies") {
  Rng rng(406);
  const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
  const EffectTable effects = random_table(8, rng);
  const double budget = 0.4 * data.universal_cost();
  GridOptions options;
  options.K = 6;
  options.budget = budget;
  const ParetoGrid grid = build_pareto_grid(effects, data, options);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd pi(8);
    for (Eigen::Index j = 0; j < 8; ++j) pi(j) = rng.uniform();
    const double cost = pi.dot(data.costs());
    if (cost > budget) pi *= budget / cost;
    const WelfareReport report = evaluate_policy(effects, data, Policy{pi});
    for (int k = 0; k < 6; ++k) {
      const double weighted = grid.weights(k) * report.w0 +
                              (1.0 - grid.weights(k)) * report.w1;
      CHECK(weighted >= grid.wbar(k) - 1e-9);
    }
  }
}

TEST_CASE("binary policies attaining a gridpoint optimum are non-dominated") {
  Rng rng(407);
  for (int instance = 0; instance < 5; ++instance) {
    const Eigen::Index J = 6 + static_cast<Eigen::Index>(rng.below(4));
    const Dataset data = oracles::random_dataset(5, J, 2, 2, rng);
    const EffectTable effects = random_table(J, rng);
    GridOptions options;
    options.K = 6;
    const ParetoGrid grid = build_pareto_grid(effects, data, options);
    const auto points = oracles::enumerate_binary_policies(effects.group0,
                                                           effects.group1,
                                                           data.costs());
    for (int k = 0; k < 6; ++k) {
      const double nu = grid.weights(k);
      for (const auto& point : points) {
        const double value = nu * point.w0 + (1.0 - nu) * point.w1;
        if (std::abs(value - grid.wbar(k)) > 1e-12) continue;
        // No other binary policy may weakly improve both welfares and
        // strictly improve one.
        for (const auto& other : points) {
          const bool weakly_better =
              other.w0 <= point.w0 + 1e-12 && other.w1 <= point.w1 + 1e-12;
          const bool strictly_better =
              other.w0 < point.w0 - 1e-12 || other.w1 < point.w1 - 1e-12;
          const bool dominated = weakly_better && strictly_better;
          CHECK_FALSE(dominated);
        }
      }
    }
  }
}

TEST_CASE("grid weights are strictly increasing inside the open interval") {
  Rng rng(408);
  const Dataset data = oracles::random_dataset(5, 4, 2, 2, rng);
  const EffectTable effects = random_table(4, rng);
  GridOptions options;
  options.K = 9;
  options.lambda = 0.7;
  const ParetoGrid grid = build_pareto_grid(effects, data, options);
  CHECK(grid.weights(0) > 0.0);
  CHECK(grid.weights(8) < 1.0);
  for (int k = 1; k < 9; ++k) CHECK(grid.weights(k) > grid.weights(k - 1));
  CHECK(grid.slack_per_gridpoint() == doctest::Approx(0.7 / 9.0));
  CHECK(grid.wbar.allFinite());
}

TEST_CASE("pinned units beyond the budget are an infeasibility error") {
  Rng rng(409);
  const Dataset data = oracles::random_dataset(5, 4, 2, 2, rng);
  const EffectTable effects = random_table(4, rng);
  GridOptions options;
  options.K = 3;
  options.budget = 1e-9;
  options.pinned_at_one = {0, 1};
  CHECK_THROWS_AS(build_pareto_grid(effects, data, options), InfeasibleError);
}
