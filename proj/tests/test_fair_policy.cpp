#include <cmath>

#include "doctest.h"
#include "fairbni/fair_policy.hpp"
#include "fairbni/lp.hpp"
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

// Feasible for the fair program: within budget and on the slack-relaxed
// frontier for at least one gridpoint.
bool fair_feasible(const oracles::BinaryPolicyPoint& point, const ParetoGrid& grid,
                   double budget) {
  if (point.cost > budget + 1e-9) return false;
  for (int k = 0; k < grid.K; ++k) {
    const double weighted =
        grid.weights(k) * point.w0 + (1.0 - grid.weights(k)) * point.w1;
    if (weighted <= grid.wbar(k) + grid.slack_per_gridpoint() + 1e-9) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("symmetric groups admit a zero-disparity fair policy") {
  Rng rng(501);
  const Dataset data = oracles::random_dataset(6, 5, 2, 2, rng);
  Eigen::VectorXd g(5);
  g << -1.0, -0.5, 0.3, -0.2, 0.1;
  const EffectTable effects = table_from(g, g);
  SolveConfig config;
  config.budget = 0.8;
  config.K = 4;
  const ParetoGrid grid = build_grid_for(effects, data, config);
  const FairSolveReport report = solve_fair(effects, data, grid, config);
  REQUIRE(report.feasible);
  CHECK(report.report.disparity < 1e-9);
}

TEST_CASE("tight budget with an unconstrained frontier is infeasible everywhere") {
  Rng rng(502);
  const Dataset data = oracles::random_dataset(6, 5, 2, 2, rng);
  Eigen::VectorXd g0(5), g1(5);
  for (Eigen::Index j = 0; j < 5; ++j) {
    g0(j) = -4.0 - rng.uniform();  // strongly beneficial everywhere
    g1(j) = -3.0 - rng.uniform();
  }
  SolveConfig config;
  config.budget = 1e-7;
  config.K = 4;
  config.lambda = 0.5;
  config.frontier_unconstrained = true;
  const EffectTable effects = table_from(g0, g1);
  const ParetoGrid grid = build_grid_for(effects, data, config);
  const FairSolveReport report = solve_fair(effects, data, grid, config);
  CHECK_FALSE(report.feasible);
  CHECK_FALSE(report.active_gridpoint.has_value());
  for (const GridpointOutcome& outcome : report.per_gridpoint) {
    CHECK_FALSE(outcome.feasible);
  }
}

TEST_CASE("fair optimum is bounded by the feasible binary minimum") {
  Rng rng(503);
  for (int instance = 0; instance < 10; ++instance) {
    const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
    const EffectTable effects = random_table(8, rng);
    SolveConfig config;
    config.budget = 0.3 + 0.5 * rng.uniform();
    config.K = 6;
    config.lambda = rng.bernoulli(0.5) ? 1.0 : 0.1;
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport report = solve_fair(effects, data, grid, config);

    const double budget = config.resolved_budget(data);
    const auto points = oracles::enumerate_binary_policies(effects.group0,
                                                           effects.group1,
                                                           data.costs());
    double binary_min = std::numeric_limits<double>::infinity();
    for (const auto& point : points) {
      if (fair_feasible(point, grid, budget)) {
        binary_min = std::min(binary_min, point.disparity());
      }
    }
    if (!report.feasible) continue;
    REQUIRE(report.active_gridpoint.has_value());
    const double lp_optimum =
        report.per_gridpoint[static_cast<std::size_t>(*report.active_gridpoint - 1)]
            .disparity;
    CHECK(lp_optimum <= binary_min + 1e-9);

    const bool integral = (report.policy.probabilities.array() *
                           (1.0 - report.policy.probabilities.array()))
                              .abs()
                              .maxCoeff() < 1e-9;
    if (integral && std::isfinite(binary_min)) {
      CHECK(lp_optimum == doctest::Approx(binary_min).epsilon(1e-9));
    }
  }
}

TEST_CASE("solution satisfies the slack inequality at the active gridpoint") {
  Rng rng(504);
  for (int instance = 0; instance < 10; ++instance) {
    const Dataset data = oracles::random_dataset(5, 7, 2, 2, rng);
    const EffectTable effects = random_table(7, rng);
    SolveConfig config;
    config.budget = 0.5;
    config.K = 5;
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport report = solve_fair(effects, data, grid, config);
    if (!report.feasible) continue;
    const int k = *report.active_gridpoint;
    const double nu = grid.weights(k - 1);
    const double weighted = nu * report.report.w0 + (1.0 - nu) * report.report.w1;
    CHECK(weighted <= grid.wbar(k - 1) + grid.slack_per_gridpoint() + 1e-9);
    CHECK(report.report.cost <= config.resolved_budget(data) + 1e-9);
  }
}

TEST_CASE("welfare maximization baseline cases") {
  Rng rng(505);
  const Dataset data = oracles::random_dataset(6, 2, 2, 2, rng);

  SUBCASE("no beneficial unit means no treatment") {
    Eigen::VectorXd g0(2), g1(2);
    g0 << 0.5, 0.1;
    g1 << 0.2, 0.7;
    SolveConfig config;
    config.budget = 1.0;
    const FairSolveReport report =
        solve_welfare_max(table_from(g0, g1), data, 0.5, config);
    REQUIRE(report.feasible);
    CHECK(report.policy.probabilities.isZero(0.0));
    CHECK(report.report.w0 == 0.0);
  }

  SUBCASE("dominant unit is treated first") {
    Eigen::VectorXd g0(2), g1(2);
    g0 << -2.0, -1.0;
    g1 << -2.0, -1.0;
    std::vector<OutcomeUnit> outcome = data.outcome_units();
    std::vector<InterventionUnit> intervention = data.intervention_units();
    intervention[0].cost = 1.0;
    intervention[1].cost = 1.0;
    const Dataset equal_costs(outcome, intervention,
                              InterferenceMap{data.interference()});
    SolveConfig config;
    config.budget = 1.0;
    config.budget_is_fraction = false;
    const FairSolveReport report =
        solve_welfare_max(table_from(g0, g1), equal_costs, 0.5, config);
    REQUIRE(report.feasible);
    CHECK(report.policy.probabilities(0) == doctest::Approx(1.0));
    CHECK(report.policy.probabilities(1) == doctest::Approx(0.0));
  }
}

TEST_CASE("welfare maximization equals the greedy knapsack oracle") {
  Rng rng(506);
  for (int instance = 0; instance < 20; ++instance) {
    const Dataset data = oracles::random_dataset(5, 10, 2, 2, rng);
    const EffectTable effects = random_table(10, rng);
    const double nu = rng.uniform();
    SolveConfig config;
    config.budget = 0.1 + 0.8 * rng.uniform();
    const FairSolveReport report = solve_welfare_max(effects, data, nu, config);
    REQUIRE(report.feasible);
    const Eigen::VectorXd combined =
        nu * effects.group0 + (1.0 - nu) * effects.group1;
    const double lp_objective =
        report.policy.probabilities.dot(combined) / 10.0;
    const double greedy = oracles::knapsack_minimum(combined, data.costs(),
                                                    config.resolved_budget(data));
    CHECK(std::abs(lp_objective - greedy) < 1e-9);
  }
}

TEST_CASE("optimal policy baseline") {
  Rng rng(507);
  const Dataset data = oracles::random_dataset(6, 4, 2, 2, rng);

  SUBCASE("zero effects yield the zero policy") {
    const EffectTable effects =
        table_from(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4));
    SolveConfig config;
    config.budget = 0.5;
    const FairSolveReport report = solve_optimal(effects, data, config);
    REQUIRE(report.feasible);
    CHECK(report.policy.probabilities.isZero(0.0));
  }

  SUBCASE("a single protective unit within budget is fully treated") {
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(4);
    g0(1) = -1.0;
    g1(1) = -0.5;
    SolveConfig config;
    config.budget = 1.0;
    const FairSolveReport report = solve_optimal(table_from(g0, g1), data, config);
    REQUIRE(report.feasible);
    CHECK(report.policy.probabilities(1) == doctest::Approx(1.0));
  }

  SUBCASE("matches the greedy oracle on the overall column") {
    for (int instance = 0; instance < 10; ++instance) {
      const Dataset local = oracles::random_dataset(5, 10, 2, 2, rng);
      const EffectTable effects = random_table(10, rng);
      SolveConfig config;
      config.budget = 0.1 + 0.8 * rng.uniform();
      const FairSolveReport report = solve_optimal(effects, local, config);
      REQUIRE(report.feasible);
      const double objective =
          report.policy.probabilities.dot(effects.overall) / 10.0;
      const double greedy = oracles::knapsack_minimum(
          effects.overall, local.costs(), config.resolved_budget(local));
      CHECK(std::abs(objective - greedy) < 1e-9);
    }
  }
}

TEST_CASE("factual evaluation") {
  Rng rng(508);
  const Dataset data = oracles::random_dataset(6, 5, 2, 2, rng);
  const EffectTable effects = random_table(5, rng);
  const FairSolveReport report = evaluate_factual(effects, data);
  REQUIRE(report.feasible);
  const Policy expected{data.factual_treatments().cast<double>()};
  CHECK((report.policy.probabilities - expected.probabilities).cwiseAbs().maxCoeff() ==
        0.0);
  const WelfareReport direct = evaluate_policy(effects, data, expected);
  CHECK(report.report.w0 == direct.w0);
  CHECK(report.report.w1 == direct.w1);
  CHECK(report.report.cost == direct.cost);

  auto with_treatments = [&](int value) {
    std::vector<InterventionUnit> units = data.intervention_units();
    for (InterventionUnit& unit : units) unit.factual_treatment = value;
    return Dataset(data.outcome_units(), std::move(units),
                   InterferenceMap{data.interference()});
  };
  SUBCASE("no installed units means zero welfares and cost") {
    const FairSolveReport none = evaluate_factual(effects, with_treatments(0));
    CHECK(none.report.w0 == 0.0);
    CHECK(none.report.w1 == 0.0);
    CHECK(none.report.cost == 0.0);
  }
  SUBCASE("all installed matches full treatment") {
    const Dataset all_data = with_treatments(1);
    const FairSolveReport all = evaluate_factual(effects, all_data);
    const WelfareReport full =
        evaluate_policy(effects, all_data, Policy{Eigen::VectorXd::Ones(5)});
    CHECK(all.report.w0 == full.w0);
    CHECK(all.report.w1 == full.w1);
    CHECK(all.report.cost == full.cost);
  }
}

TEST_CASE("rounding thresholds and repairs to the budget") {
  Rng rng(509);
  const Dataset data = oracles::random_dataset(5, 6, 2, 2, rng);

  SUBCASE("binary feasible policies are unchanged") {
    Eigen::VectorXd pi(6);
    pi << 1, 0, 1, 0, 0, 1;
    const Policy rounded = round_policy(Policy{pi}, data, data.universal_cost());
    CHECK((rounded.probabilities - pi).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero stays zero") {
    const Policy rounded =
        round_policy(Policy{Eigen::VectorXd::Zero(6)}, data, 1.0);
    CHECK(rounded.probabilities.isZero(0.0));
  }

  SUBCASE("uniform fractional policy lands within budget") {
    const double budget = 0.5 * data.universal_cost();
    const Policy rounded =
        round_policy(Policy{Eigen::VectorXd::Constant(6, 0.6)}, data, budget);
    CHECK(policy_cost(data, rounded) <= budget + 1e-9);
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double v = rounded.probabilities(j);
      CHECK((v == 0.0 || v == 1.0));
    }
  }
}

TEST_CASE("augmentation pins factually treated units exactly") {
  Rng rng(510);
  for (int instance = 0; instance < 10; ++instance) {
    const Dataset data = oracles::random_dataset(6, 6, 2, 2, rng);
    const EffectTable effects = random_table(6, rng);
    SolveConfig config;
    config.mode = PolicyMode::augmentation;
    config.budget = 1.0;
    config.K = 3;
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport report = solve_fair(effects, data, grid, config);
    if (!report.feasible) continue;
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (data.factual_treatments()(j) == 1) {
        CHECK(report.policy.probabilities(j) == 1.0);
      }
    }
  }
}

TEST_CASE("fairness dominance and welfare sacrifice at a shared budget") {
  Rng rng(511);
  for (int instance = 0; instance < 10; ++instance) {
    const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
    // Asymmetric regime: group 0 gains strongly, group 1 loses mildly.
    Eigen::VectorXd g0(8), g1(8);
    for (Eigen::Index j = 0; j < 8; ++j) {
      g0(j) = -1.0 - rng.uniform();
      g1(j) = 0.3 + 0.4 * rng.uniform();
    }
    const EffectTable effects = table_from(g0, g1);
    SolveConfig config;
    config.budget = 0.6;
    config.K = 6;
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport fair = solve_fair(effects, data, grid, config);
    const FairSolveReport welfare =
        solve_welfare_max(effects, data, effects.p0, config);
    REQUIRE(welfare.feasible);
    if (!fair.feasible) continue;
    CHECK(fair.report.disparity <= welfare.report.disparity + 1e-9);
    // Lower is better: the welfare maximizer reaches at least as low a
    // population welfare as any feasible policy, the fair one included.
    const double fair_population =
        effects.p0 * fair.report.w0 + effects.p1 * fair.report.w1;
    const double welfare_population =
        effects.p0 * welfare.report.w0 + effects.p1 * welfare.report.w1;
    CHECK(welfare_population <= fair_population + 1e-9);
  }
}

TEST_CASE("optimal objective is monotone in the budget") {
  Rng rng(512);
  const Dataset data = oracles::random_dataset(6, 9, 2, 2, rng);
  const EffectTable effects = random_table(9, rng);
  double previous = std::numeric_limits<double>::infinity();
  for (double budget : {0.1, 0.25, 0.4, 0.6, 0.8, 1.0}) {
    SolveConfig config;
    config.budget = budget;
    const FairSolveReport report = solve_optimal(effects, data, config);
    REQUIRE(report.feasible);
    const double objective =
        report.policy.probabilities.dot(effects.overall) / 9.0;
    CHECK(objective <= previous + 1e-12);
    previous = objective;
  }
}

TEST_CASE("activation-pattern enumeration matches single-gridpoint solves") {
  Rng rng(513);
  for (int instance = 0; instance < 5; ++instance) {
    const Eigen::Index J = 4 + static_cast<Eigen::Index>(rng.below(3));
    const Dataset data = oracles::random_dataset(5, J, 2, 2, rng);
    const EffectTable effects = random_table(J, rng);
    SolveConfig config;
    config.budget = 0.6;
    config.K = 3 + static_cast<int>(rng.below(2));
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport single = solve_fair(effects, data, grid, config);
    const double best_pattern = oracles::fair_pattern_minimum(
        effects.group0, effects.group1, data.costs(), data.universal_cost(),
        config.resolved_budget(data), grid.weights, grid.wbar,
        grid.slack_per_gridpoint());

    if (!single.feasible) {
      CHECK(best_pattern == std::numeric_limits<double>::infinity());
      continue;
    }
    const double single_best =
        single.per_gridpoint[static_cast<std::size_t>(*single.active_gridpoint - 1)]
            .disparity;
    CHECK(std::abs(single_best - best_pattern) < 1e-9);
  }
}

TEST_CASE("gridpoints forcing a large disparity stay feasible") {
  // Opposite-signed effects of magnitude 5: a gridpoint weighted toward
  // group 0 forces near-full treatment, whose disparity reaches 10. The
  // auxiliary disparity variable's box must not truncate it.
  Rng rng(518);
  const Dataset data = oracles::random_dataset(5, 4, 2, 2, rng);
  const EffectTable effects = table_from(Eigen::VectorXd::Constant(4, -5.0),
                                         Eigen::VectorXd::Constant(4, 5.0));
  SolveConfig config;
  config.budget = 1.0;
  config.K = 3;
  config.lambda = 0.01;
  const ParetoGrid grid = build_grid_for(effects, data, config);
  const FairSolveReport report = solve_fair(effects, data, grid, config);
  REQUIRE(report.feasible);
  // nu_3 = 0.75 puts weight on group 0; its optimum treats everything.
  CHECK(grid.wbar(2) == doctest::Approx(-2.5));
  REQUIRE(report.per_gridpoint[2].feasible);
  CHECK(report.per_gridpoint[2].disparity == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("minimum welfare constraint caps the group-0 welfare") {
  Rng rng(514);
  const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
  // Both groups benefit, group 0 more: the fair policy must sacrifice group-0
  // welfare unless the constraint forbids it.
  Eigen::VectorXd g0(8), g1(8);
  for (Eigen::Index j = 0; j < 8; ++j) {
    g0(j) = -1.5 - rng.uniform();
    g1(j) = -0.4 - 0.3 * rng.uniform();
  }
  const EffectTable effects = table_from(g0, g1);

  SolveConfig reference;
  reference.budget = 0.4;
  const FairSolveReport welfare =
      solve_welfare_max(effects, data, effects.p0, reference);
  REQUIRE(welfare.feasible);

  SolveConfig config;
  config.budget = 0.8;
  config.K = 6;
  config.min_welfare_target = welfare.report.w0;
  const ParetoGrid grid = build_grid_for(effects, data, config);
  const FairSolveReport constrained = solve_fair(effects, data, grid, config);
  if (constrained.feasible) {
    CHECK(constrained.report.w0 <= welfare.report.w0 + 1e-9);
  }
}

TEST_CASE("grid and config mismatches are rejected") {
  Rng rng(515);
  const Dataset data = oracles::random_dataset(5, 4, 2, 2, rng);
  const EffectTable effects = random_table(4, rng);
  SolveConfig config;
  config.budget = 0.5;
  config.K = 3;
  const ParetoGrid grid = build_grid_for(effects, data, config);

  SUBCASE("different budget") {
    SolveConfig other = config;
    other.budget = 0.7;
    CHECK_THROWS_AS(solve_fair(effects, data, grid, other), ValidationError);
  }
  SUBCASE("different pins") {
    SolveConfig other = config;
    other.mode = PolicyMode::augmentation;
    CHECK_THROWS_AS(solve_fair(effects, data, grid, other), ValidationError);
  }
  SUBCASE("unconstrained flag against a budgeted grid") {
    SolveConfig other = config;
    other.frontier_unconstrained = true;
    CHECK_THROWS_AS(solve_fair(effects, data, grid, other), ValidationError);
  }
  SUBCASE("empty grid") {
    ParetoGrid empty;
    CHECK_THROWS_AS(solve_fair(effects, data, empty, config), ValidationError);
  }
}

TEST_CASE("budget constraint holds on every returned policy") {
  Rng rng(516);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index J = 3 + static_cast<Eigen::Index>(rng.below(8));
    const Dataset data = oracles::random_dataset(5, J, 2, 2, rng);
    const EffectTable effects = random_table(J, rng);
    SolveConfig config;
    config.budget = 0.05 + 0.9 * rng.uniform();
    config.K = 3;
    const double budget = config.resolved_budget(data);
    const ParetoGrid grid = build_grid_for(effects, data, config);
    const FairSolveReport fair = solve_fair(effects, data, grid, config);
    if (fair.feasible) CHECK(fair.report.cost <= budget + 1e-9);
    const FairSolveReport welfare = solve_welfare_max(effects, data, 0.3, config);
    if (welfare.feasible) CHECK(welfare.report.cost <= budget + 1e-9);
    const FairSolveReport optimal = solve_optimal(effects, data, config);
    if (optimal.feasible) CHECK(optimal.report.cost <= budget + 1e-9);
  }
}

TEST_CASE("disparity cap restricts the welfare maximizer") {
  Rng rng(517);
  const Dataset data = oracles::random_dataset(6, 8, 2, 2, rng);
  Eigen::VectorXd g0(8), g1(8);
  for (Eigen::Index j = 0; j < 8; ++j) {
    g0(j) = -1.0 - rng.uniform();
    g1(j) = 0.4 * rng.uniform();
  }
  const EffectTable effects = table_from(g0, g1);
  SolveConfig config;
  config.budget = 0.9;
  const FairSolveReport unconstrained =
      solve_welfare_max(effects, data, effects.p0, config);
  REQUIRE(unconstrained.feasible);
  REQUIRE(unconstrained.report.disparity > 0.05);

  config.disparity_cap = 0.5 * unconstrained.report.disparity;
  const FairSolveReport capped =
      solve_welfare_max(effects, data, effects.p0, config);
  REQUIRE(capped.feasible);
  CHECK(capped.report.disparity <= *config.disparity_cap + 1e-9);
}
