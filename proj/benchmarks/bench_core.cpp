#include <benchmark/benchmark.h>

#include "fairbni/fair_policy.hpp"
#include "fairbni/lp.hpp"
#include "fairbni/simulation.hpp"

using namespace fairbni;

namespace {

// Application-scale LP: one variable per power plant, a handful of rows.
LinearProgram knapsack_lp(Eigen::Index n_vars, Rng& rng) {
  LinearProgram lp;
  lp.objective.resize(n_vars);
  lp.lower = Eigen::VectorXd::Zero(n_vars);
  lp.upper = Eigen::VectorXd::Ones(n_vars);
  lp.constraints.resize(1, n_vars);
  for (Eigen::Index j = 0; j < n_vars; ++j) {
    lp.objective(j) = rng.normal();
    lp.constraints(0, j) = 0.5 + rng.uniform();
  }
  lp.rhs = Eigen::VectorXd::Constant(1, 0.3 * lp.constraints.row(0).sum());
  return lp;
}

GeneratedData make_study(Eigen::Index n, Eigen::Index J) {
  SimConfig config = SimConfig::desk_default();
  config.n = n;
  config.J = J;
  config.seed = 42;
  Rng rng(config.seed, 1);
  return generate_dataset(config, rng);
}

}  // namespace

static void BM_SolveLp(benchmark::State& state) {
  Rng rng(1);
  const LinearProgram lp = knapsack_lp(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lp(lp));
  }
}
BENCHMARK(BM_SolveLp)->Arg(40)->Arg(459);

static void BM_FitPropensity(benchmark::State& state) {
  const GeneratedData study = make_study(200, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_propensity(study.dataset));
  }
}
BENCHMARK(BM_FitPropensity)->Arg(40)->Arg(459);

static void BM_FitOutcome(benchmark::State& state) {
  const GeneratedData study = make_study(state.range(0), 40);
  const PropensityModel propensity = fit_propensity(study.dataset);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_outcome_alearning(study.dataset, propensity));
  }
}
BENCHMARK(BM_FitOutcome)->Arg(2000)->Arg(10000);

static void BM_TotalEffects(benchmark::State& state) {
  const GeneratedData study = make_study(state.range(0), 40);
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_effects(study.dataset, study.truth.outcome));
  }
}
BENCHMARK(BM_TotalEffects)->Arg(2000)->Arg(10000);

static void BM_BuildGridAndSolveFair(benchmark::State& state) {
  const GeneratedData study = make_study(2000, 40);
  const EffectTable effects = total_effects(study.dataset, study.truth.outcome);
  SolveConfig config;
  config.budget = 0.5;
  config.K = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const ParetoGrid grid = build_grid_for(effects, study.dataset, config);
    benchmark::DoNotOptimize(solve_fair(effects, study.dataset, grid, config));
  }
}
BENCHMARK(BM_BuildGridAndSolveFair)->Arg(10)->Arg(45);

BENCHMARK_MAIN();
