#include "fairbni/welfare.hpp"

#include <algorithm>
#include <cmath>

#include "fairbni/lp.hpp"

namespace fairbni {

WelfareReport evaluate_policy(const EffectTable& effects, const Dataset& dataset,
                              const Policy& policy) {
  validate_policy(dataset, policy);
  if (effects.group0.size() != dataset.J()) {
    throw DimensionError("effect table length does not match dataset");
  }
  const double inv_j = 1.0 / static_cast<double>(dataset.J());
  WelfareReport report;
  // + 0.0 flushes negative zeros out of the reports.
  report.w0 = inv_j * policy.probabilities.dot(effects.group0) + 0.0;
  report.w1 = inv_j * policy.probabilities.dot(effects.group1) + 0.0;
  report.disparity = std::abs(report.w0 - report.w1);
  report.cost = policy.probabilities.dot(dataset.costs()) + 0.0;
  return report;
}

int default_grid_size(Eigen::Index n, int cap) {
  const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::min(k, cap);
}

ParetoGrid build_pareto_grid(const EffectTable& effects, const Dataset& dataset,
                             const GridOptions& options) {
  const Eigen::Index J = dataset.J();
  if (effects.group0.size() != J || effects.group1.size() != J) {
    throw DimensionError("effect table length does not match dataset");
  }
  if (options.lambda < 0.0) throw ValidationError("slack lambda must be >= 0");
  const int K = options.K > 0 ? options.K
                              : default_grid_size(dataset.n(), options.grid_size_cap);
  if (K < 1) throw ValidationError("grid size K must be >= 1");

  // Shared pieces of the per-gridpoint scalarized LP over the admissible box.
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd upper = Eigen::VectorXd::Ones(J);
  for (Eigen::Index j : options.pinned_at_one) {
    if (j < 0 || j >= J) throw ValidationError("pinned index out of range");
    lower(j) = 1.0;
  }
  Eigen::MatrixXd rows(0, J);
  Eigen::VectorXd rhs(0);
  if (options.budget) {
    const double budget = *options.budget;
    if (!(budget > 0.0)) throw ValidationError("budget must be positive");
    double pinned_cost = 0.0;
    for (Eigen::Index j : options.pinned_at_one) pinned_cost += dataset.costs()(j);
    if (pinned_cost > budget * (1.0 + 1e-12) + 1e-9) {
      throw InfeasibleError("pinned units alone exceed the budget");
    }
    rows.resize(1, J);
    rhs.resize(1);
    // Scaled to the universal cost so the row is O(1).
    rows.row(0) = dataset.costs().transpose() / dataset.universal_cost();
    rhs(0) = budget / dataset.universal_cost();
  }

  ParetoGrid grid;
  grid.K = K;
  grid.lambda = options.lambda;
  grid.budget = options.budget;
  grid.pinned_at_one = options.pinned_at_one;
  std::sort(grid.pinned_at_one.begin(), grid.pinned_at_one.end());
  grid.weights.resize(K);
  grid.wbar.resize(K);

  const double inv_j = 1.0 / static_cast<double>(J);
  for (int k = 1; k <= K; ++k) {
    const double nu = static_cast<double>(k) / static_cast<double>(K + 1);
    LinearProgram lp;
    lp.objective = inv_j * (nu * effects.group0 + (1.0 - nu) * effects.group1);
    lp.lower = lower;
    lp.upper = upper;
    lp.constraints = rows;
    lp.rhs = rhs;
    const LpSolution solution = solve_lp(lp);
    if (solution.status != LpStatus::optimal) {
      throw InfeasibleError("scalarized gridpoint " + std::to_string(k) +
                            " is infeasible");
    }
    grid.weights(k - 1) = nu;
    grid.wbar(k - 1) = solution.objective_value;
  }
  return grid;
}

}  // namespace fairbni
