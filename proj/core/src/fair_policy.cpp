#include "fairbni/fair_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairbni/lp.hpp"

namespace fairbni {

namespace {

constexpr double kBudgetTol = 1e-9;

// LP variable layout shared by the solvers: pi_1..pi_J, then optionally the
// disparity variable t.
struct ProgramBuilder {
  explicit ProgramBuilder(const Dataset& dataset, bool with_disparity_var,
                          double disparity_upper)
      : dataset_(dataset), with_t_(with_disparity_var) {
    const Eigen::Index J = dataset.J();
    n_ = with_t_ ? J + 1 : J;
    lower_ = Eigen::VectorXd::Zero(n_);
    upper_ = Eigen::VectorXd::Ones(n_);
    if (with_t_) upper_(J) = disparity_upper;
    objective_ = Eigen::VectorXd::Zero(n_);
  }

  void pin_at_one(const std::vector<Eigen::Index>& pins) {
    for (Eigen::Index j : pins) lower_(j) = 1.0;
  }

  void set_objective_welfare(const Eigen::VectorXd& combined_effects) {
    objective_.head(dataset_.J()) =
        combined_effects / static_cast<double>(dataset_.J());
  }

  void set_objective_disparity() { objective_(dataset_.J()) = 1.0; }

  // t >= |W1 - W0| via two rows.
  void add_disparity_rows(const EffectTable& effects) {
    const double inv_j = 1.0 / static_cast<double>(dataset_.J());
    Eigen::VectorXd diff = inv_j * (effects.group1 - effects.group0);
    Eigen::VectorXd row(n_);
    row.head(dataset_.J()) = diff;
    row(dataset_.J()) = -1.0;
    add_row(row, 0.0);
    row.head(dataset_.J()) = -diff;
    add_row(row, 0.0);
  }

  void add_budget_row(double budget) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
    row.head(dataset_.J()) = dataset_.costs() / dataset_.universal_cost();
    add_row(row, budget / dataset_.universal_cost());
  }

  // sum_s nu_s W_s(pi) <= limit.
  void add_weighted_welfare_row(const EffectTable& effects, double nu,
                                double limit) {
    const double inv_j = 1.0 / static_cast<double>(dataset_.J());
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
    row.head(dataset_.J()) =
        inv_j * (nu * effects.group0 + (1.0 - nu) * effects.group1);
    add_row(row, limit);
  }

  // W0(pi) <= target.
  void add_group0_ceiling(const EffectTable& effects, double target) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
    row.head(dataset_.J()) = effects.group0 / static_cast<double>(dataset_.J());
    add_row(row, target);
  }

  LpSolution solve() const {
    LinearProgram lp;
    lp.objective = objective_;
    lp.lower = lower_;
    lp.upper = upper_;
    lp.constraints.resize(static_cast<Eigen::Index>(rows_.size()), n_);
    lp.rhs.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      lp.constraints.row(static_cast<Eigen::Index>(r)) = rows_[r].transpose();
      lp.rhs(static_cast<Eigen::Index>(r)) = rhs_[r];
    }
    return solve_lp(lp);
  }

  Policy policy_from(const LpSolution& solution) const {
    return Policy{solution.values.head(dataset_.J())};
  }

 private:
  void add_row(const Eigen::VectorXd& row, double rhs) {
    rows_.push_back(row);
    rhs_.push_back(rhs);
  }

  const Dataset& dataset_;
  bool with_t_;
  Eigen::Index n_ = 0;
  Eigen::VectorXd objective_, lower_, upper_;
  std::vector<Eigen::VectorXd> rows_;
  std::vector<double> rhs_;
};

// |W1 - W0| <= (1/J) sum_j (|TE_j(0)| + |TE_j(1)|) over the box.
double disparity_upper_bound(const EffectTable& effects, Eigen::Index J) {
  return (effects.group0.cwiseAbs() + effects.group1.cwiseAbs()).sum() /
             static_cast<double>(J) +
         1.0;
}

Policy zero_policy(const Dataset& dataset) {
  return Policy{Eigen::VectorXd::Zero(dataset.J())};
}

Policy round_with_pins(const Policy& policy, const Dataset& dataset,
                       double budget, const std::vector<Eigen::Index>& pins) {
  const Eigen::Index J = dataset.J();
  std::vector<bool> pinned(static_cast<std::size_t>(J), false);
  for (Eigen::Index j : pins) pinned[static_cast<std::size_t>(j)] = true;

  Policy rounded{Eigen::VectorXd::Zero(J)};
  double cost = 0.0;
  for (Eigen::Index j = 0; j < J; ++j) {
    if (policy.probabilities(j) >= 0.5 || pinned[static_cast<std::size_t>(j)]) {
      rounded.probabilities(j) = 1.0;
      cost += dataset.costs()(j);
    }
  }
  while (cost > budget * (1.0 + 1e-12) + kBudgetTol) {
    Eigen::Index worst = -1;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < J; ++j) {
      if (rounded.probabilities(j) != 1.0 || pinned[static_cast<std::size_t>(j)]) continue;
      const double ratio = policy.probabilities(j) / dataset.costs()(j);
      if (ratio < worst_ratio) {
        worst_ratio = ratio;
        worst = j;
      }
    }
    if (worst < 0) {
      throw InfeasibleError("rounding cannot reach the budget: pinned cost alone exceeds it");
    }
    rounded.probabilities(worst) = 0.0;
    cost -= dataset.costs()(worst);
  }
  return rounded;
}

FairSolveReport finalize(const EffectTable& effects, const Dataset& dataset,
                         const SolveConfig& config, Policy policy) {
  if (config.rounding == Rounding::threshold_repair) {
    policy = round_with_pins(policy, dataset, config.resolved_budget(dataset),
                             config.pinned_indices(dataset));
  }
  FairSolveReport out;
  out.policy = std::move(policy);
  out.report = evaluate_policy(effects, dataset, out.policy);
  out.feasible = true;
  return out;
}

}  // namespace

double SolveConfig::resolved_budget(const Dataset& dataset) const {
  double absolute = budget;
  if (budget_is_fraction) {
    if (!(budget > 0.0) || budget > 1.0) {
      throw ValidationError("budget fraction must lie in (0, 1]");
    }
    absolute = budget * dataset.universal_cost();
  } else if (!(budget > 0.0)) {
    throw ValidationError("budget must be positive");
  }
  if (mode == PolicyMode::augmentation && budget_new_only) {
    // The constraint stays sum_j pi_j c_j <= C'; C' covers new installs on
    // top of what is already in place.
    absolute += dataset.factual_treatments().cast<double>().dot(dataset.costs());
  }
  return absolute;
}

std::vector<Eigen::Index> SolveConfig::pinned_indices(const Dataset& dataset) const {
  std::vector<Eigen::Index> pins;
  if (mode == PolicyMode::augmentation) {
    for (Eigen::Index j = 0; j < dataset.J(); ++j) {
      if (dataset.factual_treatments()(j) == 1) pins.push_back(j);
    }
  }
  return pins;
}

ParetoGrid build_grid_for(const EffectTable& effects, const Dataset& dataset,
                          const SolveConfig& config) {
  GridOptions options;
  options.K = config.K;
  options.lambda = config.lambda;
  options.pinned_at_one = config.pinned_indices(dataset);
  if (!config.frontier_unconstrained) {
    options.budget = config.resolved_budget(dataset);
  }
  return build_pareto_grid(effects, dataset, options);
}

FairSolveReport solve_fair(const EffectTable& effects, const Dataset& dataset,
                           const ParetoGrid& grid, const SolveConfig& config) {
  if (grid.K < 1 || grid.weights.size() != grid.K || grid.wbar.size() != grid.K) {
    throw ValidationError("empty or malformed Pareto grid");
  }
  const double budget = config.resolved_budget(dataset);
  std::vector<Eigen::Index> pins = config.pinned_indices(dataset);
  if (pins != grid.pinned_at_one) {
    throw ValidationError("grid was built with different pinned coordinates");
  }
  if (config.frontier_unconstrained) {
    if (grid.budget) {
      throw ValidationError("grid carries a budget but the solve wants an unconstrained frontier");
    }
  } else {
    if (!grid.budget ||
        std::abs(*grid.budget - budget) > 1e-9 * std::max(1.0, budget)) {
      throw ValidationError("grid budget does not match solve budget");
    }
  }

  const double t_upper = disparity_upper_bound(effects, dataset.J());
  const double slack = grid.slack_per_gridpoint();

  FairSolveReport best;
  best.policy = zero_policy(dataset);
  best.report = evaluate_policy(effects, dataset, best.policy);
  double best_t = std::numeric_limits<double>::infinity();
  Policy best_policy = zero_policy(dataset);

  for (int k = 1; k <= grid.K; ++k) {
    ProgramBuilder builder(dataset, true, t_upper);
    builder.pin_at_one(pins);
    builder.set_objective_disparity();
    builder.add_disparity_rows(effects);
    builder.add_weighted_welfare_row(effects, grid.weights(k - 1),
                                     grid.wbar(k - 1) + slack);
    builder.add_budget_row(budget);
    if (config.min_welfare_target) {
      builder.add_group0_ceiling(effects, *config.min_welfare_target);
    }
    const LpSolution solution = builder.solve();
    GridpointOutcome outcome;
    outcome.k = k;
    outcome.feasible = solution.status == LpStatus::optimal;
    if (outcome.feasible) {
      outcome.disparity = solution.objective_value;
      if (solution.objective_value < best_t) {
        best_t = solution.objective_value;
        best_policy = builder.policy_from(solution);
        best.active_gridpoint = k;
      }
    }
    best.per_gridpoint.push_back(outcome);
  }

  if (!best.active_gridpoint) {
    best.feasible = false;
    return best;
  }
  FairSolveReport out = finalize(effects, dataset, config, std::move(best_policy));
  out.active_gridpoint = best.active_gridpoint;
  out.per_gridpoint = std::move(best.per_gridpoint);
  return out;
}

FairSolveReport solve_welfare_max(const EffectTable& effects,
                                  const Dataset& dataset, double nu,
                                  const SolveConfig& config) {
  if (nu < 0.0 || nu > 1.0) throw ValidationError("nu must lie in [0, 1]");
  const double budget = config.resolved_budget(dataset);
  const bool with_cap = config.disparity_cap.has_value();
  ProgramBuilder builder(dataset, with_cap,
                         with_cap ? *config.disparity_cap
                                  : disparity_upper_bound(effects, dataset.J()));
  builder.pin_at_one(config.pinned_indices(dataset));
  builder.set_objective_welfare(nu * effects.group0 + (1.0 - nu) * effects.group1);
  if (with_cap) builder.add_disparity_rows(effects);
  builder.add_budget_row(budget);
  const LpSolution solution = builder.solve();
  if (solution.status != LpStatus::optimal) {
    FairSolveReport out;
    out.policy = zero_policy(dataset);
    out.report = evaluate_policy(effects, dataset, out.policy);
    out.feasible = false;
    return out;
  }
  return finalize(effects, dataset, config, builder.policy_from(solution));
}

FairSolveReport solve_optimal(const EffectTable& effects, const Dataset& dataset,
                              const SolveConfig& config) {
  const double budget = config.resolved_budget(dataset);
  ProgramBuilder builder(dataset, false, 0.0);
  builder.pin_at_one(config.pinned_indices(dataset));
  builder.set_objective_welfare(effects.overall);
  builder.add_budget_row(budget);
  const LpSolution solution = builder.solve();
  if (solution.status != LpStatus::optimal) {
    FairSolveReport out;
    out.policy = zero_policy(dataset);
    out.report = evaluate_policy(effects, dataset, out.policy);
    out.feasible = false;
    return out;
  }
  return finalize(effects, dataset, config, builder.policy_from(solution));
}

FairSolveReport evaluate_factual(const EffectTable& effects, const Dataset& dataset) {
  FairSolveReport out;
  out.policy = Policy{dataset.factual_treatments().cast<double>()};
  out.report = evaluate_policy(effects, dataset, out.policy);
  out.feasible = true;
  return out;
}

Policy round_policy(const Policy& policy, const Dataset& dataset, double budget) {
  validate_policy(dataset, policy);
  return round_with_pins(policy, dataset, budget, {});
}

}  // namespace fairbni
