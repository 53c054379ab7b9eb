#pragma once

#include <optional>
#include <vector>

#include "fairbni/welfare.hpp"

namespace fairbni {

enum class PolicyMode { clean_slate, augmentation };
enum class Rounding { none, threshold_repair };

struct SolveConfig {
  double budget = 1.0;
  bool budget_is_fraction = true;  // fraction of the universal cost
  PolicyMode mode = PolicyMode::clean_slate;
  // Upper bound on the group-0 welfare (lower is better), typically the
  // group-0 welfare a welfare-maximizing solve achieved at a reference budget.
  std::optional<double> min_welfare_target;
  int K = 0;  // 0 -> default grid size
  double lambda = 1.0;
  Rounding rounding = Rounding::none;
  // Compute the frontier optima over the box only instead of the budgeted
  // class; reproduces infeasibility at tight budgets.
  bool frontier_unconstrained = false;
  // Augmentation accounting: budget covers only newly installed units rather
  // than the total including factual installations.
  bool budget_new_only = false;
  // Disparity ceiling for welfare-maximizing solves (cap sweeps).
  std::optional<double> disparity_cap;

  // Budget in currency units, with augmentation accounting applied.
  double resolved_budget(const Dataset& dataset) const;
  std::vector<Eigen::Index> pinned_indices(const Dataset& dataset) const;
};

struct GridpointOutcome {
  int k = 0;
  bool feasible = false;
  double disparity = 0.0;  // optimal |W1 - W0| at this gridpoint, if feasible
};

struct FairSolveReport {
  Policy policy;
  WelfareReport report;
  bool feasible = false;
  std::optional<int> active_gridpoint;  // 1-based, fair solves only
  std::vector<GridpointOutcome> per_gridpoint;
};

// Builds the Pareto grid with conventions matching config (budget inside the
// frontier class unless frontier_unconstrained, pins from the mode).
ParetoGrid build_grid_for(const EffectTable& effects, const Dataset& dataset,
                          const SolveConfig& config);

// Disparity-minimizing policy on the slack-relaxed approximate frontier: one
// LP per gridpoint, keep the feasible gridpoint with the smallest optimum
// (ties to the smallest k). Infeasibility is a result, not an error.
FairSolveReport solve_fair(const EffectTable& effects, const Dataset& dataset,
                           const ParetoGrid& grid, const SolveConfig& config);

// Minimizes nu W0 + (1 - nu) W1 over the budgeted box.
FairSolveReport solve_welfare_max(const EffectTable& effects,
                                  const Dataset& dataset, double nu,
                                  const SolveConfig& config);

// Welfare maximization against the overall effect column; equivalent to
// solve_welfare_max at nu = p0.
FairSolveReport solve_optimal(const EffectTable& effects, const Dataset& dataset,
                              const SolveConfig& config);

// Evaluates the observed treatment assignment as a policy.
FairSolveReport evaluate_factual(const EffectTable& effects, const Dataset& dataset);

// Threshold at 0.5, then greedily un-treat the unit with the smallest
// probability-to-cost ratio until the budget holds. The result is binary and
// budget-feasible (the zero policy always is).
Policy round_policy(const Policy& policy, const Dataset& dataset, double budget);

}  // namespace fairbni
