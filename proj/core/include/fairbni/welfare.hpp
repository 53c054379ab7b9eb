#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fairbni/estimation.hpp"
#include "fairbni/model.hpp"

namespace fairbni {

// Subgroup welfares of a policy. Outcomes are harms, so lower welfare is
// better throughout; disparity = |w0 - w1|.
struct WelfareReport {
  double w0 = 0.0;
  double w1 = 0.0;
  double disparity = 0.0;
  double cost = 0.0;
};

// W_s(pi) = (1/J) sum_j pi_j TE_j(s).
WelfareReport evaluate_policy(const EffectTable& effects, const Dataset& dataset,
                              const Policy& policy);

struct GridOptions {
  int K = 0;           // 0 -> ceil(sqrt(n)), capped
  int grid_size_cap = 200;
  double lambda = 1.0;
  // Admissible policy class for the per-gridpoint optima: the box [0,1]^J,
  // optionally intersected with the budget and with coordinates pinned at 1.
  std::optional<double> budget;  // absolute currency
  std::vector<Eigen::Index> pinned_at_one;
};

// Discretized Negishi-weight frontier: weights nu_k = k / (K+1) on group 0
// and the optimal scalarized welfare Wbar_k at each gridpoint. The class
// conventions used for the solves are retained so downstream programs can
// check they were built consistently.
struct ParetoGrid {
  Eigen::VectorXd weights;  // strictly increasing, inside (0, 1)
  Eigen::VectorXd wbar;
  double lambda = 1.0;
  int K = 0;
  std::optional<double> budget;
  std::vector<Eigen::Index> pinned_at_one;

  double slack_per_gridpoint() const { return lambda / static_cast<double>(K); }
};

int default_grid_size(Eigen::Index n, int cap = 200);

ParetoGrid build_pareto_grid(const EffectTable& effects, const Dataset& dataset,
                             const GridOptions& options);

}  // namespace fairbni
