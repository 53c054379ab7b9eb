// Test-only oracles: independent brute-force routes for values the library
// computes with linear algebra or the simplex. Everything here sticks to
// plain loops so a bug in the implementation path cannot hide in its oracle.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "fairbni/lp.hpp"
#include "fairbni/model.hpp"
#include "fairbni/rng.hpp"

namespace oracles {

// Entrywise double loop for the exposure contraction.
inline Eigen::VectorXd exposure_brute(const Eigen::MatrixXd& interference,
                                      const Eigen::VectorXd& treatments) {
  const Eigen::Index n = interference.rows();
  const Eigen::Index J = interference.cols();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) total += interference(i, j) * treatments(j);
    out(i) = total / static_cast<double>(J);
  }
  return out;
}

inline Eigen::VectorXd summary_brute(const Eigen::MatrixXd& interference,
                                     const Eigen::VectorXi& subgroups,
                                     const Eigen::MatrixXd& covariates,
                                     Eigen::Index j) {
  const Eigen::Index n = interference.rows();
  const Eigen::Index p = covariates.cols();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(0) += interference(i, j) * static_cast<double>(subgroups(i));
    for (Eigen::Index c = 0; c < p; ++c) {
      out(c + 1) += interference(i, j) * covariates(i, c);
    }
  }
  return out / static_cast<double>(n);
}

// TE_j(s) by plain triple loop.
inline Eigen::VectorXd total_effect_brute(const Eigen::MatrixXd& interference,
                                          const Eigen::VectorXi& subgroups,
                                          const Eigen::VectorXd& effect_values,
                                          int s) {
  const Eigen::Index n = interference.rows();
  const Eigen::Index J = interference.cols();
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) count += subgroups(i) == s ? 1 : 0;
  const double ps = static_cast<double>(count) / static_cast<double>(n);
  Eigen::VectorXd out(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (subgroups(i) == s) total += interference(i, j) * effect_values(i);
    }
    out(j) = total / (static_cast<double>(n) * ps);
  }
  return out;
}

// Enumerates every basic feasible point of {l <= x <= u, Ax <= b}: each
// candidate fixes a subset of rows as equalities, a matching subset of
// variables as free, and the remaining variables at a bound pattern.
inline std::optional<double> lp_enumeration_minimum(
    const fairbni::LinearProgram& lp, double feas_tol = 1e-7) {
  const Eigen::Index n = lp.objective.size();
  const Eigen::Index m = lp.constraints.rows();
  double best = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<Eigen::Index> row_ids(static_cast<std::size_t>(m));
  std::iota(row_ids.begin(), row_ids.end(), Eigen::Index{0});
  std::vector<Eigen::Index> var_ids(static_cast<std::size_t>(n));
  std::iota(var_ids.begin(), var_ids.end(), Eigen::Index{0});

  const auto check_candidate = [&](const Eigen::VectorXd& x) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (x(v) < lp.lower(v) - feas_tol || x(v) > lp.upper(v) + feas_tol) return;
    }
    for (Eigen::Index r = 0; r < m; ++r) {
      if (lp.constraints.row(r).dot(x) > lp.rhs(r) + feas_tol) return;
    }
    found = true;
    best = std::min(best, lp.objective.dot(x));
  };

  for (Eigen::Index k = 0; k <= std::min(n, m); ++k) {
    // All k-subsets of rows and of variables.
    std::vector<bool> row_mask(static_cast<std::size_t>(m), false);
    std::fill(row_mask.begin(), row_mask.begin() + k, true);
    std::sort(row_mask.begin(), row_mask.end(), std::greater<bool>());
    do {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index r = 0; r < m; ++r) {
        if (row_mask[static_cast<std::size_t>(r)]) rows.push_back(r);
      }
      std::vector<bool> var_mask(static_cast<std::size_t>(n), false);
      std::fill(var_mask.begin(), var_mask.begin() + k, true);
      std::sort(var_mask.begin(), var_mask.end(), std::greater<bool>());
      do {
        std::vector<Eigen::Index> free_vars;
        std::vector<Eigen::Index> bound_vars;
        for (Eigen::Index v = 0; v < n; ++v) {
          if (var_mask[static_cast<std::size_t>(v)]) {
            free_vars.push_back(v);
          } else {
            bound_vars.push_back(v);
          }
        }
        const Eigen::Index n_fixed = static_cast<Eigen::Index>(bound_vars.size());
        for (std::uint64_t pattern = 0; pattern < (1ULL << n_fixed); ++pattern) {
          Eigen::VectorXd x(n);
          for (Eigen::Index f = 0; f < n_fixed; ++f) {
            const Eigen::Index v = bound_vars[static_cast<std::size_t>(f)];
            x(v) = (pattern >> f) & 1ULL ? lp.upper(v) : lp.lower(v);
          }
          if (k == 0) {
            check_candidate(x);
            continue;
          }
          Eigen::MatrixXd square(k, k);
          Eigen::VectorXd rhs(k);
          for (Eigen::Index r = 0; r < k; ++r) {
            const Eigen::Index row = rows[static_cast<std::size_t>(r)];
            rhs(r) = lp.rhs(row);
            for (Eigen::Index f = 0; f < n_fixed; ++f) {
              const Eigen::Index v = bound_vars[static_cast<std::size_t>(f)];
              rhs(r) -= lp.constraints(row, v) * x(v);
            }
            for (Eigen::Index c = 0; c < k; ++c) {
              square(r, c) = lp.constraints(row, free_vars[static_cast<std::size_t>(c)]);
            }
          }
          const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(square);
          const Eigen::VectorXd solved = qr.solve(rhs);
          if ((square * solved - rhs).cwiseAbs().maxCoeff() >
              1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
            continue;  // singular combination, not a vertex
          }
          for (Eigen::Index c = 0; c < k; ++c) {
            x(free_vars[static_cast<std::size_t>(c)]) = solved(c);
          }
          check_candidate(x);
        }
      } while (std::prev_permutation(var_mask.begin(), var_mask.end()));
    } while (std::prev_permutation(row_mask.begin(), row_mask.end()));
  }
  if (!found) return std::nullopt;
  return best;
}

// Fractional knapsack for min sum_j (g_j / J) pi_j with sum_j c_j pi_j <= C:
// fill beneficial units in order of benefit per unit cost.
inline double knapsack_minimum(const Eigen::VectorXd& combined_effects,
                               const Eigen::VectorXd& costs, double budget) {
  const Eigen::Index J = combined_effects.size();
  std::vector<Eigen::Index> order;
  for (Eigen::Index j = 0; j < J; ++j) {
    if (combined_effects(j) < 0.0) order.push_back(j);
  }
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ra = -combined_effects(a) / costs(a);
    const double rb = -combined_effects(b) / costs(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  double remaining = budget;
  double objective = 0.0;
  for (Eigen::Index j : order) {
    if (remaining <= 0.0) break;
    const double take = std::min(1.0, remaining / costs(j));
    objective += combined_effects(j) * take / static_cast<double>(J);
    remaining -= take * costs(j);
  }
  return objective;
}

// All 2^J binary policies with their direct-loop welfares.
struct BinaryPolicyPoint {
  Eigen::VectorXd policy;
  double w0 = 0.0;
  double w1 = 0.0;
  double cost = 0.0;
  double disparity() const { return std::abs(w0 - w1); }
};

inline std::vector<BinaryPolicyPoint> enumerate_binary_policies(
    const Eigen::VectorXd& group0, const Eigen::VectorXd& group1,
    const Eigen::VectorXd& costs) {
  const Eigen::Index J = group0.size();
  std::vector<BinaryPolicyPoint> points;
  points.reserve(1ULL << J);
  for (std::uint64_t mask = 0; mask < (1ULL << J); ++mask) {
    BinaryPolicyPoint point;
    point.policy = Eigen::VectorXd::Zero(J);
    for (Eigen::Index j = 0; j < J; ++j) {
      if ((mask >> j) & 1ULL) {
        point.policy(j) = 1.0;
        point.w0 += group0(j);
        point.w1 += group1(j);
        point.cost += costs(j);
      }
    }
    point.w0 /= static_cast<double>(J);
    point.w1 /= static_cast<double>(J);
    points.push_back(std::move(point));
  }
  return points;
}

// Minimum disparity over all nonempty activation patterns of the gridpoint
// indicators: each active gridpoint imposes its slack row, alongside the
// disparity linearization and the budget. Infinity when nothing is feasible.
inline double fair_pattern_minimum(const Eigen::VectorXd& group0,
                                   const Eigen::VectorXd& group1,
                                   const Eigen::VectorXd& costs,
                                   double universal_cost, double budget,
                                   const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& wbar, double slack) {
  const Eigen::Index J = group0.size();
  const int K = static_cast<int>(weights.size());
  const double inv_j = 1.0 / static_cast<double>(J);
  // Deliberately looser than the implementation's bound so the two routes
  // cannot share a truncation mistake.
  const double t_upper =
      2.0 * (group0.cwiseAbs() + group1.cwiseAbs()).sum() * inv_j + 10.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t pattern = 1; pattern < (1u << K); ++pattern) {
    fairbni::LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(J + 1);
    lp.objective(J) = 1.0;
    lp.lower = Eigen::VectorXd::Zero(J + 1);
    lp.upper = Eigen::VectorXd::Ones(J + 1);
    lp.upper(J) = t_upper;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    Eigen::VectorXd row(J + 1);
    row.head(J) = inv_j * (group1 - group0);
    row(J) = -1.0;
    rows.push_back(row);
    rhs.push_back(0.0);
    row.head(J) = -inv_j * (group1 - group0);
    rows.push_back(row);
    rhs.push_back(0.0);
    row.head(J) = costs / universal_cost;
    row(J) = 0.0;
    rows.push_back(row);
    rhs.push_back(budget / universal_cost);
    for (int k = 0; k < K; ++k) {
      if (!((pattern >> k) & 1u)) continue;
      row.head(J) = inv_j * (weights(k) * group0 + (1.0 - weights(k)) * group1);
      row(J) = 0.0;
      rows.push_back(row);
      rhs.push_back(wbar(k) + slack);
    }
    lp.constraints.resize(static_cast<Eigen::Index>(rows.size()), J + 1);
    lp.rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      lp.constraints.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
      lp.rhs(static_cast<Eigen::Index>(r)) = rhs[r];
    }
    const fairbni::LpSolution solution = fairbni::solve_lp(lp);
    if (solution.status == fairbni::LpStatus::optimal) {
      best = std::min(best, solution.objective_value);
    }
  }
  return best;
}

// Small random dataset for property tests: positive interference with a
// guaranteed nonzero row minimum, alternating subgroups, lognormal costs.
inline fairbni::Dataset random_dataset(Eigen::Index n, Eigen::Index J,
                                       Eigen::Index p, Eigen::Index q,
                                       fairbni::Rng& rng) {
  std::vector<fairbni::OutcomeUnit> outcome_units;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd x(p);
    for (Eigen::Index c = 0; c < p; ++c) x(c) = rng.normal();
    outcome_units.push_back(fairbni::OutcomeUnit{
        "o" + std::to_string(i + 1), x, static_cast<int>(i % 2), rng.normal()});
  }
  std::vector<fairbni::InterventionUnit> intervention_units;
  for (Eigen::Index j = 0; j < J; ++j) {
    Eigen::VectorXd z(q);
    for (Eigen::Index c = 0; c < q; ++c) z(c) = rng.normal();
    intervention_units.push_back(fairbni::InterventionUnit{
        "i" + std::to_string(j + 1), z, rng.bernoulli(0.4) ? 1 : 0,
        std::exp(0.5 * rng.normal())});
  }
  Eigen::MatrixXd entries(n, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) entries(i, j) = 0.05 + rng.uniform();
  }
  return fairbni::Dataset(std::move(outcome_units), std::move(intervention_units),
                          fairbni::InterferenceMap{std::move(entries)});
}

}  // namespace oracles
