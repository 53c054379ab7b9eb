#pragma once

#include <Eigen/Dense>

#include "fairbni/errors.hpp"

namespace fairbni {

// Minimize objective . x subject to constraints * x <= rhs and
// lower <= x <= upper. Every variable must carry finite bounds; all the
// programs assembled in this project are box-bounded, which also rules out
// unbounded objectives.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd constraints;  // m x n, one row per <= constraint
  Eigen::VectorXd rhs;          // length m
};

enum class LpStatus { optimal, infeasible };

// On optimal status, values is a vertex of the feasible polytope satisfying
// rows within 1e-9 (scaled by row magnitude) and bounds exactly.
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd values;
  double objective_value = 0.0;
};

// Bounded-variable primal simplex. Dantzig pricing with a switch to Bland's
// rule after 5 (m + n) iterations; ties break on the lowest variable index,
// so identical inputs produce identical outputs.
LpSolution solve_lp(const LinearProgram& program);

}  // namespace fairbni
