#include "fairbni/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fairbni {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { basic, at_lower, at_upper };

// Working tableau over structural variables, slacks and (phase-1 only)
// artificials. Columns are materialized once; the basis matrix is tiny for
// every program in this project, so it is refactorized each iteration.
class Simplex {
 public:
  Simplex(const LinearProgram& lp)
      : n_(lp.objective.size()), m_(lp.constraints.rows()) {
    // Artificial j covers row j when the all-slack start is infeasible there.
    n_total_ = n_ + 2 * m_;
    cols_.resize(m_, n_total_);
    lower_.resize(n_total_);
    upper_.resize(n_total_);
    cols_.leftCols(n_) = lp.constraints;
    cols_.middleCols(n_, m_) = Eigen::MatrixXd::Identity(m_, m_);
    cols_.rightCols(m_) = -Eigen::MatrixXd::Identity(m_, m_);
    lower_.head(n_) = lp.lower;
    upper_.head(n_) = lp.upper;
    lower_.tail(2 * m_).setZero();
    upper_.tail(2 * m_).setConstant(kInf);
    rhs_ = lp.rhs;

    state_.assign(static_cast<std::size_t>(n_total_), VarState::at_lower);
    x_ = lower_;
    basis_.resize(static_cast<std::size_t>(m_));

    const Eigen::VectorXd start_slack =
        rhs_ - lp.constraints * lp.lower;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (start_slack(i) >= 0.0) {
        basis_[static_cast<std::size_t>(i)] = n_ + i;
        state_[static_cast<std::size_t>(n_ + i)] = VarState::basic;
      } else {
        basis_[static_cast<std::size_t>(i)] = n_ + m_ + i;
        state_[static_cast<std::size_t>(n_ + m_ + i)] = VarState::basic;
        any_artificial_ = true;
      }
    }
  }

  bool needs_phase1() const { return any_artificial_; }

  // Minimizes cost . x over the current bounds. Returns the objective value.
  double run(const Eigen::VectorXd& cost) {
    const Eigen::Index bland_after = 5 * (m_ + n_total_);
    const Eigen::Index hard_cap = std::max<Eigen::Index>(100000, 50 * bland_after);
    for (Eigen::Index iter = 0; iter < hard_cap; ++iter) {
      const bool bland = iter >= bland_after;
      refresh_basics();

      Eigen::VectorXd y(m_);
      if (m_ > 0) {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
        y = lu_.transpose().solve(cb);
      }

      // Entering variable: most negative improvement direction (Dantzig) or
      // lowest eligible index (Bland).
      Eigen::Index entering = -1;
      double best_score = 0.0;
      for (Eigen::Index j = 0; j < n_total_; ++j) {
        const VarState st = state_[static_cast<std::size_t>(j)];
        if (st == VarState::basic) continue;
        if (lower_(j) == upper_(j)) continue;  // fixed, cannot move
        const double d = cost(j) - (m_ > 0 ? y.dot(cols_.col(j)) : 0.0);
        const bool eligible = (st == VarState::at_lower && d < -kPivotTol) ||
                              (st == VarState::at_upper && d > kPivotTol);
        if (!eligible) continue;
        if (bland) {
          entering = j;
          break;
        }
        const double score = std::abs(d);
        if (score > best_score) {
          best_score = score;
          entering = j;
        }
      }
      if (entering < 0) {
        double obj = 0.0;
        for (Eigen::Index j = 0; j < n_total_; ++j) obj += cost(j) * x_(j);
        return obj;
      }

      const double sigma =
          state_[static_cast<std::size_t>(entering)] == VarState::at_lower ? 1.0 : -1.0;
      Eigen::VectorXd w;
      if (m_ > 0) w = lu_.solve(cols_.col(entering));

      // Ratio test: the entering variable moves by t >= 0; each basic value
      // changes at rate -sigma * w_i and blocks at the bound it approaches.
      double t_best = upper_(entering) - lower_(entering);  // bound flip
      Eigen::Index leaving_pos = -1;  // -1 means bound flip
      double leaving_bound = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double rate = sigma * w(i);
        if (std::abs(rate) <= kPivotTol) continue;
        const Eigen::Index bvar = basis_[static_cast<std::size_t>(i)];
        double limit;
        double bound;
        if (rate > 0.0) {
          if (lower_(bvar) == -kInf) continue;
          limit = (x_(bvar) - lower_(bvar)) / rate;
          bound = lower_(bvar);
        } else {
          if (upper_(bvar) == kInf) continue;
          limit = (x_(bvar) - upper_(bvar)) / rate;
          bound = upper_(bvar);
        }
        if (limit < 0.0) limit = 0.0;  // degenerate, blocked immediately
        if (limit < t_best ||
            (limit == t_best && leaving_pos >= 0 &&
             bvar < basis_[static_cast<std::size_t>(leaving_pos)])) {
          t_best = limit;
          leaving_pos = i;
          leaving_bound = bound;
        }
      }

      if (t_best == kInf) {
        throw InternalError("unbounded direction in box-bounded program");
      }

      if (leaving_pos < 0) {
        // Entering variable runs to its opposite bound; basis unchanged.
        state_[static_cast<std::size_t>(entering)] = sigma > 0.0
                                                         ? VarState::at_upper
                                                         : VarState::at_lower;
        x_(entering) = sigma > 0.0 ? upper_(entering) : lower_(entering);
      } else {
        const Eigen::Index leaving = basis_[static_cast<std::size_t>(leaving_pos)];
        x_(entering) += sigma * t_best;
        state_[static_cast<std::size_t>(entering)] = VarState::basic;
        state_[static_cast<std::size_t>(leaving)] =
            leaving_bound == lower_(leaving) ? VarState::at_lower : VarState::at_upper;
        x_(leaving) = leaving_bound;
        basis_[static_cast<std::size_t>(leaving_pos)] = entering;
      }
    }
    throw InternalError("simplex iteration limit exceeded");
  }

  // Pins artificials to zero between phases.
  void fix_artificials() {
    for (Eigen::Index j = n_ + m_; j < n_total_; ++j) {
      upper_(j) = 0.0;
      if (state_[static_cast<std::size_t>(j)] != VarState::basic) x_(j) = 0.0;
    }
  }

  Eigen::VectorXd structural_values() const { return x_.head(n_); }

  Eigen::Index n_structural() const { return n_; }
  Eigen::Index n_slack_offset() const { return n_; }
  Eigen::Index n_art_offset() const { return n_ + m_; }
  Eigen::Index total() const { return n_total_; }

 private:
  // Recomputes basic values from the nonbasic bounds; keeps the solution
  // numerically clean across pivots.
  void refresh_basics() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = cols_.col(basis_[static_cast<std::size_t>(i)]);
    lu_.compute(B);
    Eigen::VectorXd r = rhs_;
    for (Eigen::Index j = 0; j < n_total_; ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
      if (x_(j) != 0.0) r -= cols_.col(j) * x_(j);
    }
    const Eigen::VectorXd xb = lu_.solve(r);
    for (Eigen::Index i = 0; i < m_; ++i) x_(basis_[static_cast<std::size_t>(i)]) = xb(i);
  }

  Eigen::Index n_;
  Eigen::Index m_;
  Eigen::Index n_total_;
  Eigen::MatrixXd cols_;
  Eigen::VectorXd lower_, upper_, rhs_, x_;
  std::vector<Eigen::Index> basis_;
  std::vector<VarState> state_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool any_artificial_ = false;
};

void validate(const LinearProgram& lp) {
  const Eigen::Index n = lp.objective.size();
  if (lp.lower.size() != n || lp.upper.size() != n) {
    throw DimensionError("bound vectors must match objective length");
  }
  if (lp.constraints.rows() != lp.rhs.size()) {
    throw DimensionError("constraint matrix rows must match rhs length");
  }
  if (lp.constraints.size() > 0 && lp.constraints.cols() != n) {
    throw DimensionError("constraint matrix columns must match objective length");
  }
  if (!lp.objective.allFinite() || !lp.rhs.allFinite() ||
      (lp.constraints.size() > 0 && !lp.constraints.allFinite())) {
    throw ValidationError("linear program contains NaN or Inf");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower(j)) || !std::isfinite(lp.upper(j))) {
      throw ValidationError("variable " + std::to_string(j) +
                            " must have finite bounds");
    }
    if (lp.lower(j) > lp.upper(j)) {
      throw ValidationError("variable " + std::to_string(j) +
                            " has lower bound above upper bound");
    }
  }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  validate(lp);
  const Eigen::Index n = lp.objective.size();
  const Eigen::Index m = lp.constraints.rows();

  Simplex simplex(lp);

  if (simplex.needs_phase1()) {
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(simplex.total());
    phase1_cost.tail(m).setOnes();
    const double infeas = simplex.run(phase1_cost);
    const double scale = std::max(1.0, lp.rhs.size() > 0 ? lp.rhs.cwiseAbs().maxCoeff() : 0.0);
    if (infeas > kFeasTol * scale) {
      return LpSolution{LpStatus::infeasible, Eigen::VectorXd::Zero(n), 0.0};
    }
  }
  simplex.fix_artificials();

  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(simplex.total());
  phase2_cost.head(n) = lp.objective;
  simplex.run(phase2_cost);

  Eigen::VectorXd x = simplex.structural_values();
  // Snap to bounds; basic values can drift by strictly less than the
  // feasibility tolerance.
  for (Eigen::Index j = 0; j < n; ++j) {
    if (x(j) < lp.lower(j)) {
      if (lp.lower(j) - x(j) > kFeasTol) throw InternalError("bound violated past tolerance");
      x(j) = lp.lower(j);
    }
    if (x(j) > lp.upper(j)) {
      if (x(j) - lp.upper(j) > kFeasTol) throw InternalError("bound violated past tolerance");
      x(j) = lp.upper(j);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double row_scale =
        std::max({1.0, std::abs(lp.rhs(i)), lp.constraints.row(i).cwiseAbs().maxCoeff()});
    if (lp.constraints.row(i).dot(x) > lp.rhs(i) + kFeasTol * row_scale) {
      throw InternalError("constraint violated at reported optimum");
    }
  }
  return LpSolution{LpStatus::optimal, x, lp.objective.dot(x)};
}

}  // namespace fairbni
