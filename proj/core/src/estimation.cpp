#include "fairbni/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fairbni {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double mean_log_likelihood(const Eigen::MatrixXd& design,
                           const Eigen::VectorXd& response,
                           const Eigen::VectorXd& coef) {
  const Eigen::VectorXd lp = design * coef;
  double total = 0.0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    total += response(i) * lp(i) - softplus(lp(i));
  }
  return total / static_cast<double>(lp.size());
}

}  // namespace

double PropensityModel::predict_one(const Eigen::VectorXd& covariates) const {
  if (covariates.size() != coefficients.size()) {
    throw DimensionError("propensity covariate length mismatch");
  }
  return sigmoid(intercept + coefficients.dot(covariates));
}

Eigen::VectorXd PropensityModel::predict(const Eigen::MatrixXd& covariates) const {
  if (covariates.cols() != coefficients.size()) {
    throw DimensionError("propensity covariate length mismatch");
  }
  Eigen::VectorXd lp = (covariates * coefficients).array() + intercept;
  return lp.unaryExpr([](double t) { return sigmoid(t); });
}

PropensityModel fit_propensity(const Dataset& dataset,
                               const PropensityFitOptions& options) {
  const Eigen::Index J = dataset.J();
  const Eigen::Index q = dataset.q();
  const Eigen::VectorXd y = dataset.factual_treatments().cast<double>();
  const double treated = y.sum();
  if (treated == 0.0 || treated == static_cast<double>(J)) {
    throw DegenerateDataError("all intervention units share the same treatment");
  }

  if (options.intercept_only) {
    const double rate = treated / static_cast<double>(J);
    PropensityModel model;
    model.intercept = std::log(rate / (1.0 - rate));
    model.coefficients = Eigen::VectorXd::Zero(q);
    return model;
  }

  if (q >= J) {
    throw ValidationError("propensity fit needs q < J (got q=" +
                          std::to_string(q) + ", J=" + std::to_string(J) + ")");
  }

  Eigen::MatrixXd design(J, q + 1);
  design.col(0).setOnes();
  design.rightCols(q) = dataset.intervention_covariates();

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(q + 1);
  double ll = mean_log_likelihood(design, y, coef);
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd lp = design * coef;
    const Eigen::VectorXd probs = lp.unaryExpr([](double t) { return sigmoid(t); });
    const Eigen::VectorXd grad =
        design.transpose() * (y - probs) / static_cast<double>(J);
    if (grad.norm() <= options.gradient_tol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd weights =
        probs.array() * (1.0 - probs.array());
    const Eigen::MatrixXd hessian =
        design.transpose() * weights.asDiagonal() * design /
        static_cast<double>(J);
    // Rank-revealing solve: constant columns get zero coefficients instead of
    // breaking the Newton step.
    const Eigen::VectorXd step =
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(hessian).solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::VectorXd candidate = coef + scale * step;
      const double candidate_ll = mean_log_likelihood(design, y, candidate);
      if (candidate_ll >= ll) {
        coef = candidate;
        ll = candidate_ll;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;  // stalled; convergence decided by the gradient below
  }

  const Eigen::VectorXd lp = design * coef;
  const Eigen::VectorXd probs = lp.unaryExpr([](double t) { return sigmoid(t); });
  const double grad_norm =
      (design.transpose() * (y - probs) / static_cast<double>(J)).norm();
  const bool probs_interior =
      probs.minCoeff() > 0.0 && probs.maxCoeff() < 1.0;
  if (!probs_interior || (!converged && grad_norm > options.gradient_tol &&
                          lp.cwiseAbs().maxCoeff() > 30.0)) {
    std::ostringstream msg;
    msg << "propensity likelihood is not identified (perfect separation "
           "suspected): max |linear predictor| = "
        << lp.cwiseAbs().maxCoeff() << ", gradient norm = " << grad_norm;
    throw SingularityError(msg.str());
  }
  if (!converged && grad_norm > options.gradient_tol) {
    throw SingularityError("propensity fit failed to converge: gradient norm " +
                           std::to_string(grad_norm));
  }

  PropensityModel model;
  model.intercept = coef(0);
  model.coefficients = coef.tail(q);
  return model;
}

Eigen::VectorXd OutcomeModel::effect_values(const Eigen::MatrixXd& covariates) const {
  if (covariates.cols() + 1 != beta.size()) {
    throw DimensionError("effect model covariate length mismatch");
  }
  return (covariates * beta.tail(beta.size() - 1)).array() + beta(0);
}

Eigen::VectorXd OutcomeModel::baseline_values(const Eigen::MatrixXd& covariates) const {
  if (covariates.cols() + 1 != alpha.size()) {
    throw DimensionError("baseline model covariate length mismatch");
  }
  return (covariates * alpha.tail(alpha.size() - 1)).array() + alpha(0);
}

OutcomeModel fit_outcome_alearning(const Dataset& dataset,
                                   const PropensityModel& propensity,
                                   const AlearnOptions& options) {
  const Eigen::Index n = dataset.n();
  const Eigen::Index p = dataset.p();
  if (n <= 2 * (p + 1)) {
    throw DegenerateDataError("A-learning needs n > 2(p+1); got n=" +
                              std::to_string(n) + ", p=" + std::to_string(p));
  }

  std::vector<Eigen::Index> baseline_cols = options.baseline_covariates;
  if (baseline_cols.empty()) {
    baseline_cols.resize(static_cast<std::size_t>(p));
    for (Eigen::Index c = 0; c < p; ++c) baseline_cols[static_cast<std::size_t>(c)] = c;
  }
  for (Eigen::Index c : baseline_cols) {
    if (c < 0 || c >= p) throw ValidationError("baseline covariate index out of range");
  }

  const Eigen::Index kb = static_cast<Eigen::Index>(baseline_cols.size()) + 1;
  const Eigen::Index kf = p + 1;
  Eigen::MatrixXd design_b(n, kb);
  design_b.col(0).setOnes();
  for (Eigen::Index c = 0; c < kb - 1; ++c) {
    design_b.col(c + 1) =
        dataset.outcome_covariates().col(baseline_cols[static_cast<std::size_t>(c)]);
  }
  Eigen::MatrixXd design_f(n, kf);
  design_f.col(0).setOnes();
  design_f.rightCols(p) = dataset.outcome_covariates();

  const Eigen::VectorXd abar =
      exposure(dataset, dataset.factual_treatments().cast<double>());
  const Eigen::VectorXd ebar = expected_exposure(
      dataset, propensity.predict(dataset.intervention_covariates()));
  const Eigen::VectorXd resid_exposure = abar - ebar;
  const Eigen::VectorXd& y = dataset.outcomes();

  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd fa = abar.asDiagonal() * design_f;          // Abar_i X_i
  const Eigen::MatrixXd fw = resid_exposure.asDiagonal() * design_f;  // (Abar-ebar)_i X_i

  Eigen::MatrixXd moments(kb + kf, kb + kf);
  moments.topLeftCorner(kb, kb) = design_b.transpose() * design_b * inv_n;
  moments.topRightCorner(kb, kf) = design_b.transpose() * fa * inv_n;
  moments.bottomLeftCorner(kf, kb) = fw.transpose() * design_b * inv_n;
  moments.bottomRightCorner(kf, kf) = fw.transpose() * fa * inv_n;
  Eigen::VectorXd rhs(kb + kf);
  rhs.head(kb) = design_b.transpose() * y * inv_n;
  rhs.tail(kf) = fw.transpose() * y * inv_n;

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      moments, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(moments);
    qr.setThreshold(1e-10);
    std::ostringstream msg;
    msg << "A-learning moment matrix is rank deficient (condition "
        << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
        << "); collinear columns:";
    const Eigen::Index rank = qr.rank();
    for (Eigen::Index r = rank; r < kb + kf; ++r) {
      const Eigen::Index col = qr.colsPermutation().indices()(r);
      if (col < kb) {
        msg << " baseline[" << (col == 0 ? std::string("intercept")
                                         : "x" + std::to_string(baseline_cols[static_cast<std::size_t>(col - 1)] + 1))
            << "]";
      } else {
        const Eigen::Index ec = col - kb;
        msg << " effect[" << (ec == 0 ? std::string("intercept") : "x" + std::to_string(ec)) << "]";
      }
    }
    throw RankDeficiencyError(msg.str());
  }

  const Eigen::VectorXd theta = svd.solve(rhs);
  const double residual = (moments * theta - rhs).norm();
  if (residual > 1e-8 * std::max(1.0, rhs.norm())) {
    throw InternalError("A-learning moment residual " + std::to_string(residual));
  }

  OutcomeModel model;
  model.alpha = Eigen::VectorXd::Zero(p + 1);
  model.alpha(0) = theta(0);
  for (Eigen::Index c = 0; c < kb - 1; ++c) {
    model.alpha(baseline_cols[static_cast<std::size_t>(c)] + 1) = theta(c + 1);
  }
  model.beta = theta.tail(kf);
  return model;
}

EffectTable total_effects(const Dataset& dataset, const OutcomeModel& outcome) {
  const Eigen::Index n = dataset.n();
  const double p1 = dataset.subgroup_fraction(1);
  const double p0 = dataset.subgroup_fraction(0);
  if (p0 <= 0.0 || p1 <= 0.0) {
    throw DegenerateDataError("total effects need both subgroups nonempty");
  }

  const Eigen::VectorXd fa = outcome.effect_values(dataset.outcome_covariates());
  const Eigen::VectorXd mask1 = dataset.subgroups().cast<double>();
  const Eigen::VectorXd fa1 = fa.cwiseProduct(mask1);
  const Eigen::VectorXd fa0 = fa - fa1;

  EffectTable table;
  table.p0 = p0;
  table.p1 = p1;
  const double inv_n = 1.0 / static_cast<double>(n);
  table.group0 = dataset.interference().transpose() * fa0 * (inv_n / p0);
  table.group1 = dataset.interference().transpose() * fa1 * (inv_n / p1);
  // The overall column is defined as the mixture so the identity
  // p0 TE(0) + p1 TE(1) = TE holds exactly.
  table.overall = p0 * table.group0 + p1 * table.group1;
  return table;
}

}  // namespace fairbni
