#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fairbni/model.hpp"

namespace fairbni {

// Logistic model for the treatment probability of an intervention unit.
// Fitted coefficients keep predicted probabilities strictly inside (0, 1) on
// the training data; perfect separation is rejected.
struct PropensityModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // length q

  double predict_one(const Eigen::VectorXd& covariates) const;
  // One probability per row of the covariate matrix.
  Eigen::VectorXd predict(const Eigen::MatrixXd& covariates) const;
};

struct PropensityFitOptions {
  bool intercept_only = false;  // ignore covariates, fit the marginal rate
  double gradient_tol = 1e-8;   // on the mean log-likelihood gradient
  int max_iterations = 100;
};

// Iteratively reweighted least squares with step halving.
PropensityModel fit_propensity(const Dataset& dataset,
                               const PropensityFitOptions& options = {});

// Linear baseline and effect functions: f0(x) = alpha0 + x . alpha1 and
// fA(x) = beta0 + x . beta1, both stored intercept-first with length p + 1.
struct OutcomeModel {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  // fA evaluated at each covariate row.
  Eigen::VectorXd effect_values(const Eigen::MatrixXd& covariates) const;
  // f0 evaluated at each covariate row.
  Eigen::VectorXd baseline_values(const Eigen::MatrixXd& covariates) const;
};

struct AlearnOptions {
  // Covariate indices used in the baseline design; empty means all. The
  // intercept is always included. The effect design always uses every
  // covariate.
  std::vector<Eigen::Index> baseline_covariates;
};

// Solves the orthogonalized moment system
//   sum_i Xb_i  (Y_i - Xb_i' alpha - Abar_i X_i' beta) = 0
//   sum_i (Abar_i - ebar_i) X_i (Y_i - Xb_i' alpha - Abar_i X_i' beta) = 0
// where Abar is the observed exposure and ebar the expected exposure under
// the fitted propensities. The residualization makes beta consistent when
// either the baseline design or the propensity model is correct.
OutcomeModel fit_outcome_alearning(const Dataset& dataset,
                                   const PropensityModel& propensity,
                                   const AlearnOptions& options = {});

// Per-intervention-unit aggregate effects:
// TE_j(s) = (1/n) sum_i 1{S_i = s} / p_s * H_ij * fA(X_i). The overall column
// is stored as the p-weighted mixture of the subgroup columns, so
// p0 TE_j(0) + p1 TE_j(1) == TE_j holds bit-for-bit.
struct EffectTable {
  Eigen::VectorXd overall;  // length J
  Eigen::VectorXd group0;
  Eigen::VectorXd group1;
  double p0 = 0.0;
  double p1 = 0.0;

  const Eigen::VectorXd& group(int s) const { return s == 0 ? group0 : group1; }
};

EffectTable total_effects(const Dataset& dataset, const OutcomeModel& outcome);

}  // namespace fairbni
