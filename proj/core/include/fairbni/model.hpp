#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fairbni/errors.hpp"

namespace fairbni {

// Community-side node: covariates, subgroup label and observed outcome.
// Covariates are unitless after load-time standardization.
struct OutcomeUnit {
  std::string id;
  Eigen::VectorXd covariates;  // length p
  int subgroup = 0;            // in {0, 1}
  double outcome = 0.0;
};

// Source-side node: covariates, observed treatment and installation cost.
struct InterventionUnit {
  std::string id;
  Eigen::VectorXd covariates;  // length q
  int factual_treatment = 0;   // in {0, 1}
  double cost = 0.0;           // > 0
};

// Nonnegative n x J matrix linking intervention units (columns) to outcome
// units (rows). Entry (i, j) is the exposure strength from j to i.
struct InterferenceMap {
  Eigen::MatrixXd entries;
};

// Treatment probabilities, one per intervention unit, each in [0, 1].
struct Policy {
  Eigen::VectorXd probabilities;
};

// Immutable after construction; safe to share read-only across threads.
class Dataset {
 public:
  Dataset(std::vector<OutcomeUnit> outcome_units,
          std::vector<InterventionUnit> intervention_units,
          InterferenceMap interference);

  const std::vector<OutcomeUnit>& outcome_units() const { return outcome_units_; }
  const std::vector<InterventionUnit>& intervention_units() const {
    return intervention_units_;
  }
  const Eigen::MatrixXd& interference() const { return interference_; }

  Eigen::Index n() const { return interference_.rows(); }
  Eigen::Index J() const { return interference_.cols(); }
  Eigen::Index p() const { return outcome_covariates_.cols(); }
  Eigen::Index q() const { return intervention_covariates_.cols(); }

  // Cached column-stacked views, built once at construction.
  const Eigen::MatrixXd& outcome_covariates() const { return outcome_covariates_; }
  const Eigen::MatrixXd& intervention_covariates() const {
    return intervention_covariates_;
  }
  const Eigen::VectorXi& subgroups() const { return subgroups_; }
  const Eigen::VectorXd& outcomes() const { return outcomes_; }
  const Eigen::VectorXd& costs() const { return costs_; }
  const Eigen::VectorXi& factual_treatments() const { return factual_; }

  // Sum of all installation costs (cost of treating every unit).
  double universal_cost() const { return universal_cost_; }

  // Empirical fraction of outcome units with S_i = s.
  double subgroup_fraction(int s) const;

  // Load-time diagnostics (e.g. all-zero interference rows). Not errors.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<OutcomeUnit> outcome_units_;
  std::vector<InterventionUnit> intervention_units_;
  Eigen::MatrixXd interference_;
  Eigen::MatrixXd outcome_covariates_;
  Eigen::MatrixXd intervention_covariates_;
  Eigen::VectorXi subgroups_;
  Eigen::VectorXd outcomes_;
  Eigen::VectorXd costs_;
  Eigen::VectorXi factual_;
  double universal_cost_ = 0.0;
  std::vector<std::string> warnings_;
};

// Exposure received by each outcome unit under a binary treatment vector:
// (1/J) sum_j H_ij A_j.
Eigen::VectorXd exposure(const Dataset& dataset, const Eigen::VectorXd& treatments);

// Same contraction with treatment probabilities in place of realized
// treatments: (1/J) sum_j H_ij e_j.
Eigen::VectorXd expected_exposure(const Dataset& dataset,
                                  const Eigen::VectorXd& propensities);

// H_j-weighted mean of the stacked (subgroup, covariates) vectors:
// (1/n) sum_i H_ij (S_i, X_i). Length p + 1, subgroup first.
Eigen::VectorXd summary_functional(const Dataset& dataset, Eigen::Index j);

// Total expected spend of a policy: sum_j pi_j c_j.
double policy_cost(const Dataset& dataset, const Policy& policy);

// Throws unless every probability lies in [0, 1] and the length matches J.
void validate_policy(const Dataset& dataset, const Policy& policy);

// In-place column standardization to mean zero, unit variance (population
// convention, so the map is idempotent). Zero-variance columns are centered
// only.
void standardize_columns(Eigen::MatrixXd& columns);

}  // namespace fairbni
