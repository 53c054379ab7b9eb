#include "fairbni/model.hpp"

#include <cmath>
#include <sstream>

namespace fairbni {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw ValidationError(std::string(what) + " contains NaN or Inf");
  }
}

}  // namespace

Dataset::Dataset(std::vector<OutcomeUnit> outcome_units,
                 std::vector<InterventionUnit> intervention_units,
                 InterferenceMap interference)
    : outcome_units_(std::move(outcome_units)),
      intervention_units_(std::move(intervention_units)),
      interference_(std::move(interference.entries)) {
  const Eigen::Index n = static_cast<Eigen::Index>(outcome_units_.size());
  const Eigen::Index J = static_cast<Eigen::Index>(intervention_units_.size());
  if (n == 0 || J == 0) {
    throw ValidationError("dataset needs at least one outcome and one intervention unit");
  }
  if (interference_.rows() != n || interference_.cols() != J) {
    std::ostringstream msg;
    msg << "interference map is " << interference_.rows() << "x"
        << interference_.cols() << ", expected " << n << "x" << J;
    throw DimensionError(msg.str());
  }
  require_finite(interference_, "interference map");
  if ((interference_.array() < 0.0).any()) {
    throw ValidationError("interference map has negative entries");
  }

  const Eigen::Index p = outcome_units_.front().covariates.size();
  const Eigen::Index q = intervention_units_.front().covariates.size();
  outcome_covariates_.resize(n, p);
  subgroups_.resize(n);
  outcomes_.resize(n);
  Eigen::Index n_group1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const OutcomeUnit& u = outcome_units_[static_cast<std::size_t>(i)];
    if (u.covariates.size() != p) {
      throw DimensionError("outcome unit '" + u.id + "' has " +
                           std::to_string(u.covariates.size()) +
                           " covariates, expected " + std::to_string(p));
    }
    if (u.subgroup != 0 && u.subgroup != 1) {
      throw ValidationError("outcome unit '" + u.id + "' has subgroup " +
                            std::to_string(u.subgroup) + ", expected 0 or 1");
    }
    outcome_covariates_.row(i) = u.covariates.transpose();
    subgroups_(i) = u.subgroup;
    outcomes_(i) = u.outcome;
    n_group1 += u.subgroup;
  }
  if (n_group1 == 0 || n_group1 == n) {
    throw ValidationError("both subgroups must be nonempty");
  }

  intervention_covariates_.resize(J, q);
  costs_.resize(J);
  factual_.resize(J);
  std::vector<std::string> bad_cost_ids;
  for (Eigen::Index j = 0; j < J; ++j) {
    const InterventionUnit& u = intervention_units_[static_cast<std::size_t>(j)];
    if (u.covariates.size() != q) {
      throw DimensionError("intervention unit '" + u.id + "' has " +
                           std::to_string(u.covariates.size()) +
                           " covariates, expected " + std::to_string(q));
    }
    if (u.factual_treatment != 0 && u.factual_treatment != 1) {
      throw ValidationError("intervention unit '" + u.id +
                            "' has factual treatment outside {0,1}");
    }
    if (!(u.cost > 0.0) || !std::isfinite(u.cost)) {
      bad_cost_ids.push_back(u.id);
    }
    intervention_covariates_.row(j) = u.covariates.transpose();
    costs_(j) = u.cost;
    factual_(j) = u.factual_treatment;
  }
  if (!bad_cost_ids.empty()) {
    std::ostringstream msg;
    msg << "intervention units must have cost > 0; offending ids:";
    for (const auto& id : bad_cost_ids) msg << " " << id;
    throw ValidationError(msg.str());
  }
  require_finite(outcome_covariates_, "outcome covariates");
  require_finite(intervention_covariates_, "intervention covariates");
  require_finite(outcomes_, "outcomes");

  universal_cost_ = costs_.sum();

  for (Eigen::Index i = 0; i < n; ++i) {
    if (interference_.row(i).maxCoeff() == 0.0) {
      warnings_.push_back("outcome unit '" +
                          outcome_units_[static_cast<std::size_t>(i)].id +
                          "' is exposed to no intervention unit (all-zero row)");
    }
  }
}

double Dataset::subgroup_fraction(int s) const {
  if (s != 0 && s != 1) throw ValidationError("subgroup must be 0 or 1");
  const double n1 = static_cast<double>(subgroups_.sum());
  const double n = static_cast<double>(subgroups_.size());
  return s == 1 ? n1 / n : (n - n1) / n;
}

Eigen::VectorXd exposure(const Dataset& dataset, const Eigen::VectorXd& treatments) {
  if (treatments.size() != dataset.J()) {
    throw DimensionError("treatment vector length " +
                         std::to_string(treatments.size()) + ", expected " +
                         std::to_string(dataset.J()));
  }
  for (Eigen::Index j = 0; j < treatments.size(); ++j) {
    if (treatments(j) != 0.0 && treatments(j) != 1.0) {
      throw ValidationError("treatments must be binary");
    }
  }
  return dataset.interference() * treatments / static_cast<double>(dataset.J());
}

Eigen::VectorXd expected_exposure(const Dataset& dataset,
                                  const Eigen::VectorXd& propensities) {
  if (propensities.size() != dataset.J()) {
    throw DimensionError("propensity vector length " +
                         std::to_string(propensities.size()) + ", expected " +
                         std::to_string(dataset.J()));
  }
  if ((propensities.array() < 0.0).any() || (propensities.array() > 1.0).any()) {
    throw ValidationError("propensities must lie in [0, 1]");
  }
  return dataset.interference() * propensities / static_cast<double>(dataset.J());
}

Eigen::VectorXd summary_functional(const Dataset& dataset, Eigen::Index j) {
  if (j < 0 || j >= dataset.J()) {
    throw DimensionError("intervention index " + std::to_string(j) +
                         " out of range [0, " + std::to_string(dataset.J()) + ")");
  }
  const Eigen::VectorXd h = dataset.interference().col(j);
  const double n = static_cast<double>(dataset.n());
  Eigen::VectorXd eta(dataset.p() + 1);
  eta(0) = h.dot(dataset.subgroups().cast<double>()) / n;
  eta.tail(dataset.p()) = dataset.outcome_covariates().transpose() * h / n;
  return eta;
}

double policy_cost(const Dataset& dataset, const Policy& policy) {
  validate_policy(dataset, policy);
  return policy.probabilities.dot(dataset.costs());
}

void validate_policy(const Dataset& dataset, const Policy& policy) {
  if (policy.probabilities.size() != dataset.J()) {
    throw DimensionError("policy length " +
                         std::to_string(policy.probabilities.size()) +
                         ", expected " + std::to_string(dataset.J()));
  }
  if (!policy.probabilities.allFinite() ||
      (policy.probabilities.array() < 0.0).any() ||
      (policy.probabilities.array() > 1.0).any()) {
    throw ValidationError("policy probabilities must lie in [0, 1]");
  }
}

void standardize_columns(Eigen::MatrixXd& columns) {
  const double n = static_cast<double>(columns.rows());
  if (columns.rows() == 0) return;
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    const double mean = columns.col(c).mean();
    columns.col(c).array() -= mean;
    const double var = columns.col(c).squaredNorm() / n;
    if (var > 1e-24) {
      columns.col(c) /= std::sqrt(var);
    }
  }
}

}  // namespace fairbni
