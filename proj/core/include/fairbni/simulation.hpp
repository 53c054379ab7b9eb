#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairbni/estimation.hpp"
#include "fairbni/fair_policy.hpp"
#include "fairbni/rng.hpp"

namespace fairbni {

enum class SubgroupRule {
  covariate_median,  // S = 1 on the upper half of the first covariate
  alternating,       // S_i = i mod 2, exactly balanced
  bernoulli,         // independent fair coin
};

struct SimConfig {
  Eigen::Index n = 2000;
  Eigen::Index J = 40;
  Eigen::Index p = 5;
  Eigen::Index q = 5;
  Eigen::VectorXd theta0;  // (alpha, beta), length 2(p+1)
  Eigen::VectorXd gamma0;  // (intercept, slopes), length q+1
  double snr = 3.0;        // +inf switches the noise off
  int replications = 200;
  std::uint64_t seed = 20260801;
  double treated_rate = 0.23;
  double mean_outcome = 0.046;
  double calibration_tolerance = 0.01;
  double kernel_scale = 0.2;  // exposure kernel length on the unit square
  SubgroupRule subgroup_rule = SubgroupRule::covariate_median;
  int K = 0;  // Pareto grid size; 0 -> ceil(sqrt(n)) capped at 200
  double lambda = 1.0;
  int threads = 0;  // 0 -> hardware concurrency

  Eigen::VectorXd alpha() const { return theta0.head(p + 1); }
  Eigen::VectorXd beta() const { return theta0.tail(p + 1); }
  void validate() const;

  // Desk-scale defaults with the asymmetric-effects regime: group 0 strongly
  // protected, group 1 mildly harmed, overall protective.
  static SimConfig desk_default();
  // Full-scale setup: n = 35036, J = 459, the reference parameter vectors,
  // 1000 replications.
  static SimConfig full_scale();
};

// Everything held fixed across replications: covariates, interference map,
// subgroups, costs. Covariates are already standardized.
struct SimStructure {
  Eigen::MatrixXd outcome_covariates;       // n x p
  Eigen::MatrixXd intervention_covariates;  // J x q
  Eigen::MatrixXd interference;             // n x J, mean all-treated exposure 1
  Eigen::VectorXi subgroups;
  Eigen::VectorXd costs;
};

SimStructure draw_structure(const SimConfig& config, Rng& rng);

struct GroundTruth {
  PropensityModel propensity;
  OutcomeModel outcome;
};

struct GeneratedData {
  Dataset dataset;
  GroundTruth truth;
};

// Draws a complete synthetic dataset: fixed structure plus treatments from
// the logistic model and outcomes from the linear exposure model with
// variance Var(linear predictor) / snr.
GeneratedData generate_dataset(const SimConfig& config, Rng& rng);

// Assembles a dataset from a fixed structure with freshly drawn treatments
// and outcomes (the per-replication step).
Dataset draw_treatments_outcomes(const SimConfig& config,
                                 const SimStructure& structure, Rng& rng);

// Bisects the gamma intercept until the mean propensity matches treated_rate,
// then the alpha intercept until the mean outcome under expected exposure
// matches mean_outcome, both within half the configured tolerance. Uses the
// same structure draw as run_monte_carlo (stream 0 of the seed).
SimConfig calibrate_intercepts(const SimConfig& config);
SimConfig calibrate_intercepts(const SimConfig& config,
                               const SimStructure& structure);

enum class Method { fair, welfare_max, optimal, factual, fair_oracle };

std::string method_name(Method method);

struct MonteCarloOptions {
  std::vector<Method> methods{Method::fair, Method::welfare_max, Method::optimal,
                              Method::factual};
  std::vector<double> budgets{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> disparity_caps;  // optional second sweep axis
  double cap_budget = 0.5;             // budget held fixed during cap sweeps
  PolicyMode mode = PolicyMode::clean_slate;
  bool round_policies = false;
};

struct ReplicationRecord {
  int replication = 0;
  Method method = Method::fair;
  double sweep_value = 0.0;  // budget fraction, or cap when is_cap_sweep
  bool is_cap_sweep = false;
  bool feasible = false;
  double w0 = 0.0;
  double w1 = 0.0;
  double disparity = 0.0;
  double cost = 0.0;
};

struct CellStats {
  double mean_w0 = 0.0, sd_w0 = 0.0;
  double mean_w1 = 0.0, sd_w1 = 0.0;
  double mean_disparity = 0.0, sd_disparity = 0.0;
  int count = 0;  // feasible replications aggregated
};

struct CurveKey {
  Method method;
  bool is_cap_sweep;
  double sweep_value;
  bool operator<(const CurveKey& other) const {
    if (is_cap_sweep != other.is_cap_sweep) return is_cap_sweep < other.is_cap_sweep;
    if (method != other.method) return method < other.method;
    return sweep_value < other.sweep_value;
  }
};

struct EffectSummary {
  double mean_overall = 0.0, mean_group0 = 0.0, mean_group1 = 0.0;
  double pct_protective_overall = 0.0, pct_protective_group0 = 0.0,
         pct_protective_group1 = 0.0;
};

struct SimResult {
  int replications_requested = 0;
  int replications_completed = 0;
  std::vector<std::string> failures;
  EffectSummary truth_summary;
  std::vector<ReplicationRecord> records;  // ordered by replication, then cell
  std::map<CurveKey, CellStats> curves;
};

// Study protocol: the structure is drawn once; each replication
// redraws treatments and outcomes, refits the models, learns each method's
// policy and evaluates it against the ground-truth effect table. Failed
// replications are skipped; more than 5 % failures aborts the run.
SimResult run_monte_carlo(const SimConfig& config, const MonteCarloOptions& options);

}  // namespace fairbni
