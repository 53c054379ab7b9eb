#include "fairbni/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace fairbni {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Eigen::MatrixXd draw_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = rng.normal();
  }
  return out;
}

Eigen::MatrixXd draw_locations(Eigen::Index count, Rng& rng) {
  Eigen::MatrixXd out(count, 2);
  for (Eigen::Index r = 0; r < count; ++r) {
    out(r, 0) = rng.uniform();
    out(r, 1) = rng.uniform();
  }
  return out;
}

Eigen::VectorXi assign_subgroups(const SimConfig& config,
                                 const Eigen::MatrixXd& covariates, Rng& rng) {
  const Eigen::Index n = covariates.rows();
  Eigen::VectorXi subgroups(n);
  switch (config.subgroup_rule) {
    case SubgroupRule::alternating:
      for (Eigen::Index i = 0; i < n; ++i) subgroups(i) = static_cast<int>(i % 2);
      break;
    case SubgroupRule::bernoulli:
      for (Eigen::Index i = 0; i < n; ++i) subgroups(i) = rng.bernoulli(0.5) ? 1 : 0;
      break;
    case SubgroupRule::covariate_median: {
      // Rank split on the first covariate: the upper half is group 1.
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (covariates(a, 0) != covariates(b, 0)) {
          return covariates(a, 0) < covariates(b, 0);
        }
        return a < b;
      });
      subgroups.setZero();
      for (Eigen::Index r = n / 2; r < n; ++r) subgroups(order[static_cast<std::size_t>(r)]) = 1;
      break;
    }
  }
  return subgroups;
}

Eigen::VectorXd propensities_for(const SimConfig& config,
                                 const SimStructure& structure) {
  Eigen::VectorXd lp =
      (structure.intervention_covariates * config.gamma0.tail(config.q)).array() +
      config.gamma0(0);
  return lp.unaryExpr([](double t) { return logistic(t); });
}

double mean_propensity(const SimConfig& config, const SimStructure& structure,
                       double gamma_intercept) {
  Eigen::VectorXd lp =
      (structure.intervention_covariates * config.gamma0.tail(config.q)).array() +
      gamma_intercept;
  return lp.unaryExpr([](double t) { return logistic(t); }).mean();
}

// Monotone-increasing root find used for both intercepts. f must be
// increasing in its argument.
template <typename F>
double bisect_intercept(F f, double start, double tol, const char* what) {
  double f_start = f(start);
  if (std::abs(f_start) <= tol) return start;

  double lo = start, hi = start;
  double step = 1.0;
  int spent = 0;
  if (f_start > 0.0) {
    while (f(lo) > 0.0) {
      lo -= step;
      step *= 2.0;
      if (++spent >= 100) {
        throw CalibrationError(std::string(what) +
                               ": failed to bracket the target after 100 iterations");
      }
    }
  } else {
    while (f(hi) < 0.0) {
      hi += step;
      step *= 2.0;
      if (++spent >= 100) {
        throw CalibrationError(std::string(what) +
                               ": failed to bracket the target after 100 iterations");
      }
    }
  }
  for (; spent < 100; ++spent) {
    const double mid = 0.5 * (lo + hi);
    const double val = f(mid);
    if (std::abs(val) <= tol) return mid;
    if (val > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw CalibrationError(std::string(what) +
                         ": bisection did not reach tolerance in 100 iterations");
}

struct CellAccumulator {
  double sum_w0 = 0.0, sumsq_w0 = 0.0;
  double sum_w1 = 0.0, sumsq_w1 = 0.0;
  double sum_d = 0.0, sumsq_d = 0.0;
  int count = 0;

  void add(const ReplicationRecord& record) {
    sum_w0 += record.w0;
    sumsq_w0 += record.w0 * record.w0;
    sum_w1 += record.w1;
    sumsq_w1 += record.w1 * record.w1;
    sum_d += record.disparity;
    sumsq_d += record.disparity * record.disparity;
    ++count;
  }

  CellStats stats() const {
    CellStats out;
    out.count = count;
    if (count == 0) return out;
    const double n = static_cast<double>(count);
    auto sd = [&](double sum, double sumsq) {
      if (count < 2) return 0.0;
      const double var = (sumsq - sum * sum / n) / (n - 1.0);
      return var > 0.0 ? std::sqrt(var) : 0.0;
    };
    out.mean_w0 = sum_w0 / n;
    out.sd_w0 = sd(sum_w0, sumsq_w0);
    out.mean_w1 = sum_w1 / n;
    out.sd_w1 = sd(sum_w1, sumsq_w1);
    out.mean_disparity = sum_d / n;
    out.sd_disparity = sd(sum_d, sumsq_d);
    return out;
  }
};

ReplicationRecord make_record(int replication, Method method, double sweep_value,
                              bool is_cap, const FairSolveReport& solve) {
  ReplicationRecord record;
  record.replication = replication;
  record.method = method;
  record.sweep_value = sweep_value;
  record.is_cap_sweep = is_cap;
  record.feasible = solve.feasible;
  if (solve.feasible) {
    record.w0 = solve.report.w0;
    record.w1 = solve.report.w1;
    record.disparity = solve.report.disparity;
    record.cost = solve.report.cost;
  }
  return record;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 4 || J < 2 || p < 1 || q < 1) {
    throw ValidationError("simulation needs n >= 4, J >= 2, p >= 1, q >= 1");
  }
  if (theta0.size() != 2 * (p + 1)) {
    throw ValidationError("theta0 must have length 2(p+1) = " +
                          std::to_string(2 * (p + 1)) + ", got " +
                          std::to_string(theta0.size()));
  }
  if (gamma0.size() != q + 1) {
    throw ValidationError("gamma0 must have length q+1 = " +
                          std::to_string(q + 1) + ", got " +
                          std::to_string(gamma0.size()));
  }
  if (!(snr > 0.0)) throw ValidationError("snr must be positive");
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (!(treated_rate > 0.0) || !(treated_rate < 1.0)) {
    throw ValidationError("treated_rate must lie in (0, 1)");
  }
  if (!(calibration_tolerance > 0.0)) {
    throw ValidationError("calibration tolerance must be positive");
  }
  if (!(kernel_scale > 0.0)) throw ValidationError("kernel scale must be positive");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
}

SimConfig SimConfig::desk_default() {
  SimConfig config;
  config.theta0.resize(12);
  // alpha: intercept (calibrated later) + baseline slopes.
  config.theta0 << 0.0, 0.40, -0.30, 0.20, 0.25, -0.15,
      // beta: negative intercept, strong loading on the subgroup-defining
      // covariate; group 0 gains, group 1 loses, overall protective.
      -0.30, 1.00, 0.15, -0.10, 0.08, 0.12;
  config.gamma0.resize(6);
  config.gamma0 << -1.2, -0.45, 0.30, -0.25, 0.40, 0.20;
  return config;
}

SimConfig SimConfig::full_scale() {
  SimConfig config;
  config.n = 35036;
  config.J = 459;
  config.p = 13;
  config.q = 19;
  config.replications = 1000;
  config.theta0.resize(28);
  config.theta0 << 0.649, 0.963, 0.33, 0.411, -0.481, 0.733, 0.566, 0.343,
      0.058, -0.934, -0.277, -0.995, 0.709, 0.419, -0.505,
      0.517, 0.03, -0.723, 0.854, -0.496, -0.393, 0.316,
      0.487, -0.444, -0.653, -0.052, 0.931, 0.143;
  config.gamma0.resize(20);
  config.gamma0 << -0.997, -0.447, -0.04, 0.021, 0.806, -0.689, -0.823,
      -0.909, -0.658, -0.101, 0.908, 0.911, 0.193, 0.408,
      -0.835, 0.392, 0.625, 0.13, 0.022, 0.073;
  return config;
}

SimStructure draw_structure(const SimConfig& config, Rng& rng) {
  config.validate();
  SimStructure structure;
  structure.outcome_covariates = draw_normal_matrix(config.n, config.p, rng);
  standardize_columns(structure.outcome_covariates);
  structure.intervention_covariates = draw_normal_matrix(config.J, config.q, rng);
  standardize_columns(structure.intervention_covariates);

  const Eigen::MatrixXd outcome_loc = draw_locations(config.n, rng);
  const Eigen::MatrixXd intervention_loc = draw_locations(config.J, rng);
  structure.interference.resize(config.n, config.J);
  for (Eigen::Index i = 0; i < config.n; ++i) {
    for (Eigen::Index j = 0; j < config.J; ++j) {
      const double dx = outcome_loc(i, 0) - intervention_loc(j, 0);
      const double dy = outcome_loc(i, 1) - intervention_loc(j, 1);
      structure.interference(i, j) =
          std::exp(-std::sqrt(dx * dx + dy * dy) / config.kernel_scale);
    }
  }
  // Scale so the mean exposure under all-treated is 1.
  const double total = structure.interference.sum();
  structure.interference *=
      static_cast<double>(config.n) * static_cast<double>(config.J) / total;

  structure.costs.resize(config.J);
  for (Eigen::Index j = 0; j < config.J; ++j) {
    structure.costs(j) = 100.0 * std::exp(0.5 * rng.normal());
  }

  structure.subgroups = assign_subgroups(config, structure.outcome_covariates, rng);
  return structure;
}

Dataset draw_treatments_outcomes(const SimConfig& config,
                                 const SimStructure& structure, Rng& rng) {
  const Eigen::VectorXd props = propensities_for(config, structure);
  Eigen::VectorXd treatments(config.J);
  for (Eigen::Index j = 0; j < config.J; ++j) {
    treatments(j) = rng.bernoulli(props(j)) ? 1.0 : 0.0;
  }

  const Eigen::VectorXd abar =
      structure.interference * treatments / static_cast<double>(config.J);
  const Eigen::VectorXd alpha = config.alpha();
  const Eigen::VectorXd beta = config.beta();
  Eigen::VectorXd predictor =
      (structure.outcome_covariates * alpha.tail(config.p)).array() + alpha(0);
  Eigen::VectorXd effect =
      (structure.outcome_covariates * beta.tail(config.p)).array() + beta(0);
  predictor += abar.cwiseProduct(effect);

  Eigen::VectorXd outcomes = predictor;
  if (std::isfinite(config.snr)) {
    const double mean = predictor.mean();
    const double var =
        (predictor.array() - mean).square().sum() / static_cast<double>(config.n);
    const double sd = std::sqrt(var / config.snr);
    for (Eigen::Index i = 0; i < config.n; ++i) outcomes(i) += sd * rng.normal();
  }

  std::vector<OutcomeUnit> outcome_units;
  outcome_units.reserve(static_cast<std::size_t>(config.n));
  for (Eigen::Index i = 0; i < config.n; ++i) {
    outcome_units.push_back(OutcomeUnit{
        "o" + std::to_string(i + 1), structure.outcome_covariates.row(i).transpose(),
        structure.subgroups(i), outcomes(i)});
  }
  std::vector<InterventionUnit> intervention_units;
  intervention_units.reserve(static_cast<std::size_t>(config.J));
  for (Eigen::Index j = 0; j < config.J; ++j) {
    intervention_units.push_back(InterventionUnit{
        "i" + std::to_string(j + 1),
        structure.intervention_covariates.row(j).transpose(),
        treatments(j) == 1.0 ? 1 : 0, structure.costs(j)});
  }
  return Dataset(std::move(outcome_units), std::move(intervention_units),
                 InterferenceMap{structure.interference});
}

GeneratedData generate_dataset(const SimConfig& config, Rng& rng) {
  const SimStructure structure = draw_structure(config, rng);
  Dataset dataset = draw_treatments_outcomes(config, structure, rng);
  GroundTruth truth;
  truth.propensity.intercept = config.gamma0(0);
  truth.propensity.coefficients = config.gamma0.tail(config.q);
  truth.outcome.alpha = config.alpha();
  truth.outcome.beta = config.beta();
  return GeneratedData{std::move(dataset), std::move(truth)};
}

SimConfig calibrate_intercepts(const SimConfig& config) {
  Rng rng(config.seed, 0);
  return calibrate_intercepts(config, draw_structure(config, rng));
}

SimConfig calibrate_intercepts(const SimConfig& config,
                               const SimStructure& structure) {
  config.validate();
  SimConfig calibrated = config;
  const double tol = 0.5 * config.calibration_tolerance;

  calibrated.gamma0(0) = bisect_intercept(
      [&](double t) {
        return mean_propensity(config, structure, t) - config.treated_rate;
      },
      config.gamma0(0), tol, "propensity intercept");

  const Eigen::VectorXd props = propensities_for(calibrated, structure);
  const Eigen::VectorXd ebar =
      structure.interference * props / static_cast<double>(config.J);
  const Eigen::VectorXd alpha = config.alpha();
  const Eigen::VectorXd beta = config.beta();
  const Eigen::VectorXd effect =
      ((structure.outcome_covariates * beta.tail(config.p)).array() + beta(0))
          .matrix();
  const double base_mean =
      ((structure.outcome_covariates * alpha.tail(config.p)).array() +
       ebar.cwiseProduct(effect).array())
          .mean();
  calibrated.theta0(0) = bisect_intercept(
      [&](double a) { return a + base_mean - config.mean_outcome; },
      config.theta0(0), tol, "outcome intercept");
  return calibrated;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::fair: return "fair";
    case Method::welfare_max: return "welfare_max";
    case Method::optimal: return "optimal";
    case Method::factual: return "factual";
    case Method::fair_oracle: return "fair_oracle";
  }
  throw InternalError("unknown method");
}

SimResult run_monte_carlo(const SimConfig& config, const MonteCarloOptions& options) {
  config.validate();
  if (options.budgets.empty() && options.disparity_caps.empty()) {
    throw ValidationError("Monte Carlo needs at least one budget or cap");
  }
  for (double b : options.budgets) {
    if (!(b > 0.0) || b > 1.0) {
      throw ValidationError("budget fractions must lie in (0, 1]");
    }
  }
  for (double c : options.disparity_caps) {
    if (c < 0.0) throw ValidationError("disparity caps must be >= 0");
  }

  Rng structure_rng(config.seed, 0);
  const SimStructure structure = draw_structure(config, structure_rng);

  GroundTruth truth;
  truth.propensity.intercept = config.gamma0(0);
  truth.propensity.coefficients = config.gamma0.tail(config.q);
  truth.outcome.alpha = config.alpha();
  truth.outcome.beta = config.beta();

  // The true effect table depends only on the fixed structure.
  Rng scratch_rng(config.seed, 0);
  const Dataset base_dataset =
      draw_treatments_outcomes(config, structure, scratch_rng);
  const EffectTable truth_effects = total_effects(base_dataset, truth.outcome);

  SimResult result;
  result.replications_requested = config.replications;
  const double inv_j = 1.0 / static_cast<double>(config.J);
  result.truth_summary.mean_overall = truth_effects.overall.mean();
  result.truth_summary.mean_group0 = truth_effects.group0.mean();
  result.truth_summary.mean_group1 = truth_effects.group1.mean();
  result.truth_summary.pct_protective_overall =
      (truth_effects.overall.array() < 0.0).cast<double>().sum() * inv_j;
  result.truth_summary.pct_protective_group0 =
      (truth_effects.group0.array() < 0.0).cast<double>().sum() * inv_j;
  result.truth_summary.pct_protective_group1 =
      (truth_effects.group1.array() < 0.0).cast<double>().sum() * inv_j;

  const std::vector<Method> methods = options.methods;
  auto wants = [&](Method m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  };

  // One record batch per replication so the gather order never depends on
  // thread scheduling.
  std::vector<std::vector<ReplicationRecord>> batches(
      static_cast<std::size_t>(config.replications));
  std::vector<std::string> failures(static_cast<std::size_t>(config.replications));

  auto run_replication = [&](int rep_index) {
    Rng rng(config.seed, static_cast<std::uint64_t>(rep_index + 1));
    std::vector<ReplicationRecord>& batch =
        batches[static_cast<std::size_t>(rep_index)];
    try {
      const Dataset dataset = draw_treatments_outcomes(config, structure, rng);
      EffectTable estimated;
      const bool needs_fit = wants(Method::fair) || wants(Method::welfare_max) ||
                             wants(Method::optimal);
      if (needs_fit) {
        const PropensityModel propensity = fit_propensity(dataset);
        const OutcomeModel outcome = fit_outcome_alearning(dataset, propensity);
        estimated = total_effects(dataset, outcome);
      }

      auto solve_method = [&](Method m, double budget,
                              std::optional<double> cap) -> FairSolveReport {
        SolveConfig solve_config;
        solve_config.budget = budget;
        solve_config.mode = options.mode;
        solve_config.K = config.K;
        solve_config.lambda = config.lambda;
        solve_config.rounding =
            options.round_policies ? Rounding::threshold_repair : Rounding::none;
        solve_config.disparity_cap = cap;
        // The factual policy ignores the table, so it never needs a fit.
        const EffectTable& table =
            (m == Method::fair_oracle || m == Method::factual) ? truth_effects
                                                               : estimated;
        switch (m) {
          case Method::fair:
          case Method::fair_oracle: {
            const ParetoGrid grid = build_grid_for(table, dataset, solve_config);
            return solve_fair(table, dataset, grid, solve_config);
          }
          case Method::welfare_max:
            return solve_welfare_max(table, dataset, table.p0, solve_config);
          case Method::optimal:
            return solve_optimal(table, dataset, solve_config);
          case Method::factual:
            return evaluate_factual(table, dataset);
        }
        throw InternalError("unknown method");
      };

      // Learned policies are scored against the ground truth.
      auto evaluate_on_truth = [&](FairSolveReport solve) {
        if (solve.feasible) {
          solve.report = evaluate_policy(truth_effects, dataset, solve.policy);
        }
        return solve;
      };

      for (double budget : options.budgets) {
        for (Method m : methods) {
          const FairSolveReport solve =
              evaluate_on_truth(solve_method(m, budget, std::nullopt));
          batch.push_back(make_record(rep_index + 1, m, budget, false, solve));
        }
      }
      for (double cap : options.disparity_caps) {
        for (Method m : methods) {
          // The cap binds the welfare-maximizing comparator; other methods
          // are re-evaluated at the fixed cap budget for reference.
          const std::optional<double> applied_cap =
              m == Method::welfare_max ? std::optional<double>(cap) : std::nullopt;
          const FairSolveReport solve = evaluate_on_truth(
              solve_method(m, options.cap_budget, applied_cap));
          batch.push_back(make_record(rep_index + 1, m, cap, true, solve));
        }
      }
    } catch (const Error& error) {
      batch.clear();
      failures[static_cast<std::size_t>(rep_index)] =
          "replication " + std::to_string(rep_index + 1) + ": " + error.what();
    }
  };

  int thread_count = config.threads > 0
                         ? config.threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (thread_count < 1) thread_count = 1;
  thread_count = std::min(thread_count, config.replications);
  if (thread_count == 1) {
    for (int r = 0; r < config.replications; ++r) run_replication(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) {
      workers.emplace_back([&]() {
        while (true) {
          const int r = next.fetch_add(1);
          if (r >= config.replications) break;
          run_replication(r);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  std::map<CurveKey, CellAccumulator> accumulators;
  for (int r = 0; r < config.replications; ++r) {
    const std::string& failure = failures[static_cast<std::size_t>(r)];
    if (!failure.empty()) {
      result.failures.push_back(failure);
      continue;
    }
    ++result.replications_completed;
    for (const ReplicationRecord& record : batches[static_cast<std::size_t>(r)]) {
      result.records.push_back(record);
      if (record.feasible) {
        accumulators[CurveKey{record.method, record.is_cap_sweep,
                              record.sweep_value}]
            .add(record);
      }
    }
  }
  for (const auto& [key, acc] : accumulators) result.curves[key] = acc.stats();

  const double failure_rate =
      static_cast<double>(result.failures.size()) /
      static_cast<double>(config.replications);
  if (failure_rate > 0.05) {
    throw RunError("Monte Carlo aborted: " +
                   std::to_string(result.failures.size()) + " of " +
                   std::to_string(config.replications) +
                   " replications failed (" +
                   (result.failures.empty() ? std::string("")
                                            : result.failures.front()) +
                   ")");
  }
  return result;
}

}  // namespace fairbni
