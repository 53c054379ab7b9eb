// Command-line driver: estimation, policy solves, budget/cap sweeps, Monte
// Carlo simulation and the desk-scale enumeration oracle.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairbni/io.hpp"
#include "fairbni/version.hpp"
#include "json.hpp"

namespace {

using namespace fairbni;

struct DatasetFlags {
  std::string outcome_units;
  std::string intervention_units;
  std::string interference;
  std::string effects_file;

  void attach(CLI::App* cmd, bool required = true) {
    auto* o = cmd->add_option("--outcome-units", outcome_units,
                              "Outcome unit CSV (id,subgroup,outcome,covariates...)");
    auto* i = cmd->add_option("--intervention-units", intervention_units,
                              "Intervention unit CSV (id,treated,cost,covariates...)");
    auto* h = cmd->add_option("--interference", interference,
                              "Interference CSV, dense or triplet layout");
    if (required) {
      o->required();
      i->required();
      h->required();
    }
    cmd->add_option("--effects", effects_file,
                    "Reuse a JSON effect table instead of refitting");
  }

  std::vector<std::string> input_paths() const {
    std::vector<std::string> paths{outcome_units, intervention_units, interference};
    if (!effects_file.empty()) paths.push_back(effects_file);
    return paths;
  }
};

struct SolveFlags {
  double budget = 0.5;
  bool budget_absolute = false;
  std::string mode = "clean";
  int grid_size = 0;
  double lambda = 1.0;
  bool frontier_unconstrained = false;
  bool round = false;
  bool budget_new_only = false;
  double nu = -1.0;  // <0 means default p0
  double min_welfare_ref = -1.0;
  double disparity_cap = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--budget", budget,
                    "Budget as a fraction of the universal cost (see --budget-absolute)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--budget-absolute", budget_absolute,
                  "Interpret --budget in currency units");
    cmd->add_option("--mode", mode, "clean or augment")
        ->check(CLI::IsMember({"clean", "augment"}));
    cmd->add_option("--K", grid_size, "Pareto grid size (0 = ceil(sqrt(n)))")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--lambda", lambda, "Frontier slack parameter")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--frontier-unconstrained", frontier_unconstrained,
                  "Compute gridpoint optima over the box only (no budget)");
    cmd->add_flag("--round", round, "Threshold-and-repair the returned policy");
    cmd->add_flag("--budget-new-only", budget_new_only,
                  "Augmentation accounting: budget covers new installs only");
    cmd->add_option("--nu", nu, "Welfare-max weight on group 0 (default p0)");
    cmd->add_option("--min-welfare-ref", min_welfare_ref,
                    "Reference budget fraction; caps group-0 welfare at the "
                    "welfare-max value achieved there");
    cmd->add_option("--disparity-cap", disparity_cap,
                    "Disparity ceiling for welfare-max solves");
  }

  SolveConfig to_config() const {
    SolveConfig config;
    config.budget = budget;
    config.budget_is_fraction = !budget_absolute;
    config.mode = mode == "augment" ? PolicyMode::augmentation : PolicyMode::clean_slate;
    config.K = grid_size;
    config.lambda = lambda;
    config.rounding = round ? Rounding::threshold_repair : Rounding::none;
    config.frontier_unconstrained = frontier_unconstrained;
    config.budget_new_only = budget_new_only;
    if (disparity_cap >= 0.0) config.disparity_cap = disparity_cap;
    return config;
  }
};

struct LoadedProblem {
  Dataset dataset;
  EffectTable effects;
};

LoadedProblem load_problem(const DatasetFlags& flags) {
  Dataset dataset = load_dataset(DatasetPaths{
      flags.outcome_units, flags.intervention_units, flags.interference});
  for (const std::string& warning : dataset.warnings()) {
    std::cerr << "warning: " << warning << "\n";
  }
  EffectTable effects;
  if (!flags.effects_file.empty()) {
    effects = effect_table_from_json_file(flags.effects_file, dataset);
  } else {
    const PropensityModel propensity = fit_propensity(dataset);
    const OutcomeModel outcome = fit_outcome_alearning(dataset, propensity);
    effects = total_effects(dataset, outcome);
  }
  return LoadedProblem{std::move(dataset), std::move(effects)};
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  return dir;
}

FairSolveReport dispatch_solve(const std::string& method, const LoadedProblem& problem,
                               SolveConfig config, const SolveFlags& flags) {
  if (method == "fair") {
    if (flags.min_welfare_ref > 0.0) {
      SolveConfig reference = config;
      reference.budget = flags.min_welfare_ref;
      reference.budget_is_fraction = true;
      reference.disparity_cap.reset();
      const FairSolveReport anchor = solve_welfare_max(
          problem.effects, problem.dataset, problem.effects.p0, reference);
      if (!anchor.feasible) {
        throw InfeasibleError("reference welfare-max solve is infeasible");
      }
      config.min_welfare_target = anchor.report.w0;
    }
    const ParetoGrid grid = build_grid_for(problem.effects, problem.dataset, config);
    return solve_fair(problem.effects, problem.dataset, grid, config);
  }
  if (method == "welfare" || method == "welfare_max") {
    const double nu = flags.nu >= 0.0 ? flags.nu : problem.effects.p0;
    return solve_welfare_max(problem.effects, problem.dataset, nu, config);
  }
  if (method == "optimal") {
    return solve_optimal(problem.effects, problem.dataset, config);
  }
  if (method == "factual") {
    return evaluate_factual(problem.effects, problem.dataset);
  }
  throw ValidationError("unknown method '" + method + "'");
}

int run_estimate(const DatasetFlags& dataset_flags, const std::string& out) {
  const LoadedProblem problem = load_problem(dataset_flags);
  const auto dir = prepare_out_dir(out);
  const RunManifest manifest =
      make_manifest("estimate", "", dataset_flags.input_paths(), 0);
  write_text_file((dir / "effects.json").string(),
                  effect_table_to_json(problem.effects, problem.dataset, manifest));
  write_text_file((dir / "effects.tsv").string(),
                  effects_tsv(problem.effects, problem.dataset, manifest));
  std::cout << "wrote " << (dir / "effects.json").string() << "\n";
  return 0;
}

int run_solve(const std::string& method, const DatasetFlags& dataset_flags,
              const SolveFlags& flags, const std::string& out) {
  const LoadedProblem problem = load_problem(dataset_flags);
  const SolveConfig config = flags.to_config();
  const FairSolveReport report = dispatch_solve(method, problem, config, flags);
  const auto dir = prepare_out_dir(out);
  std::ostringstream invocation;
  invocation << "solve method=" << method << " budget=" << flags.budget
             << " absolute=" << flags.budget_absolute << " mode=" << flags.mode
             << " K=" << flags.grid_size << " lambda=" << flags.lambda
             << " unconstrained=" << flags.frontier_unconstrained
             << " round=" << flags.round << " new_only=" << flags.budget_new_only
             << " nu=" << flags.nu << " min_welfare_ref=" << flags.min_welfare_ref
             << " cap=" << flags.disparity_cap;
  const RunManifest manifest =
      make_manifest("solve", invocation.str(), dataset_flags.input_paths(), 0);
  SolveConfig report_config = config;
  if (flags.min_welfare_ref > 0.0 && method == "fair") {
    // Recompute for the report so the target appears in the artifact.
    SolveConfig reference = config;
    reference.budget = flags.min_welfare_ref;
    reference.budget_is_fraction = true;
    report_config.min_welfare_target =
        solve_welfare_max(problem.effects, problem.dataset, problem.effects.p0,
                          reference)
            .report.w0;
  }
  write_text_file(
      (dir / "solve_report.json").string(),
      solve_report_to_json(report, problem.dataset, report_config, method, manifest));
  std::cout << "wrote " << (dir / "solve_report.json").string() << "\n";
  if (!report.feasible) {
    std::cerr << "no feasible policy at the requested constraints\n";
    return 3;
  }
  return 0;
}

int run_sweep(const DatasetFlags& dataset_flags, const SolveFlags& flags,
              std::vector<double> budgets, std::vector<double> caps,
              std::vector<std::string> methods, const std::string& out) {
  if (budgets.empty() && caps.empty()) {
    throw ValidationError("sweep needs --budgets or --caps");
  }
  const LoadedProblem problem = load_problem(dataset_flags);
  const auto dir = prepare_out_dir(out);
  std::ostringstream invocation;
  invocation << "sweep mode=" << flags.mode << " K=" << flags.grid_size
             << " lambda=" << flags.lambda;
  for (double b : budgets) invocation << " b=" << b;
  for (double c : caps) invocation << " c=" << c;
  const RunManifest manifest =
      make_manifest("sweep", invocation.str(), dataset_flags.input_paths(), 0);

  if (!budgets.empty()) {
    std::vector<SweepRow> rows;
    for (double budget : budgets) {
      for (const std::string& method : methods) {
        SolveFlags local = flags;
        local.budget = budget;
        local.budget_absolute = false;
        local.disparity_cap = -1.0;
        SweepRow row;
        row.x = budget;
        row.method = method;
        const FairSolveReport solved =
            dispatch_solve(method, problem, local.to_config(), local);
        row.feasible = solved.feasible;
        if (solved.feasible) row.report = solved.report;
        rows.push_back(row);
      }
    }
    write_text_file((dir / "sweep_budgets.tsv").string(),
                    sweep_tsv(std::move(rows), "budget", manifest));
    std::cout << "wrote " << (dir / "sweep_budgets.tsv").string() << "\n";
  }

  if (!caps.empty()) {
    std::vector<SweepRow> rows;
    for (double cap : caps) {
      for (const std::string& method : methods) {
        SolveFlags local = flags;
        local.disparity_cap =
            (method == "welfare" || method == "welfare_max") ? cap : -1.0;
        SweepRow row;
        row.x = cap;
        row.method = method;
        const FairSolveReport solved =
            dispatch_solve(method, problem, local.to_config(), local);
        row.feasible = solved.feasible;
        if (solved.feasible) row.report = solved.report;
        rows.push_back(row);
      }
    }
    write_text_file((dir / "sweep_caps.tsv").string(),
                    sweep_tsv(std::move(rows), "cap", manifest));
    std::cout << "wrote " << (dir / "sweep_caps.tsv").string() << "\n";
  }
  return 0;
}

int run_simulate(const std::string& config_path, int reps_override,
                 std::int64_t seed_override, int threads_override,
                 const std::string& out) {
  const ConfigFile file = ConfigFile::parse_file(config_path);
  SimConfig config = sim_config_from(file);
  MonteCarloOptions options = monte_carlo_options_from(file);
  if (const char* env_seed = std::getenv("FAIRBNI_SEED")) {
    config.seed = std::strtoull(env_seed, nullptr, 10);
  }
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
  if (reps_override > 0) config.replications = reps_override;
  if (threads_override > 0) config.threads = threads_override;

  const SimConfig calibrated = calibrate_intercepts(config);
  const SimResult result = run_monte_carlo(calibrated, options);

  const auto dir = prepare_out_dir(out);
  const RunManifest manifest =
      make_manifest("simulate", file.text(), {config_path}, config.seed);
  write_text_file((dir / "sim_result.json").string(),
                  sim_result_to_json(result, calibrated, options, manifest));
  write_text_file((dir / "sim_budget_curves.tsv").string(),
                  sim_curves_tsv(result, false, manifest));
  if (!options.disparity_caps.empty()) {
    write_text_file((dir / "sim_cap_curves.tsv").string(),
                    sim_curves_tsv(result, true, manifest));
  }
  std::cout << "wrote " << (dir / "sim_result.json").string() << " ("
            << result.replications_completed << "/" << result.replications_requested
            << " replications)\n";
  return 0;
}

int run_oracle(const DatasetFlags& dataset_flags, const SolveFlags& flags,
               const std::string& out) {
  const LoadedProblem problem = load_problem(dataset_flags);
  const Eigen::Index J = problem.dataset.J();
  if (J > 20) {
    throw ValidationError("oracle enumeration is limited to J <= 20 (got J=" +
                          std::to_string(J) + ")");
  }
  const SolveConfig config = flags.to_config();
  const double budget = config.resolved_budget(problem.dataset);

  nlohmann::json best_disparity, best_welfare;
  double min_disparity = std::numeric_limits<double>::infinity();
  double min_welfare = std::numeric_limits<double>::infinity();
  std::uint64_t feasible_count = 0;
  const double inv_j = 1.0 / static_cast<double>(J);
  for (std::uint64_t mask = 0; mask < (1ULL << J); ++mask) {
    double w0 = 0.0, w1 = 0.0, cost = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
      if ((mask >> j) & 1ULL) {
        w0 += problem.effects.group0(j) * inv_j;
        w1 += problem.effects.group1(j) * inv_j;
        cost += problem.dataset.costs()(j);
      }
    }
    if (cost > budget * (1.0 + 1e-12) + 1e-9) continue;
    ++feasible_count;
    const double disparity = std::abs(w0 - w1);
    const double population =
        problem.effects.p0 * w0 + problem.effects.p1 * w1;
    const auto entry = [&]() {
      nlohmann::json policy = nlohmann::json::array();
      for (Eigen::Index j = 0; j < J; ++j) policy.push_back((mask >> j) & 1ULL ? 1 : 0);
      return nlohmann::json{{"policy", policy}, {"w0", w0},   {"w1", w1},
                            {"disparity", disparity},         {"cost", cost},
                            {"population_welfare", population}};
    };
    if (disparity < min_disparity) {
      min_disparity = disparity;
      best_disparity = entry();
    }
    if (population < min_welfare) {
      min_welfare = population;
      best_welfare = entry();
    }
  }

  const auto dir = prepare_out_dir(out);
  const RunManifest manifest =
      make_manifest("oracle", "", dataset_flags.input_paths(), 0);
  nlohmann::json document{
      {"manifest",
       {{"command", manifest.command},
        {"config_hash", manifest.config_hash},
        {"seed", manifest.seed},
        {"version", manifest.version},
        {"timestamp", manifest.timestamp}}},
      {"budget_absolute", budget},
      {"feasible_policies", feasible_count},
      {"min_disparity", best_disparity},
      {"min_population_welfare", best_welfare}};
  write_text_file((dir / "oracle.json").string(), document.dump(2) + "\n");
  std::cout << "wrote " << (dir / "oracle.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair, budget-constrained treatment allocation under bipartite "
               "network interference"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string out_dir = ".";

  auto* estimate = app.add_subcommand(
      "estimate", "Fit propensity and outcome models, emit the effect table");
  DatasetFlags estimate_data;
  estimate_data.attach(estimate);
  estimate->add_option("--out", out_dir, "Output directory");

  auto* solve = app.add_subcommand(
      "solve", "Learn a policy (fair, welfare, optimal or factual)");
  DatasetFlags solve_data;
  solve_data.attach(solve);
  std::string method = "fair";
  solve->add_option("--method", method, "fair | welfare | optimal | factual")
      ->check(CLI::IsMember({"fair", "welfare", "welfare_max", "optimal", "factual"}));
  SolveFlags solve_flags;
  solve_flags.attach(solve);
  solve->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand(
      "sweep", "Solve across budget or disparity-cap grids, emit curve TSVs");
  DatasetFlags sweep_data;
  sweep_data.attach(sweep);
  SolveFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::vector<double> budgets, caps;
  sweep->add_option("--budgets", budgets, "Budget fractions")->delimiter(',');
  sweep->add_option("--caps", caps, "Disparity caps")->delimiter(',');
  std::vector<std::string> sweep_methods{"fair", "welfare", "optimal", "factual"};
  sweep->add_option("--methods", sweep_methods, "Methods to run")->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory");

  auto* simulate = app.add_subcommand(
      "simulate", "Run the calibrated Monte Carlo study from a config file");
  std::string sim_config_path;
  simulate->add_option("--config", sim_config_path, "Study configuration file")
      ->required();
  int reps_override = 0;
  std::int64_t seed_override = -1;
  int threads_override = 0;
  simulate->add_option("--reps", reps_override, "Override replication count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed_override, "Override the master seed");
  simulate->add_option("--threads", threads_override, "Worker thread count");
  simulate->add_option("--out", out_dir, "Output directory");

  auto* oracle = app.add_subcommand(
      "oracle", "Brute-force binary policy enumeration (desk scale, J <= 20)");
  DatasetFlags oracle_data;
  oracle_data.attach(oracle);
  SolveFlags oracle_flags;
  oracle_flags.attach(oracle);
  oracle->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return run_estimate(estimate_data, out_dir);
    if (solve->parsed()) return run_solve(method, solve_data, solve_flags, out_dir);
    if (sweep->parsed()) {
      return run_sweep(sweep_data, sweep_flags, budgets, caps, sweep_methods, out_dir);
    }
    if (simulate->parsed()) {
      return run_simulate(sim_config_path, reps_override, seed_override,
                          threads_override, out_dir);
    }
    if (oracle->parsed()) return run_oracle(oracle_data, oracle_flags, out_dir);
    return 2;
  } catch (const CLI::ParseError& error) {
    if (error.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(error);
    }
    app.exit(error);
    return 2;
  } catch (const Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    switch (error.code()) {
      case ErrorCode::infeasible:
        return 3;
      case ErrorCode::run:
      case ErrorCode::internal:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
