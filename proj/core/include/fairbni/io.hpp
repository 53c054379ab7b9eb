#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairbni/fair_policy.hpp"
#include "fairbni/simulation.hpp"

namespace fairbni {

struct DatasetPaths {
  std::string outcome_units;
  std::string intervention_units;
  std::string interference;
};

// Reads the three-part dataset (headered CSVs; the interference file may be
// dense or a (outcome_id, intervention_id, weight) triplet list), validates
// invariants and standardizes covariates. Zero-exposure rows surface as
// warnings on the returned dataset.
Dataset load_dataset(const DatasetPaths& paths);

// Writes the in-memory dataset back out (dense interference). Values use 17
// significant digits so a save/load cycle reproduces the dataset.
void save_dataset(const Dataset& dataset, const DatasetPaths& paths);

// Provenance block embedded in every emitted artifact.
struct RunManifest {
  std::string command;
  std::string config_hash;  // "-" when the run has no config file
  std::vector<std::pair<std::string, std::string>> input_digests;
  std::uint64_t seed = 0;
  std::string version;
  std::string timestamp;
};

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::string>& input_paths,
                          std::uint64_t seed);

std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::string& path);
// ISO-8601 UTC; honors SOURCE_DATE_EPOCH so artifact bytes are reproducible.
std::string current_timestamp();

// Minimal key = value configuration file: booleans, numbers ("inf" allowed),
// quoted strings, [lists], # comments.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_real_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  const std::string& text() const { return text_; }

 private:
  struct Value {
    enum class Kind { boolean, integer, real, text, real_list, text_list };
    Kind kind = Kind::text;
    bool b = false;
    std::int64_t i = 0;
    double d = 0.0;
    std::string s;
    std::vector<double> reals;
    std::vector<std::string> strings;
  };
  const Value* find(const std::string& key) const;
  const Value& require(const std::string& key, Value::Kind kind) const;

  std::string origin_;
  std::string text_;
  std::map<std::string, Value> values_;
};

// Builds a simulation setup from a config file; unknown keys are rejected.
SimConfig sim_config_from(const ConfigFile& file);
MonteCarloOptions monte_carlo_options_from(const ConfigFile& file);

// JSON / TSV emission. Every artifact embeds the manifest; emission fails on
// any non-finite number.
std::string effect_table_to_json(const EffectTable& effects, const Dataset& dataset,
                                 const RunManifest& manifest);
EffectTable effect_table_from_json_file(const std::string& path,
                                        const Dataset& dataset);
std::string effects_tsv(const EffectTable& effects, const Dataset& dataset,
                        const RunManifest& manifest);

std::string solve_report_to_json(const FairSolveReport& solve,
                                 const Dataset& dataset, const SolveConfig& config,
                                 const std::string& method,
                                 const RunManifest& manifest);

struct SweepRow {
  double x = 0.0;
  std::string method;
  bool feasible = false;
  WelfareReport report;
};
// Rows come out sorted by the sweep parameter under one header line.
std::string sweep_tsv(std::vector<SweepRow> rows, const std::string& x_name,
                      const RunManifest& manifest);

std::string sim_result_to_json(const SimResult& result, const SimConfig& config,
                               const MonteCarloOptions& options,
                               const RunManifest& manifest);
std::string sim_curves_tsv(const SimResult& result, bool cap_sweep,
                           const RunManifest& manifest);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace fairbni
