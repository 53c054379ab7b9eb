#include "fairbni/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "fairbni/version.hpp"
#include "json.hpp"

namespace fairbni {

namespace {

using nlohmann::json;

std::string format_double(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

double checked_finite(double value, const std::string& what) {
  if (!std::isfinite(value)) {
    throw InternalError("non-finite value in emitted report: " + what);
  }
  return value;
}

void assert_finite_json(const json& node, const std::string& path) {
  if (node.is_number_float()) {
    checked_finite(node.get<double>(), path);
  } else if (node.is_object()) {
    for (const auto& [key, value] : node.items()) assert_finite_json(value, path + "/" + key);
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      assert_finite_json(node[i], path + "[" + std::to_string(i) + "]");
    }
  }
}

std::string trim(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(begin, end - begin);
}

double parse_double(const std::string& token, const std::string& where) {
  const std::string trimmed = trim(token);
  if (trimmed.empty()) throw ParseError(where + ": empty numeric field");
  char* end = nullptr;
  const double value = std::strtod(trimmed.c_str(), &end);
  if (end != trimmed.c_str() + trimmed.size()) {
    throw ParseError(where + ": cannot parse number '" + trimmed + "'");
  }
  return value;
}

long long parse_int(const std::string& token, const std::string& where) {
  const std::string trimmed = trim(token);
  if (trimmed.empty()) throw ParseError(where + ": empty integer field");
  char* end = nullptr;
  const long long value = std::strtoll(trimmed.c_str(), &end, 10);
  if (end != trimmed.c_str() + trimmed.size()) {
    throw ParseError(where + ": cannot parse integer '" + trimmed + "'");
  }
  return value;
}

struct Csv {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, header excluded
  std::vector<std::size_t> line_numbers;       // 1-based source line per row
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  Csv csv;
  csv.path = path;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (csv.header.empty()) {
      csv.header = std::move(fields);
      continue;
    }
    if (fields.size() != csv.header.size()) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": expected " +
                       std::to_string(csv.header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    csv.rows.push_back(std::move(fields));
    csv.line_numbers.push_back(line_number);
  }
  if (csv.header.empty()) throw ParseError(path + ": file has no header line");
  return csv;
}

std::string cell_location(const Csv& csv, std::size_t row, std::size_t col) {
  return csv.path + ":" + std::to_string(csv.line_numbers[row]) + ":column " +
         std::to_string(col + 1) + " (" + csv.header[col] + ")";
}

constexpr const char* kTripletHeader[3] = {"outcome_id", "intervention_id", "weight"};

bool is_triplet_header(const std::vector<std::string>& header) {
  return header.size() == 3 && header[0] == kTripletHeader[0] &&
         header[1] == kTripletHeader[1] && header[2] == kTripletHeader[2];
}

Eigen::MatrixXd load_interference(const std::string& path,
                                  const std::vector<std::string>& outcome_ids,
                                  const std::vector<std::string>& intervention_ids) {
  const Csv csv = read_csv(path);
  const Eigen::Index n = static_cast<Eigen::Index>(outcome_ids.size());
  const Eigen::Index J = static_cast<Eigen::Index>(intervention_ids.size());
  std::map<std::string, Eigen::Index> outcome_index;
  for (Eigen::Index i = 0; i < n; ++i) outcome_index[outcome_ids[static_cast<std::size_t>(i)]] = i;
  std::map<std::string, Eigen::Index> intervention_index;
  for (Eigen::Index j = 0; j < J; ++j) {
    intervention_index[intervention_ids[static_cast<std::size_t>(j)]] = j;
  }

  if (is_triplet_header(csv.header)) {
    Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(n, J);
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, J);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      const auto oi = outcome_index.find(row[0]);
      if (oi == outcome_index.end()) {
        throw ParseError(cell_location(csv, r, 0) + ": unknown outcome id '" + row[0] + "'");
      }
      const auto ij = intervention_index.find(row[1]);
      if (ij == intervention_index.end()) {
        throw ParseError(cell_location(csv, r, 1) + ": unknown intervention id '" + row[1] + "'");
      }
      const double weight = parse_double(row[2], cell_location(csv, r, 2));
      if (weight < 0.0) {
        throw ValidationError(cell_location(csv, r, 2) + ": negative weight " + row[2]);
      }
      if (seen(oi->second, ij->second)) {
        throw ParseError(cell_location(csv, r, 0) + ": duplicate entry for (" +
                         row[0] + ", " + row[1] + ")");
      }
      seen(oi->second, ij->second) = 1;
      entries(oi->second, ij->second) = weight;
    }
    return entries;
  }

  // Dense layout: header "id,<intervention ids>", one row per outcome unit.
  if (csv.header.size() != static_cast<std::size_t>(J) + 1) {
    throw ParseError(path + ": dense interference header has " +
                     std::to_string(csv.header.size() - 1) +
                     " intervention columns, expected " + std::to_string(J));
  }
  std::vector<Eigen::Index> column_map(static_cast<std::size_t>(J));
  for (std::size_t c = 1; c < csv.header.size(); ++c) {
    const auto it = intervention_index.find(csv.header[c]);
    if (it == intervention_index.end()) {
      throw ParseError(path + ": unknown intervention id '" + csv.header[c] +
                       "' in dense header");
    }
    column_map[c - 1] = it->second;
  }
  if (csv.rows.size() != static_cast<std::size_t>(n)) {
    throw ParseError(path + ": dense interference has " +
                     std::to_string(csv.rows.size()) + " rows, expected " +
                     std::to_string(n));
  }
  Eigen::MatrixXd entries(n, J);
  std::vector<bool> row_seen(static_cast<std::size_t>(n), false);
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const auto oi = outcome_index.find(row[0]);
    if (oi == outcome_index.end()) {
      throw ParseError(cell_location(csv, r, 0) + ": unknown outcome id '" + row[0] + "'");
    }
    if (row_seen[static_cast<std::size_t>(oi->second)]) {
      throw ParseError(cell_location(csv, r, 0) + ": duplicate row for '" + row[0] + "'");
    }
    row_seen[static_cast<std::size_t>(oi->second)] = true;
    for (std::size_t c = 1; c < row.size(); ++c) {
      const double weight = parse_double(row[c], cell_location(csv, r, c));
      if (weight < 0.0) {
        throw ValidationError(cell_location(csv, r, c) + ": negative weight " + row[c]);
      }
      entries(oi->second, column_map[c - 1]) = weight;
    }
  }
  return entries;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

Dataset load_dataset(const DatasetPaths& paths) {
  const Csv outcome_csv = read_csv(paths.outcome_units);
  if (outcome_csv.header.size() < 3 || outcome_csv.header[0] != "id" ||
      outcome_csv.header[1] != "subgroup" || outcome_csv.header[2] != "outcome") {
    throw ParseError(paths.outcome_units +
                     ": header must start with id,subgroup,outcome");
  }
  const Eigen::Index p = static_cast<Eigen::Index>(outcome_csv.header.size()) - 3;
  std::vector<OutcomeUnit> outcome_units;
  std::vector<std::string> outcome_ids;
  Eigen::MatrixXd outcome_covs(static_cast<Eigen::Index>(outcome_csv.rows.size()), p);
  for (std::size_t r = 0; r < outcome_csv.rows.size(); ++r) {
    const auto& row = outcome_csv.rows[r];
    OutcomeUnit unit;
    unit.id = row[0];
    unit.subgroup = static_cast<int>(parse_int(row[1], cell_location(outcome_csv, r, 1)));
    unit.outcome = parse_double(row[2], cell_location(outcome_csv, r, 2));
    for (Eigen::Index c = 0; c < p; ++c) {
      outcome_covs(static_cast<Eigen::Index>(r), c) = parse_double(
          row[static_cast<std::size_t>(c) + 3],
          cell_location(outcome_csv, r, static_cast<std::size_t>(c) + 3));
    }
    outcome_units.push_back(std::move(unit));
    outcome_ids.push_back(row[0]);
  }

  const Csv intervention_csv = read_csv(paths.intervention_units);
  if (intervention_csv.header.size() < 3 || intervention_csv.header[0] != "id" ||
      intervention_csv.header[1] != "treated" || intervention_csv.header[2] != "cost") {
    throw ParseError(paths.intervention_units +
                     ": header must start with id,treated,cost");
  }
  const Eigen::Index q = static_cast<Eigen::Index>(intervention_csv.header.size()) - 3;
  std::vector<InterventionUnit> intervention_units;
  std::vector<std::string> intervention_ids;
  Eigen::MatrixXd intervention_covs(
      static_cast<Eigen::Index>(intervention_csv.rows.size()), q);
  for (std::size_t r = 0; r < intervention_csv.rows.size(); ++r) {
    const auto& row = intervention_csv.rows[r];
    InterventionUnit unit;
    unit.id = row[0];
    unit.factual_treatment =
        static_cast<int>(parse_int(row[1], cell_location(intervention_csv, r, 1)));
    unit.cost = parse_double(row[2], cell_location(intervention_csv, r, 2));
    for (Eigen::Index c = 0; c < q; ++c) {
      intervention_covs(static_cast<Eigen::Index>(r), c) = parse_double(
          row[static_cast<std::size_t>(c) + 3],
          cell_location(intervention_csv, r, static_cast<std::size_t>(c) + 3));
    }
    intervention_units.push_back(std::move(unit));
    intervention_ids.push_back(row[0]);
  }

  standardize_columns(outcome_covs);
  standardize_columns(intervention_covs);
  for (std::size_t r = 0; r < outcome_units.size(); ++r) {
    outcome_units[r].covariates = outcome_covs.row(static_cast<Eigen::Index>(r)).transpose();
  }
  for (std::size_t r = 0; r < intervention_units.size(); ++r) {
    intervention_units[r].covariates =
        intervention_covs.row(static_cast<Eigen::Index>(r)).transpose();
  }

  Eigen::MatrixXd entries =
      load_interference(paths.interference, outcome_ids, intervention_ids);
  return Dataset(std::move(outcome_units), std::move(intervention_units),
                 InterferenceMap{std::move(entries)});
}

void save_dataset(const Dataset& dataset, const DatasetPaths& paths) {
  std::ostringstream outcome;
  outcome << "id,subgroup,outcome";
  for (Eigen::Index c = 0; c < dataset.p(); ++c) outcome << ",x" << (c + 1);
  outcome << "\n";
  for (const OutcomeUnit& unit : dataset.outcome_units()) {
    outcome << unit.id << "," << unit.subgroup << ","
            << format_double(unit.outcome, 17);
    for (Eigen::Index c = 0; c < dataset.p(); ++c) {
      outcome << "," << format_double(unit.covariates(c), 17);
    }
    outcome << "\n";
  }
  write_text_file(paths.outcome_units, outcome.str());

  std::ostringstream intervention;
  intervention << "id,treated,cost";
  for (Eigen::Index c = 0; c < dataset.q(); ++c) intervention << ",z" << (c + 1);
  intervention << "\n";
  for (const InterventionUnit& unit : dataset.intervention_units()) {
    intervention << unit.id << "," << unit.factual_treatment << ","
                 << format_double(unit.cost, 17);
    for (Eigen::Index c = 0; c < dataset.q(); ++c) {
      intervention << "," << format_double(unit.covariates(c), 17);
    }
    intervention << "\n";
  }
  write_text_file(paths.intervention_units, intervention.str());

  std::ostringstream interference;
  interference << "id";
  for (const InterventionUnit& unit : dataset.intervention_units()) {
    interference << "," << unit.id;
  }
  interference << "\n";
  for (Eigen::Index i = 0; i < dataset.n(); ++i) {
    interference << dataset.outcome_units()[static_cast<std::size_t>(i)].id;
    for (Eigen::Index j = 0; j < dataset.J(); ++j) {
      interference << "," << format_double(dataset.interference()(i, j), 17);
    }
    interference << "\n";
  }
  write_text_file(paths.interference, interference.str());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

std::string file_digest(const std::string& path) {
  return fnv1a_hex(read_text_file(path));
}

std::string current_timestamp() {
  std::time_t stamp = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    stamp = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    stamp = std::time(nullptr);
  }
  std::tm parts{};
  gmtime_r(&stamp, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::string>& input_paths,
                          std::uint64_t seed) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config_hash = config_text.empty() ? "-" : fnv1a_hex(config_text);
  for (const std::string& path : input_paths) {
    manifest.input_digests.emplace_back(path, file_digest(path));
  }
  manifest.seed = seed;
  manifest.version = kVersion;
  manifest.timestamp = current_timestamp();
  return manifest;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

ConfigFile ConfigFile::parse_file(const std::string& path) {
  return parse(read_text_file(path), path);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile file;
  file.origin_ = origin;
  file.text_ = text;

  std::istringstream lines(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(lines, line)) {
    ++line_number;
    const std::string where = origin + ":" + std::to_string(line_number);
    // Strip comments outside quotes.
    bool in_quote = false;
    std::string stripped;
    for (char c : line) {
      if (c == '"') in_quote = !in_quote;
      if (c == '#' && !in_quote) break;
      stripped.push_back(c);
    }
    stripped = trim(stripped);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(where + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string raw = trim(stripped.substr(eq + 1));
    if (key.empty() || raw.empty()) {
      throw ParseError(where + ": expected key = value");
    }
    if (file.values_.count(key)) {
      throw ParseError(where + ": duplicate key '" + key + "'");
    }

    Value value;
    auto parse_scalar = [&](const std::string& token) -> Value {
      Value v;
      if (token == "true" || token == "false") {
        v.kind = Value::Kind::boolean;
        v.b = token == "true";
        return v;
      }
      if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
        v.kind = Value::Kind::text;
        v.s = token.substr(1, token.size() - 2);
        return v;
      }
      if (token == "inf" || token == "+inf") {
        v.kind = Value::Kind::real;
        v.d = std::numeric_limits<double>::infinity();
        return v;
      }
      const bool looks_integral =
          token.find_first_of(".eE") == std::string::npos;
      if (looks_integral) {
        v.kind = Value::Kind::integer;
        v.i = parse_int(token, where);
        v.d = static_cast<double>(v.i);
      } else {
        v.kind = Value::Kind::real;
        v.d = parse_double(token, where);
      }
      return v;
    };

    if (raw.front() == '[') {
      if (raw.back() != ']') throw ParseError(where + ": unterminated list");
      const std::string inner = trim(raw.substr(1, raw.size() - 2));
      value.kind = Value::Kind::real_list;
      if (!inner.empty()) {
        std::vector<std::string> tokens;
        std::string current;
        bool quoted = false;
        for (char c : inner) {
          if (c == '"') quoted = !quoted;
          if (c == ',' && !quoted) {
            tokens.push_back(trim(current));
            current.clear();
          } else {
            current.push_back(c);
          }
        }
        tokens.push_back(trim(current));
        for (const std::string& token : tokens) {
          const Value element = parse_scalar(token);
          if (element.kind == Value::Kind::text) {
            value.kind = Value::Kind::text_list;
            value.strings.push_back(element.s);
          } else if (element.kind == Value::Kind::integer ||
                     element.kind == Value::Kind::real) {
            value.reals.push_back(element.d);
          } else {
            throw ParseError(where + ": lists may hold numbers or strings");
          }
        }
        if (!value.strings.empty() && !value.reals.empty()) {
          throw ParseError(where + ": mixed list element types");
        }
      }
    } else {
      value = parse_scalar(raw);
    }
    file.values_[key] = std::move(value);
  }
  return file;
}

const ConfigFile::Value* ConfigFile::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

const ConfigFile::Value& ConfigFile::require(const std::string& key,
                                             Value::Kind kind) const {
  const Value* value = find(key);
  if (!value) throw ValidationError(origin_ + ": missing key '" + key + "'");
  if (value->kind != kind &&
      !(kind == Value::Kind::real && value->kind == Value::Kind::integer)) {
    throw ValidationError(origin_ + ": key '" + key + "' has the wrong type");
  }
  return *value;
}

bool ConfigFile::has(const std::string& key) const { return find(key) != nullptr; }

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  const Value* value = find(key);
  if (!value) return fallback;
  if (value->kind != Value::Kind::integer) {
    throw ValidationError(origin_ + ": key '" + key + "' must be an integer");
  }
  return value->i;
}

double ConfigFile::get_real(const std::string& key, double fallback) const {
  const Value* value = find(key);
  if (!value) return fallback;
  if (value->kind != Value::Kind::real && value->kind != Value::Kind::integer) {
    throw ValidationError(origin_ + ": key '" + key + "' must be a number");
  }
  return value->d;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const Value* value = find(key);
  if (!value) return fallback;
  if (value->kind != Value::Kind::boolean) {
    throw ValidationError(origin_ + ": key '" + key + "' must be true or false");
  }
  return value->b;
}

std::string ConfigFile::get_string(const std::string& key,
                                   const std::string& fallback) const {
  const Value* value = find(key);
  if (!value) return fallback;
  if (value->kind != Value::Kind::text) {
    throw ValidationError(origin_ + ": key '" + key + "' must be a quoted string");
  }
  return value->s;
}

std::vector<double> ConfigFile::get_real_list(const std::string& key) const {
  const Value* value = find(key);
  if (!value) return {};
  if (value->kind != Value::Kind::real_list) {
    throw ValidationError(origin_ + ": key '" + key + "' must be a number list");
  }
  return value->reals;
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& key) const {
  const Value* value = find(key);
  if (!value) return {};
  if (value->kind == Value::Kind::real_list && value->reals.empty()) return {};
  if (value->kind != Value::Kind::text_list) {
    throw ValidationError(origin_ + ": key '" + key + "' must be a string list");
  }
  return value->strings;
}

namespace {

SubgroupRule subgroup_rule_from(const std::string& name) {
  if (name == "covariate_median") return SubgroupRule::covariate_median;
  if (name == "alternating") return SubgroupRule::alternating;
  if (name == "bernoulli") return SubgroupRule::bernoulli;
  throw ValidationError("unknown subgroup_rule '" + name + "'");
}

Method method_from(const std::string& name) {
  if (name == "fair") return Method::fair;
  if (name == "welfare_max") return Method::welfare_max;
  if (name == "optimal") return Method::optimal;
  if (name == "factual") return Method::factual;
  if (name == "fair_oracle") return Method::fair_oracle;
  throw ValidationError("unknown method '" + name + "'");
}

}  // namespace

SimConfig sim_config_from(const ConfigFile& file) {
  SimConfig config;
  const std::string preset = file.get_string("preset", "desk");
  if (preset == "desk") {
    config = SimConfig::desk_default();
  } else if (preset == "full") {
    config = SimConfig::full_scale();
  } else {
    throw ValidationError("unknown preset '" + preset + "' (use desk or full)");
  }

  config.n = file.get_int("n", config.n);
  config.J = file.get_int("J", config.J);
  config.p = file.get_int("p", config.p);
  config.q = file.get_int("q", config.q);
  config.snr = file.get_real("snr", config.snr);
  config.replications = static_cast<int>(file.get_int("replications", config.replications));
  config.seed = static_cast<std::uint64_t>(file.get_int("seed", static_cast<std::int64_t>(config.seed)));
  config.treated_rate = file.get_real("treated_rate", config.treated_rate);
  config.mean_outcome = file.get_real("mean_outcome", config.mean_outcome);
  config.calibration_tolerance =
      file.get_real("calibration_tolerance", config.calibration_tolerance);
  config.kernel_scale = file.get_real("kernel_scale", config.kernel_scale);
  config.subgroup_rule = subgroup_rule_from(file.get_string(
      "subgroup_rule", config.subgroup_rule == SubgroupRule::covariate_median
                           ? "covariate_median"
                           : (config.subgroup_rule == SubgroupRule::alternating
                                  ? "alternating"
                                  : "bernoulli")));
  config.K = static_cast<int>(file.get_int("K", config.K));
  config.lambda = file.get_real("lambda", config.lambda);
  config.threads = static_cast<int>(file.get_int("threads", config.threads));

  const std::vector<double> theta0 = file.get_real_list("theta0");
  if (!theta0.empty()) {
    config.theta0 = Eigen::Map<const Eigen::VectorXd>(
        theta0.data(), static_cast<Eigen::Index>(theta0.size()));
  }
  const std::vector<double> gamma0 = file.get_real_list("gamma0");
  if (!gamma0.empty()) {
    config.gamma0 = Eigen::Map<const Eigen::VectorXd>(
        gamma0.data(), static_cast<Eigen::Index>(gamma0.size()));
  }
  config.validate();
  return config;
}

MonteCarloOptions monte_carlo_options_from(const ConfigFile& file) {
  MonteCarloOptions options;
  const std::vector<std::string> methods = file.get_string_list("methods");
  if (!methods.empty()) {
    options.methods.clear();
    for (const std::string& name : methods) options.methods.push_back(method_from(name));
  }
  const std::vector<double> budgets = file.get_real_list("budgets");
  if (file.has("budgets")) options.budgets = budgets;
  options.disparity_caps = file.get_real_list("caps");
  options.cap_budget = file.get_real("cap_budget", options.cap_budget);
  const std::string mode = file.get_string("mode", "clean");
  if (mode == "clean") {
    options.mode = PolicyMode::clean_slate;
  } else if (mode == "augment") {
    options.mode = PolicyMode::augmentation;
  } else {
    throw ValidationError("unknown mode '" + mode + "' (use clean or augment)");
  }
  options.round_policies = file.get_bool("round", false);
  return options;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

json manifest_json(const RunManifest& manifest) {
  json digests = json::object();
  for (const auto& [path, digest] : manifest.input_digests) digests[path] = digest;
  return json{{"command", manifest.command},
              {"config_hash", manifest.config_hash},
              {"input_digests", digests},
              {"seed", manifest.seed},
              {"version", manifest.version},
              {"timestamp", manifest.timestamp}};
}

std::string manifest_tsv_prefix(const RunManifest& manifest) {
  std::ostringstream out;
  out << "# command: " << manifest.command << "\n";
  out << "# config_hash: " << manifest.config_hash << "\n";
  for (const auto& [path, digest] : manifest.input_digests) {
    out << "# input: " << path << " " << digest << "\n";
  }
  out << "# seed: " << manifest.seed << "\n";
  out << "# version: " << manifest.version << "\n";
  out << "# timestamp: " << manifest.timestamp << "\n";
  return out.str();
}

json vector_json(const Eigen::VectorXd& values) {
  json out = json::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values(i));
  return out;
}

std::string dump_checked(const json& document) {
  assert_finite_json(document, "");
  return document.dump(2) + "\n";
}

json welfare_json(const WelfareReport& report) {
  return json{{"w0", report.w0},
              {"w1", report.w1},
              {"disparity", report.disparity},
              {"cost", report.cost}};
}

}  // namespace

std::string effect_table_to_json(const EffectTable& effects, const Dataset& dataset,
                                 const RunManifest& manifest) {
  json ids = json::array();
  for (const InterventionUnit& unit : dataset.intervention_units()) ids.push_back(unit.id);
  const json document{{"manifest", manifest_json(manifest)},
                      {"p0", effects.p0},
                      {"p1", effects.p1},
                      {"intervention_ids", ids},
                      {"total_effect_overall", vector_json(effects.overall)},
                      {"total_effect_group0", vector_json(effects.group0)},
                      {"total_effect_group1", vector_json(effects.group1)}};
  return dump_checked(document);
}

EffectTable effect_table_from_json_file(const std::string& path,
                                        const Dataset& dataset) {
  json document;
  try {
    document = json::parse(read_text_file(path));
  } catch (const json::parse_error& error) {
    throw ParseError(path + ": " + error.what());
  }
  EffectTable effects;
  try {
    const auto read_vector = [&](const char* key) {
      const json& node = document.at(key);
      Eigen::VectorXd out(static_cast<Eigen::Index>(node.size()));
      for (std::size_t i = 0; i < node.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = node[i].get<double>();
      }
      return out;
    };
    effects.p0 = document.at("p0").get<double>();
    effects.p1 = document.at("p1").get<double>();
    effects.overall = read_vector("total_effect_overall");
    effects.group0 = read_vector("total_effect_group0");
    effects.group1 = read_vector("total_effect_group1");
  } catch (const json::exception& error) {
    throw ParseError(path + ": " + error.what());
  }
  if (effects.overall.size() != dataset.J() || effects.group0.size() != dataset.J() ||
      effects.group1.size() != dataset.J()) {
    throw ValidationError(path + ": effect table length does not match dataset");
  }
  return effects;
}

std::string effects_tsv(const EffectTable& effects, const Dataset& dataset,
                        const RunManifest& manifest) {
  std::ostringstream out;
  out << manifest_tsv_prefix(manifest);
  out << "id\tcost\tfactual_treatment\ttotal_effect_overall\t"
         "total_effect_group0\ttotal_effect_group1\n";
  for (Eigen::Index j = 0; j < dataset.J(); ++j) {
    const InterventionUnit& unit =
        dataset.intervention_units()[static_cast<std::size_t>(j)];
    out << unit.id << "\t" << format_double(checked_finite(unit.cost, "cost"), 12)
        << "\t" << unit.factual_treatment << "\t"
        << format_double(checked_finite(effects.overall(j), "effect"), 12) << "\t"
        << format_double(checked_finite(effects.group0(j), "effect"), 12) << "\t"
        << format_double(checked_finite(effects.group1(j), "effect"), 12) << "\n";
  }
  return out.str();
}

std::string solve_report_to_json(const FairSolveReport& solve,
                                 const Dataset& dataset, const SolveConfig& config,
                                 const std::string& method,
                                 const RunManifest& manifest) {
  json per_gridpoint = json::array();
  for (const GridpointOutcome& outcome : solve.per_gridpoint) {
    json entry{{"k", outcome.k}, {"feasible", outcome.feasible}};
    if (outcome.feasible) entry["disparity"] = outcome.disparity;
    per_gridpoint.push_back(entry);
  }
  json treated = json::array();
  for (Eigen::Index j = 0; j < dataset.J(); ++j) {
    if (solve.policy.probabilities(j) > 0.0) {
      treated.push_back(dataset.intervention_units()[static_cast<std::size_t>(j)].id);
    }
  }
  json document{{"manifest", manifest_json(manifest)},
                {"method", method},
                {"feasible", solve.feasible},
                {"mode", config.mode == PolicyMode::augmentation ? "augment" : "clean"},
                {"budget", config.budget},
                {"budget_is_fraction", config.budget_is_fraction},
                {"budget_absolute", config.resolved_budget(dataset)},
                {"report", welfare_json(solve.report)},
                {"policy", vector_json(solve.policy.probabilities)},
                {"units_with_positive_probability", treated},
                {"per_gridpoint", per_gridpoint}};
  if (solve.active_gridpoint) document["active_gridpoint"] = *solve.active_gridpoint;
  if (config.min_welfare_target) {
    document["min_welfare_target"] = *config.min_welfare_target;
  }
  return dump_checked(document);
}

std::string sweep_tsv(std::vector<SweepRow> rows, const std::string& x_name,
                      const RunManifest& manifest) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.method < b.method;
  });
  std::ostringstream out;
  out << manifest_tsv_prefix(manifest);
  out << x_name << "\tmethod\tw0\tw1\tdisparity\tcost\tfeasible\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.x, 12) << "\t" << row.method << "\t"
        << format_double(checked_finite(row.report.w0, "w0"), 12) << "\t"
        << format_double(checked_finite(row.report.w1, "w1"), 12) << "\t"
        << format_double(checked_finite(row.report.disparity, "disparity"), 12)
        << "\t" << format_double(checked_finite(row.report.cost, "cost"), 12)
        << "\t" << (row.feasible ? 1 : 0) << "\n";
  }
  return out.str();
}

namespace {

json sim_config_json(const SimConfig& config) {
  return json{{"n", config.n},
              {"J", config.J},
              {"p", config.p},
              {"q", config.q},
              {"snr", std::isfinite(config.snr) ? json(config.snr) : json("inf")},
              {"replications", config.replications},
              {"seed", config.seed},
              {"treated_rate", config.treated_rate},
              {"mean_outcome", config.mean_outcome},
              {"calibration_tolerance", config.calibration_tolerance},
              {"kernel_scale", config.kernel_scale},
              {"subgroup_rule",
               config.subgroup_rule == SubgroupRule::covariate_median
                   ? "covariate_median"
                   : (config.subgroup_rule == SubgroupRule::alternating
                          ? "alternating"
                          : "bernoulli")},
              {"K", config.K},
              {"lambda", config.lambda},
              {"theta0", vector_json(config.theta0)},
              {"gamma0", vector_json(config.gamma0)}};
}

}  // namespace

std::string sim_result_to_json(const SimResult& result, const SimConfig& config,
                               const MonteCarloOptions& options,
                               const RunManifest& manifest) {
  json method_list = json::array();
  for (Method method : options.methods) method_list.push_back(method_name(method));
  json curves = json::array();
  for (const auto& [key, stats] : result.curves) {
    curves.push_back(json{{"method", method_name(key.method)},
                          {"sweep", key.is_cap_sweep ? "cap" : "budget"},
                          {"x", key.sweep_value},
                          {"mean_w0", stats.mean_w0},
                          {"sd_w0", stats.sd_w0},
                          {"mean_w1", stats.mean_w1},
                          {"sd_w1", stats.sd_w1},
                          {"mean_disparity", stats.mean_disparity},
                          {"sd_disparity", stats.sd_disparity},
                          {"count", stats.count}});
  }
  json records = json::array();
  for (const ReplicationRecord& record : result.records) {
    records.push_back(json{{"replication", record.replication},
                           {"method", method_name(record.method)},
                           {"sweep", record.is_cap_sweep ? "cap" : "budget"},
                           {"x", record.sweep_value},
                           {"feasible", record.feasible},
                           {"w0", record.w0},
                           {"w1", record.w1},
                           {"disparity", record.disparity},
                           {"cost", record.cost}});
  }
  const json document{
      {"manifest", manifest_json(manifest)},
      {"config", sim_config_json(config)},
      {"options",
       json{{"methods", method_list},
            {"budgets", options.budgets},
            {"caps", options.disparity_caps},
            {"cap_budget", options.cap_budget},
            {"mode", options.mode == PolicyMode::augmentation ? "augment" : "clean"},
            {"round", options.round_policies}}},
      {"truth_summary",
       json{{"mean_total_effect_overall", result.truth_summary.mean_overall},
            {"mean_total_effect_group0", result.truth_summary.mean_group0},
            {"mean_total_effect_group1", result.truth_summary.mean_group1},
            {"pct_protective_overall", result.truth_summary.pct_protective_overall},
            {"pct_protective_group0", result.truth_summary.pct_protective_group0},
            {"pct_protective_group1", result.truth_summary.pct_protective_group1}}},
      {"replications",
       json{{"requested", result.replications_requested},
            {"completed", result.replications_completed},
            {"failures", result.failures}}},
      {"curves", curves},
      {"records", records}};
  return dump_checked(document);
}

std::string sim_curves_tsv(const SimResult& result, bool cap_sweep,
                           const RunManifest& manifest) {
  // Sorted by sweep value, then method name.
  std::vector<std::pair<CurveKey, CellStats>> rows;
  for (const auto& [key, stats] : result.curves) {
    if (key.is_cap_sweep == cap_sweep) rows.emplace_back(key, stats);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first.sweep_value != b.first.sweep_value) {
      return a.first.sweep_value < b.first.sweep_value;
    }
    return method_name(a.first.method) < method_name(b.first.method);
  });
  std::ostringstream out;
  out << manifest_tsv_prefix(manifest);
  out << (cap_sweep ? "cap" : "budget")
      << "\tmethod\tmean_w0\tsd_w0\tmean_w1\tsd_w1\tmean_disparity\t"
         "sd_disparity\tcount\n";
  for (const auto& [key, stats] : rows) {
    out << format_double(key.sweep_value, 12) << "\t" << method_name(key.method)
        << "\t" << format_double(checked_finite(stats.mean_w0, "mean_w0"), 12)
        << "\t" << format_double(checked_finite(stats.sd_w0, "sd_w0"), 12) << "\t"
        << format_double(checked_finite(stats.mean_w1, "mean_w1"), 12) << "\t"
        << format_double(checked_finite(stats.sd_w1, "sd_w1"), 12) << "\t"
        << format_double(checked_finite(stats.mean_disparity, "mean_disparity"), 12)
        << "\t"
        << format_double(checked_finite(stats.sd_disparity, "sd_disparity"), 12)
        << "\t" << stats.count << "\n";
  }
  return out.str();
}

}  // namespace fairbni
