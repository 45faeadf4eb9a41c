#pragma once
// Experiment catalog and report rows shared by the CLI and the acceptance run.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyadiclab {

struct ExperimentConfig {
  std::vector<std::string> experiments;
  std::uint64_t seed = 0;
  int dim = 1;
  std::optional<int> depth;
  std::optional<int> m_top;
  std::vector<double> p;  // empty: the experiment's own list
  std::string space = "scalar";  // "scalar" or "lq:<n>:<q>"
  std::optional<double> gamma;
  std::optional<int> r;
  std::optional<int> max_gap;
  int i_max = 3, j_max = 3;
  std::optional<int> trials;
  std::map<std::string, double> tolerances;
  std::string out;      // CSV path, empty: stdout
  std::string summary;  // JSON summary path, empty: none
  bool parallel = false;
  bool timing = false;  // fill runtime_ms; off keeps reports byte-identical

  double tol(const std::string& key, double fallback) const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// keys present in the document override `base`; unknown keys and wrong
// types throw ConfigError
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base = {});
void validate(const ExperimentConfig& cfg);

struct CheckRow {
  std::string check_id;
  std::string anchor;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> runtime_ms;
};

struct Experiment {
  std::string name;
  std::string anchor;
  std::string summary;
  std::function<std::vector<CheckRow>(const ExperimentConfig&)> run;
};

const std::vector<Experiment>& catalog();
const Experiment& find_experiment(const std::string& name);  // throws ConfigError

struct Report {
  std::vector<CheckRow> rows;  // sorted by check_id
  bool all_pass() const;
};

Report run_experiments(const ExperimentConfig& cfg);

void write_report_csv(std::ostream& os, const Report& r);
std::string report_summary_json(const ExperimentConfig& cfg, const Report& r);
std::string catalog_json();

}  // namespace dyadiclab
