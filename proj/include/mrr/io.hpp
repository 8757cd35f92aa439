#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mrr/grid.hpp"
#include "mrr/inference.hpp"
#include "mrr/model_spec.hpp"
#include "mrr/simulate.hpp"

namespace mrr {

// Malformed input (file/config syntax, bad values). Distinct from
// ValidationError, which covers structurally impossible data.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Long-format dataset: header "id,occasion,capture,covariate", one row per
// (id, occasion) from each individual's first capture to T, covariate "NA"
// when missing. Parse errors carry the line number; validation applies the
// CaptureHistory rules plus cross-row checks (duplicates, codes after
// recovery).
std::vector<CaptureHistory> read_dataset(std::istream& in);
std::vector<CaptureHistory> read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const std::vector<CaptureHistory>& histories);
void write_dataset_file(const std::string& path, const std::vector<CaptureHistory>& histories);

struct DatasetSummary {
  int n_individuals = 0;
  int n_occasions = 0;
  double mean_observations = 0;  // mean count of x_t != 0 per individual
  int recovered_dead = 0;
  double missing_covariate_fraction = 0;  // among live captures
};
DatasetSummary summarize(const std::vector<CaptureHistory>& histories);
std::string format_summary(const DatasetSummary& s);

// Grid section of a config: either an explicit range or the data-driven
// 0.8/1.2 rule.
struct GridConfig {
  int m = 50;
  bool explicit_range = false;
  double lower = 0, upper = 0;
  CovariateGrid build(const std::vector<CaptureHistory>& histories) const;
};

struct Config {
  ModelSpec model;
  GridConfig grid;
  FitOptions fit;
  SimConfig simulation;
  bool has_simulation = false;
};

// JSON config with sections model / grid / optimizer / simulation.
// Unknown keys are rejected with their JSON path.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Result files are JSON with a format version, the config echoed back, the
// dataset checksum, and full-precision estimates/uncertainty.
void write_fit_result(const std::string& path, const FitResult& fit, const ModelSpec& spec,
                      const std::string& config_echo);
struct LoadedFit {
  FitResult fit;
  ModelSpec spec;
};
LoadedFit read_fit_result(const std::string& path);

std::string format_human_summary(const FitResult& fit, const ModelSpec& spec);

// CLI exit codes: 0 ok, 2 parse, 3 validation, 4 optimization failure,
// 5 internal.
int run_cli(int argc, char** argv);

}  // namespace mrr
