#pragma once

#include <complex>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apseq/apseq.hpp"

namespace apseq::scenario {

inline constexpr int kSchemaVersion = 1;

using Row = std::vector<Scalar>;
using Rows = std::vector<Row>;

/// constant | periodic | trig | generator
/// generator: A(k) = M_0 + sum_j M_j cos(lambda_j k + phase_j); sup bounds default to the
/// triangle-inequality sum of the coefficient bounds.
struct OperatorSpec {
  std::string kind = "constant";
  std::vector<Rows> matrices;
  std::vector<double> frequencies;
  std::vector<double> phases;
  std::optional<long> period;
  std::map<std::string, double> sup_bounds;

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// constant | zero | table | trig_poly | omega_c
struct SequenceSpec {
  std::string kind = "constant";
  Rows values;
  std::vector<double> frequencies;
  long k_min = 0;
  std::string extension = "none";
  long omega = 1;
  Scalar c{1.0, 0.0};
  long dim = 0;

  friend bool operator==(const SequenceSpec&, const SequenceSpec&) = default;
};

struct SeminormSpec {
  std::string kind = "sup";
  std::string label = "sup";
  double p = 1.0;
  std::vector<long> offsets;
  Row weights;

  friend bool operator==(const SeminormSpec&, const SeminormSpec&) = default;
};

/// Grid problems (heat, wave). Multipliers of dimension 1 are broadcast over the grid.
struct GridSpec {
  long n = 5;
  double h = 1.0;
  int dims = 1;
  std::map<std::string, SequenceSpec> fields;
  std::optional<long> period;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct BohrSpec {
  std::string seminorm;
  double epsilon = 0.0;
  long L = 1;
  Window k_window{-100, 100};
  Window tau_range{-500, 500};

  friend bool operator==(const BohrSpec&, const BohrSpec&) = default;
};

struct BesicovitchSpec {
  std::string seminorm;
  double p = 1.0;
  std::vector<long> l_grid{64, 128, 256, 512};
  std::vector<double> frequencies;
  long fit_N = 512;

  friend bool operator==(const BesicovitchSpec&, const BesicovitchSpec&) = default;
};

struct OmegaCSpec {
  long omega = 1;
  Scalar c{1.0, 0.0};

  friend bool operator==(const OmegaCSpec&, const OmegaCSpec&) = default;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  /// first_order | inclusion | degenerate_vb | degenerate_vb1 | second_order | system_bm | heat | wave
  std::string problem;
  Window window{-20, 20};
  double tol = kDefaultSolveTol;
  long v_max = kDefaultVMax;
  /// Order for second_order / system_bm.
  int order = 2;
  std::vector<SeminormSpec> seminorms{SeminormSpec{}};
  std::map<std::string, OperatorSpec> operators;
  std::optional<Rows> C;
  std::map<std::string, SequenceSpec> sequences;
  std::optional<GridSpec> grid;
  std::optional<BohrSpec> bohr;
  std::optional<BesicovitchSpec> besicovitch;
  std::optional<OmegaCSpec> omega_c;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws InputContractError on schema violations.
ScenarioConfig parse(const nlohmann::json& doc);
ScenarioConfig parse_file(const std::filesystem::path& path);
nlohmann::json serialize(const ScenarioConfig& config);

struct RunOptions {
  /// solve | solve-inclusion | solve-degenerate | solve-p2 | reduce-order | analyze
  std::string command = "solve";
  std::filesystem::path out_dir = ".";
  unsigned threads = 0;
  /// Sequence CSV analysed instead of the config forcing (analyze only).
  std::optional<std::filesystem::path> input_csv;
};

enum ExitCode : int { kOk = 0, kInputContract = 2, kConvergence = 3, kNumeric = 4 };

/// Dispatches the scenario, writes solution.csv, report.json and summary.txt into out_dir.
int run(const ScenarioConfig& config, const RunOptions& options);

struct ExampleOptions {
  std::string which = "heat";
  long n = 5;
  double h = 1.0;
  int dims = 1;
  Window window{-20, 20};
  double tol = kDefaultSolveTol;
  std::filesystem::path out_dir = ".";
  unsigned threads = 0;
};

/// Built-in almost periodic heat / wave scenario; grid CSV has one row per (k, grid index).
int run_example(const ExampleOptions& options);

/// Maps library exceptions onto exit codes.
int exit_code_for(const std::exception& e);

}  // namespace apseq::scenario
