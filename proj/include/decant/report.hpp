#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/config.hpp"
#include "decant/sim.hpp"

namespace decant {

// One swept parameter. `path` is a dot path into the RunConfig JSON
// ("tau_s", "learning.mu", "scheduling.order").
struct SweepAxis {
  std::string path;
  std::vector<nlohmann::json> values;
};

struct ExperimentSpec {
  RunConfig base;
  std::vector<SweepAxis> axes;
  std::vector<std::uint64_t> seeds;

  // Throws ConfigError for empty axes/seeds or paths that do not resolve.
  void validate() const;
};

ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

struct SweepCell {
  int index = 0;
  nlohmann::json overrides;  // path -> value
  std::uint64_t seed = 0;
};

// Cartesian product of the axes, seeds varying fastest.
std::vector<SweepCell> expand_cells(const ExperimentSpec& spec);
RunConfig cell_config(const ExperimentSpec& spec, const SweepCell& cell);

// Runs every cell with up to `jobs` threads, writing cell_NNNN.csv and
// cell_NNNN.json (run summary) into `out_dir`, plus manifest.json. A failing
// cell is recorded with its error and does not stop the others. Returns the
// manifest.
nlohmann::json run_sweep(const ExperimentSpec& spec, const std::string& out_dir, int jobs,
                         std::span<const double> targets);

struct TimeToAccuracyRow {
  std::string label;
  std::optional<double> time_s;  // nullopt: never reached
};

// Throws ContractError when `logs` is empty.
std::vector<TimeToAccuracyRow> report_time_to_accuracy(
    const std::vector<std::pair<std::string, MetricsLog>>& logs, double target);

// Reads a sweep directory and writes final_accuracy.csv (one row per axis
// combination, mean/std over seeds) and time_to_accuracy.csv (one row per
// cell). Returns the number of rows in final_accuracy.csv.
std::size_t write_sweep_report(const std::string& sweep_dir, const std::string& out_dir,
                               double target_acc);

}  // namespace decant
