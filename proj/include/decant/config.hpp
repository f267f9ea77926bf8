#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/lead.hpp"
#include "decant/scenario.hpp"

namespace decant {

enum class Algorithm { kDecantFed, kFedAvg, kFedProx, kUniformDecant };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct DatasetSpec {
  std::string kind = "synthetic";  // "idx" or "synthetic"
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t max_train = 0;  // 0 keeps every row
  std::size_t max_test = 0;
  // synthetic
  int n_classes = 10;
  std::size_t n_per_class = 200;
  std::size_t test_per_class = 50;
  std::size_t n_features = 20;
  double class_sep = 3.0;
};

struct ModelSpec {
  std::vector<std::size_t> hidden;  // empty: softmax regression
};

struct LearningParams {
  double delta1 = 0.005;
  double alpha = 1.45;
  double zeta = 3.33;
  double mu = 0.01;  // proximal coefficient, FedProx only
  std::size_t batch_size = 10;
};

enum class AggregateWeight { kDatasetSize, kWorkload };

struct SchedulingParams {
  UploadOrder order = UploadOrder::kAscending;
  int j_max = 64;
  bool cap_to_dataset = false;
  AggregateWeight aggregate_weight = AggregateWeight::kDatasetSize;
};

struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  Algorithm algorithm = Algorithm::kDecantFed;
  double tau_s = 15.0;
  long long d_min = 10;
  int iterations = 100;        // used when time_budget_s == 0
  double time_budget_s = 0.0;  // simulated seconds; > 0 replaces iterations
  ScenarioConfig scenario;     // scenario.seed is overwritten by `seed`
  DatasetSpec dataset;
  ModelSpec model;
  double beta = 0.1;
  std::uint64_t seed = 1;
  int eval_every = 1;
  LearningParams learning;
  SchedulingParams scheduling;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Scenario config with the run seed applied.
  ScenarioConfig scenario_config() const;
};

void to_json(nlohmann::json& j, const RunConfig& cfg);
void from_json(const nlohmann::json& j, RunConfig& cfg);

// Parses and validates a config document. Unknown top-level keys and a wrong
// schema_version are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

// Reads a config file. Relative dataset paths resolve against $DECANT_DATA_DIR
// when set, otherwise against the config file's directory.
RunConfig load_run_config(const std::string& path);

}  // namespace decant
