#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/config.hpp"
#include "decant/dataset.hpp"
#include "decant/lead.hpp"
#include "decant/model.hpp"
#include "decant/scenario.hpp"
#include "decant/workload_lp.hpp"

namespace decant {

// Everything the runners share for one seed: client profiles with their data
// partitions, plus the train and test sets.
struct Environment {
  ScenarioConfig scenario;
  std::vector<ClientProfile> clients;
  LabeledDataset train;
  LabeledDataset test;
};

Environment prepare_environment(const RunConfig& cfg);
LabeledDataset load_train_set(const DatasetSpec& spec, std::uint64_t seed);
LabeledDataset load_test_set(const DatasetSpec& spec, std::uint64_t seed);

// Tiering plus workloads. `round_s` is the simulated duration of one global
// iteration: tau for the deadline-based algorithms, the all-client queue
// makespan for FedAvg.
struct Schedule {
  Algorithm algorithm = Algorithm::kDecantFed;
  TierPlan plan;
  WorkloadAssignment workload;
  double round_s = 0.0;
};

Schedule make_schedule(const RunConfig& cfg, const Environment& env);

// FedProx client selection: tier-1 LEAD scan with deadline tau over all
// clients; the rest are excluded (tier 0). Throws InfeasibleError when nobody fits.
TierPlan fedprox_selection(std::span<const ClientProfile> clients, const LeadParams& params);

// FedAvg: every client in one TDMA queue on the full band, ascending compute
// order; plan.tau_s is the queue makespan at d_min.
TierPlan fedavg_plan(std::span<const ClientProfile> clients, const LeadParams& params);

struct MetricsRow {
  int iteration = 0;
  double time_s = 0.0;
  int participants = 0;
  double train_loss = 0.0;  // NaN when nobody contributed this round
  double test_acc = 0.0;
  double test_loss = 0.0;
  std::vector<int> tier_counts;  // participants per tier 1..n_tiers
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
};

// Which global model a local update was trained from.
struct Provenance {
  int iteration = 0;     // when the update was aggregated
  ClientId client = 0;
  int base_version = 0;  // iteration that produced the starting global model
  int tier = 0;
};

struct RunResult {
  RunConfig config;
  Schedule schedule;
  MetricsLog log;
  std::vector<Provenance> provenance;
  ModelParams final_model;
  std::vector<std::size_t> client_data_sizes;
};

// Runs the configured algorithm from scratch. The `schedule` overload skips
// scheduling and uses a precomputed plan (e.g. read back from a plan file).
RunResult run(const RunConfig& cfg);
RunResult run(const RunConfig& cfg, const Environment& env);
RunResult run(const RunConfig& cfg, const Environment& env, const Schedule& schedule);

RunResult run_decantfed(RunConfig cfg);
RunResult run_fedavg(RunConfig cfg);
RunResult run_fedprox(RunConfig cfg);
RunResult run_uniform_decant(RunConfig cfg);

inline constexpr const char* kMetricsCsvHeader =
    "iter,time_s,participants,train_loss,test_acc,tier_counts";

void write_metrics_csv(std::ostream& out, const MetricsLog& log);
std::string metrics_csv(const MetricsLog& log);
// Throws ParseError if the header or a row does not match the schema.
MetricsLog parse_metrics_csv(std::istream& in);

// First simulated time at which test accuracy reaches `target`.
std::optional<double> time_to_accuracy(const MetricsLog& log, double target);

nlohmann::json run_summary(const RunResult& result, std::span<const double> targets);

// Plan document: schedule + the identity of the scenario it was built for.
nlohmann::json plan_document(const RunConfig& cfg, const Environment& env, const Schedule& s);
// Throws ConfigError when the document was built for a different scenario or
// algorithm than `cfg`.
Schedule schedule_from_document(const nlohmann::json& doc, const RunConfig& cfg,
                                const Environment& env);

// Stable 64-bit FNV-1a digest of client profiles (positions, hardware, data).
std::string scenario_digest(std::span<const ClientProfile> clients);

}  // namespace decant
