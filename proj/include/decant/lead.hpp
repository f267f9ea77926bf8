#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/scenario.hpp"

namespace decant {

enum class UploadOrder { kAscending, kDescending };

// Tiering produced by LEAD. Tiers are 1-based; vectors indexed by tier use
// position j-1. Client ids are dense 0..n-1. Tier 0 marks a client excluded
// from the plan (only single-tier selections produce it).
struct TierPlan {
  std::vector<int> assignment;                   // client id -> tier j >= 1
  std::vector<double> tier_bandwidth_hz;         // b_j
  std::vector<std::vector<ClientId>> upload_order;
  std::vector<double> tier_weights;              // w_j = (|J| - j + 1) / |J|
  double tau_s = 0.0;
  int n_tiers = 0;
  int n_total_clients = 0;
  double total_bandwidth_hz = 0.0;
  double model_size_bits = 0.0;
  double noise_w = 0.0;

  int tier_of(ClientId id) const { return assignment.at(static_cast<std::size_t>(id)); }
  double weight_of_tier(int j) const { return tier_weights.at(static_cast<std::size_t>(j - 1)); }
  double deadline_s(int j) const { return tau_s * j; }
  const std::vector<ClientId>& members(int j) const {
    return upload_order.at(static_cast<std::size_t>(j - 1));
  }
  // Recomputes weights from n_tiers.
  void assign_weights();
};

struct LeadParams {
  double total_bandwidth_hz = 1e6;
  double tau_s = 15.0;
  long long d_min = 10;
  // Optional per-client minimum workload overriding d_min (indexed by id).
  std::vector<long long> d_min_per_client;
  double model_size_bits = 1e5;
  double noise_w = 0.0;
  UploadOrder order = UploadOrder::kAscending;
  int j_max = 64;

  long long min_workload(ClientId id) const;
};

// Upload latency of a client when its tier holds `tier_count` of the
// `n_total_clients` clients and gets the proportional share of B.
double tier_upload_latency(const ClientProfile& client, int tier_count, double total_bandwidth_hz,
                           int n_total_clients, double model_size_bits, double noise_w);

// Deadline comparison shared by the scheduler and the validators.
bool meets_deadline(double completion_s, double deadline_s);

// One tier of LEAD: tentatively puts every candidate in tier j (ordered by
// computing latency), then drops violators one at a time, restarting the scan
// after each removal. Returns the surviving clients in upload order.
std::vector<ClientId> lead_select_tier(std::span<const ClientProfile> clients,
                                       std::span<const ClientId> candidates, int tier_j,
                                       const LeadParams& params);

// Orders candidates by computing latency at the minimum workload; stable by id.
std::vector<ClientId> order_by_compute(std::span<const ClientProfile> clients,
                                       std::span<const ClientId> candidates,
                                       const LeadParams& params);

// Builds tiers 1, 2, ... until every client is placed. Throws
// InfeasibleError naming a client that cannot meet even the j_max deadline
// when alone in its tier.
TierPlan lead_cluster(std::span<const ClientProfile> clients, const LeadParams& params);

double p1_objective(const TierPlan& plan);
// Sum over clients of d_i * w_tier(i). `workloads` is indexed by client id.
double p0_objective(const TierPlan& plan, std::span<const double> workloads);

struct ClientFeasibility {
  ClientId id = 0;
  int tier = 0;
  double comp_s = 0.0;
  double wait_s = 0.0;
  double upload_s = 0.0;
  double completion_s = 0.0;
  double deadline_s = 0.0;
  bool ok = false;
};

struct FeasibilityReport {
  std::vector<ClientFeasibility> clients;  // indexed by client id
  bool ok = false;
  std::string summary() const;
};

// Recomputes computing latency, queue waits (in the plan's upload order) and
// uploads for the given workloads and checks each completion against j*tau.
FeasibilityReport validate_plan(const TierPlan& plan, std::span<const ClientProfile> clients,
                                std::span<const double> workloads);

void to_json(nlohmann::json& j, const TierPlan& plan);
void from_json(const nlohmann::json& j, TierPlan& plan);

std::string to_string(UploadOrder order);
UploadOrder upload_order_from_string(const std::string& s);

}  // namespace decant
