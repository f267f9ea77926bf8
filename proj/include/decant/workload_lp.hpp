#pragma once

#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/lead.hpp"
#include "decant/scenario.hpp"

namespace decant {

// maximize sum_k objective[k] * d_k over one variable per client, subject to
// sparse rows sum coef * d <= bound and lower <= d <= upper.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
    double bound = 0.0;
  };
  std::vector<ClientId> variable_client;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t n_variables() const { return objective.size(); }
};

struct WorkloadOptions {
  // Optional per-client d_min override, indexed by client id.
  std::vector<long long> d_min_per_client;
  // Caps d_i at |D_i| (never below d_min). Off by default: the workload
  // problem itself has no such constraint.
  bool cap_to_dataset = false;
};

struct WorkloadAssignment {
  std::vector<double> d_star;    // continuous optimum, indexed by client id
  std::vector<long long> d_int;  // floored
  double objective_cont = 0.0;
  double objective_int = 0.0;

  std::vector<double> d_int_as_double() const { return {d_int.begin(), d_int.end()}; }
};

// One row per client m of tier j under the frozen upload order:
//   (C_m / f_m) d_m <= j*tau - sum of uploads from position m to the tier's end.
// Throws InfeasibleError if a row cannot hold d_min.
LinearProgram build_lp(const TierPlan& plan, std::span<const ClientProfile> clients,
                       long long d_min, const WorkloadOptions& opt = {});

// Solves the LP with the bounded-variable simplex; result indexed by client id.
std::vector<double> simplex_solve(const LinearProgram& lp, int n_clients);

// Floors d_star and re-validates the plan with the integer workloads.
WorkloadAssignment floor_and_certify(std::span<const double> d_star, const TierPlan& plan,
                                     std::span<const ClientProfile> clients);

// build_lp -> simplex_solve -> floor_and_certify.
WorkloadAssignment optimize_workload(const TierPlan& plan, std::span<const ClientProfile> clients,
                                     long long d_min, const WorkloadOptions& opt = {});

// Every client at its minimum workload.
WorkloadAssignment uniform_workload(const TierPlan& plan, long long d_min,
                                    const WorkloadOptions& opt = {});

void to_json(nlohmann::json& j, const WorkloadAssignment& w);
void from_json(const nlohmann::json& j, WorkloadAssignment& w);

}  // namespace decant
