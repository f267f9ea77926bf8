#include "decant/workload_lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "decant/errors.hpp"
#include "decant/simplex.hpp"
#include "decant/wireless.hpp"

namespace decant {

namespace {

long long min_workload(const WorkloadOptions& opt, long long d_min, ClientId id) {
  return opt.d_min_per_client.empty() ? d_min : opt.d_min_per_client.at(static_cast<std::size_t>(id));
}

}  // namespace

LinearProgram build_lp(const TierPlan& plan, std::span<const ClientProfile> clients,
                       long long d_min, const WorkloadOptions& opt) {
  if (clients.size() != plan.assignment.size()) {
    throw ContractError("build_lp: plan and client list disagree on client count");
  }
  LinearProgram lp;
  for (int j = 1; j <= plan.n_tiers; ++j) {
    const auto& members = plan.members(j);
    if (members.empty()) continue;
    const double b_j = plan.tier_bandwidth_hz[static_cast<std::size_t>(j - 1)];
    std::vector<double> up(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& c = clients[static_cast<std::size_t>(members[k])];
      up[k] = wireless::upload_latency_s({.bandwidth_hz = b_j,
                                          .tx_power_w = c.tx_power_w,
                                          .gain = c.gain,
                                          .noise_w = plan.noise_w,
                                          .model_size_bits = plan.model_size_bits});
    }
    double suffix = 0.0;
    std::vector<double> suffix_up(members.size());
    for (std::size_t k = members.size(); k-- > 0;) {
      suffix += up[k];
      suffix_up[k] = suffix;
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      const ClientId id = members[k];
      const auto& c = clients[static_cast<std::size_t>(id)];
      const double coef = c.seconds_per_sample();
      const double bound = plan.deadline_s(j) - suffix_up[k];
      const auto lo = static_cast<double>(min_workload(opt, d_min, id));
      if (!meets_deadline(coef * lo, bound)) {
        std::ostringstream msg;
        msg << "build_lp: client " << id << " in tier " << j << " cannot fit d_min=" << lo
            << " (needs " << coef * lo << " s, row allows " << bound << " s)";
        throw InfeasibleError(msg.str());
      }
      const std::size_t var = lp.objective.size();
      lp.variable_client.push_back(id);
      lp.objective.push_back(plan.weight_of_tier(j));
      lp.rows.push_back({{{var, coef}}, bound});
      lp.lower.push_back(lo);
      double hi = std::max(lo, bound / coef);
      if (opt.cap_to_dataset) {
        hi = std::max(lo, std::min(hi, static_cast<double>(c.dataset_indices.size())));
      }
      lp.upper.push_back(hi);
    }
  }
  return lp;
}

std::vector<double> simplex_solve(const LinearProgram& lp, int n_clients) {
  simplex::Problem p;
  const std::size_t n = lp.n_variables();
  p.c = lp.objective;
  p.lower = lp.lower;
  p.upper = lp.upper;
  p.a.reserve(lp.rows.size());
  for (const auto& row : lp.rows) {
    if (row.terms.empty()) throw ContractError("simplex_solve: row without variables");
    std::vector<double> dense(n, 0.0);
    for (const auto& [var, coef] : row.terms) dense.at(var) += coef;
    p.a.push_back(std::move(dense));
    p.b.push_back(row.bound);
  }
  const auto sol = simplex::maximize(p);
  std::vector<double> d(static_cast<std::size_t>(n_clients), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    d.at(static_cast<std::size_t>(lp.variable_client[k])) = sol.x[k];
  }
  return d;
}

WorkloadAssignment floor_and_certify(std::span<const double> d_star, const TierPlan& plan,
                                     std::span<const ClientProfile> clients) {
  WorkloadAssignment w;
  w.d_star.assign(d_star.begin(), d_star.end());
  w.d_int.resize(d_star.size());
  for (std::size_t i = 0; i < d_star.size(); ++i) {
    // Snap values within rounding noise of an integer before flooring, so a
    // vertex that lands on 474.9999999999 is read as 475.
    const double nearest = std::round(d_star[i]);
    const bool snap = std::abs(d_star[i] - nearest) <= 1e-9 * std::max(1.0, std::abs(nearest));
    w.d_int[i] = static_cast<long long>(snap ? nearest : std::floor(d_star[i]));
  }
  w.objective_cont = p0_objective(plan, w.d_star);
  const auto d_int = w.d_int_as_double();
  w.objective_int = p0_objective(plan, d_int);
  const auto report = validate_plan(plan, clients, d_int);
  if (!report.ok) {
    throw std::logic_error("floor_and_certify: integer workloads break the plan: " +
                           report.summary());
  }
  return w;
}

WorkloadAssignment optimize_workload(const TierPlan& plan, std::span<const ClientProfile> clients,
                                     long long d_min, const WorkloadOptions& opt) {
  const auto lp = build_lp(plan, clients, d_min, opt);
  const auto d_star = simplex_solve(lp, static_cast<int>(clients.size()));
  return floor_and_certify(d_star, plan, clients);
}

WorkloadAssignment uniform_workload(const TierPlan& plan, long long d_min,
                                    const WorkloadOptions& opt) {
  WorkloadAssignment w;
  const std::size_t n = plan.assignment.size();
  w.d_int.resize(n);
  w.d_star.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.d_int[i] = min_workload(opt, d_min, static_cast<ClientId>(i));
    w.d_star[i] = static_cast<double>(w.d_int[i]);
  }
  w.objective_cont = p0_objective(plan, w.d_star);
  w.objective_int = w.objective_cont;
  return w;
}

void to_json(nlohmann::json& j, const WorkloadAssignment& w) {
  j = nlohmann::json{{"d_star", w.d_star},
                     {"d_int", w.d_int},
                     {"objective_cont", w.objective_cont},
                     {"objective_int", w.objective_int}};
}

void from_json(const nlohmann::json& j, WorkloadAssignment& w) {
  j.at("d_star").get_to(w.d_star);
  j.at("d_int").get_to(w.d_int);
  j.at("objective_cont").get_to(w.objective_cont);
  j.at("objective_int").get_to(w.objective_int);
}

}  // namespace decant
