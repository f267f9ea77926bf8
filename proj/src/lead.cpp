#include "decant/lead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "decant/errors.hpp"
#include "decant/wireless.hpp"

namespace decant {

void TierPlan::assign_weights() {
  tier_weights.resize(static_cast<std::size_t>(n_tiers));
  for (int j = 1; j <= n_tiers; ++j) {
    tier_weights[static_cast<std::size_t>(j - 1)] =
        static_cast<double>(n_tiers - j + 1) / static_cast<double>(n_tiers);
  }
}

long long LeadParams::min_workload(ClientId id) const {
  if (!d_min_per_client.empty()) return d_min_per_client.at(static_cast<std::size_t>(id));
  return d_min;
}

double tier_upload_latency(const ClientProfile& client, int tier_count, double total_bandwidth_hz,
                           int n_total_clients, double model_size_bits, double noise_w) {
  if (tier_count < 1) throw ContractError("tier_upload_latency: tier population must be >= 1");
  if (n_total_clients < tier_count) {
    throw ContractError("tier_upload_latency: tier population exceeds client count");
  }
  const double b_j = static_cast<double>(tier_count) / n_total_clients * total_bandwidth_hz;
  return wireless::upload_latency_s({.bandwidth_hz = b_j,
                                     .tx_power_w = client.tx_power_w,
                                     .gain = client.gain,
                                     .noise_w = noise_w,
                                     .model_size_bits = model_size_bits});
}

bool meets_deadline(double completion_s, double deadline_s) {
  return completion_s <= deadline_s + 1e-9 * std::max(1.0, std::abs(deadline_s));
}

namespace {

void check_dense_ids(std::span<const ClientProfile> clients) {
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].id != static_cast<ClientId>(i)) {
      throw ContractError("client ids must be dense and ordered (0..n-1)");
    }
  }
}

double min_comp_s(const ClientProfile& c, const LeadParams& p) {
  return wireless::computing_latency_s(c.cycles_per_sample, c.cpu_hz,
                                       static_cast<double>(p.min_workload(c.id)));
}

}  // namespace

std::vector<ClientId> order_by_compute(std::span<const ClientProfile> clients,
                                       std::span<const ClientId> candidates,
                                       const LeadParams& params) {
  std::vector<ClientId> order(candidates.begin(), candidates.end());
  std::sort(order.begin(), order.end());
  std::vector<double> comp(clients.size());
  for (ClientId id : order) comp[static_cast<std::size_t>(id)] = min_comp_s(clients[id], params);
  std::stable_sort(order.begin(), order.end(), [&](ClientId a, ClientId b) {
    return params.order == UploadOrder::kAscending ? comp[a] < comp[b] : comp[a] > comp[b];
  });
  return order;
}

std::vector<ClientId> lead_select_tier(std::span<const ClientProfile> clients,
                                       std::span<const ClientId> candidates, int tier_j,
                                       const LeadParams& params) {
  const auto order = order_by_compute(clients, candidates, params);
  const int n_total = static_cast<int>(clients.size());
  const double deadline = params.tau_s * tier_j;
  std::vector<char> in(order.size(), 1);
  int count = static_cast<int>(order.size());

  std::vector<double> comp(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) comp[k] = min_comp_s(clients[order[k]], params);

  bool restart = true;
  while (restart && count > 0) {
    restart = false;
    double channel_free = 0.0;  // completion of the previous member in the queue
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (!in[k]) continue;
      const double up = tier_upload_latency(clients[order[k]], count, params.total_bandwidth_hz,
                                            n_total, params.model_size_bits, params.noise_w);
      const double wait = std::max(0.0, channel_free - comp[k]);
      const double completion = comp[k] + wait + up;
      if (completion > deadline) {
        in[k] = 0;
        --count;
        restart = true;
        break;
      }
      channel_free = completion;
    }
  }

  std::vector<ClientId> kept;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (in[k]) kept.push_back(order[k]);
  }
  return kept;
}

TierPlan lead_cluster(std::span<const ClientProfile> clients, const LeadParams& params) {
  if (clients.empty()) throw ContractError("lead_cluster: no clients");
  if (!(params.tau_s > 0.0)) throw ConfigError("tau_s", "must be positive");
  if (params.d_min < 1) throw ConfigError("d_min", "must be at least 1");
  if (params.j_max < 1) throw ConfigError("j_max", "must be at least 1");
  if (!params.d_min_per_client.empty() && params.d_min_per_client.size() != clients.size()) {
    throw ContractError("lead_cluster: d_min_per_client must have one entry per client");
  }
  check_dense_ids(clients);
  const int n = static_cast<int>(clients.size());

  for (const auto& c : clients) {
    const double alone = min_comp_s(c, params) +
                         tier_upload_latency(c, 1, params.total_bandwidth_hz, n,
                                             params.model_size_bits, params.noise_w);
    if (alone > params.tau_s * params.j_max) {
      std::ostringstream msg;
      msg << "client " << c.id << " cannot meet any tier deadline up to j_max=" << params.j_max
          << " (needs " << alone << " s alone in its tier, deadline " << params.tau_s * params.j_max
          << " s)";
      throw InfeasibleError(msg.str());
    }
  }

  TierPlan plan;
  plan.assignment.assign(clients.size(), 0);
  plan.tau_s = params.tau_s;
  plan.n_total_clients = n;
  plan.total_bandwidth_hz = params.total_bandwidth_hz;
  plan.model_size_bits = params.model_size_bits;
  plan.noise_w = params.noise_w;

  std::vector<ClientId> unassigned(clients.size());
  std::iota(unassigned.begin(), unassigned.end(), 0);
  for (int j = 1; !unassigned.empty(); ++j) {
    if (j > params.j_max) {
      throw InfeasibleError("lead_cluster: " + std::to_string(unassigned.size()) +
                            " clients left unassigned after j_max=" +
                            std::to_string(params.j_max) + " tiers");
    }
    auto tier = lead_select_tier(clients, unassigned, j, params);
    for (ClientId id : tier) plan.assignment[static_cast<std::size_t>(id)] = j;
    plan.tier_bandwidth_hz.push_back(static_cast<double>(tier.size()) / n *
                                     params.total_bandwidth_hz);
    plan.upload_order.push_back(std::move(tier));
    std::erase_if(unassigned, [&](ClientId id) { return plan.assignment[id] != 0; });
  }
  plan.n_tiers = static_cast<int>(plan.upload_order.size());
  plan.assign_weights();
  return plan;
}

double p1_objective(const TierPlan& plan) {
  double total = 0.0;
  for (int j : plan.assignment) {
    if (j > 0) total += plan.weight_of_tier(j);
  }
  return total;
}

double p0_objective(const TierPlan& plan, std::span<const double> workloads) {
  if (workloads.size() != plan.assignment.size()) {
    throw ContractError("p0_objective: workloads must cover every client");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < workloads.size(); ++i) {
    if (plan.assignment[i] > 0) total += workloads[i] * plan.weight_of_tier(plan.assignment[i]);
  }
  return total;
}

FeasibilityReport validate_plan(const TierPlan& plan, std::span<const ClientProfile> clients,
                                std::span<const double> workloads) {
  if (clients.size() != plan.assignment.size() || workloads.size() != clients.size()) {
    throw ContractError("validate_plan: plan, clients and workloads disagree on client count");
  }
  FeasibilityReport report;
  report.clients.resize(clients.size());
  report.ok = true;
  for (int j = 1; j <= plan.n_tiers; ++j) {
    const auto& members = plan.members(j);
    const double b_j = plan.tier_bandwidth_hz[static_cast<std::size_t>(j - 1)];
    std::vector<double> comp, up;
    for (ClientId id : members) {
      const auto& c = clients[static_cast<std::size_t>(id)];
      comp.push_back(wireless::computing_latency_s(c.cycles_per_sample, c.cpu_hz,
                                                   workloads[static_cast<std::size_t>(id)]));
      up.push_back(wireless::upload_latency_s({.bandwidth_hz = b_j,
                                               .tx_power_w = c.tx_power_w,
                                               .gain = c.gain,
                                               .noise_w = plan.noise_w,
                                               .model_size_bits = plan.model_size_bits}));
    }
    const auto wait = wireless::tier_waiting_times(comp, up);
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& r = report.clients[static_cast<std::size_t>(members[k])];
      r.id = members[k];
      r.tier = j;
      r.comp_s = comp[k];
      r.wait_s = wait[k];
      r.upload_s = up[k];
      r.completion_s = comp[k] + wait[k] + up[k];
      r.deadline_s = plan.deadline_s(j);
      r.ok = meets_deadline(r.completion_s, r.deadline_s);
      report.ok = report.ok && r.ok;
    }
  }
  for (std::size_t i = 0; i < report.clients.size(); ++i) {
    auto& r = report.clients[i];
    if (r.tier != 0) continue;
    r.id = static_cast<ClientId>(i);
    if (plan.assignment[i] == 0) {
      r.ok = true;  // excluded from the plan, never transmits
    } else {
      report.ok = false;  // assigned but missing from its tier's upload order
    }
  }
  return report;
}

std::string FeasibilityReport::summary() const {
  std::ostringstream out;
  int bad = 0;
  for (const auto& c : clients) {
    if (!c.ok) {
      if (bad++ < 5) {
        out << "client " << c.id << " tier " << c.tier << ": completion " << c.completion_s
            << " s > deadline " << c.deadline_s << " s; ";
      }
    }
  }
  if (bad == 0) return "all clients meet their tier deadlines";
  out << bad << " client(s) miss their deadline";
  return out.str();
}

std::string to_string(UploadOrder order) {
  return order == UploadOrder::kAscending ? "ascending" : "descending";
}

UploadOrder upload_order_from_string(const std::string& s) {
  if (s == "ascending") return UploadOrder::kAscending;
  if (s == "descending") return UploadOrder::kDescending;
  throw ConfigError("scheduling.order", "expected \"ascending\" or \"descending\", got \"" + s + "\"");
}

void to_json(nlohmann::json& j, const TierPlan& plan) {
  nlohmann::json tiers = nlohmann::json::array();
  for (int t = 1; t <= plan.n_tiers; ++t) {
    tiers.push_back({{"tier", t},
                     {"bandwidth_hz", plan.tier_bandwidth_hz[static_cast<std::size_t>(t - 1)]},
                     {"weight", plan.weight_of_tier(t)},
                     {"deadline_s", plan.deadline_s(t)},
                     {"upload_order", plan.members(t)}});
  }
  j = nlohmann::json{{"tau_s", plan.tau_s},
                     {"n_tiers", plan.n_tiers},
                     {"n_clients", plan.n_total_clients},
                     {"total_bandwidth_hz", plan.total_bandwidth_hz},
                     {"model_size_bits", plan.model_size_bits},
                     {"noise_w", plan.noise_w},
                     {"assignment", plan.assignment},
                     {"tiers", tiers}};
}

void from_json(const nlohmann::json& j, TierPlan& plan) {
  TierPlan p;
  j.at("tau_s").get_to(p.tau_s);
  j.at("n_tiers").get_to(p.n_tiers);
  j.at("n_clients").get_to(p.n_total_clients);
  j.at("total_bandwidth_hz").get_to(p.total_bandwidth_hz);
  j.at("model_size_bits").get_to(p.model_size_bits);
  j.at("noise_w").get_to(p.noise_w);
  j.at("assignment").get_to(p.assignment);
  const auto& tiers = j.at("tiers");
  if (static_cast<int>(tiers.size()) != p.n_tiers) {
    throw ParseError("plan: n_tiers does not match the tiers array");
  }
  for (const auto& t : tiers) {
    p.tier_bandwidth_hz.push_back(t.at("bandwidth_hz").get<double>());
    p.upload_order.push_back(t.at("upload_order").get<std::vector<ClientId>>());
  }
  if (static_cast<int>(p.assignment.size()) != p.n_total_clients) {
    throw ParseError("plan: assignment length does not match n_clients");
  }
  for (int t = 1; t <= p.n_tiers; ++t) {
    for (ClientId id : p.members(t)) {
      if (id < 0 || id >= p.n_total_clients || p.assignment[static_cast<std::size_t>(id)] != t) {
        throw ParseError("plan: upload order of tier " + std::to_string(t) +
                         " disagrees with the assignment");
      }
    }
  }
  p.assign_weights();
  plan = std::move(p);
}

}  // namespace decant
