#pragma once

#include <cmath>
#include <algorithm>
#include <random>
#include <vector>

#include "decant/lead.hpp"
#include "decant/scenario.hpp"

namespace decant::oracle {

// A client with a chosen per-sample compute time and full-band spectral
// efficiency (noise 1 W, gain 1), so latencies are easy to hand-compute.
inline ClientProfile toy_client(int id, double sec_per_sample, double bits_per_hz) {
  ClientProfile c;
  c.id = id;
  c.distance_km = 1.0;
  c.cpu_hz = 1e9;
  c.cycles_per_sample = sec_per_sample * 1e9;
  c.gain = 1.0;
  c.tx_power_w = std::exp2(bits_per_hz) - 1.0;
  return c;
}

inline LeadParams toy_params(double tau, long long d_min = 10, double bandwidth = 1e6,
                             double bits = 1e5) {
  LeadParams p;
  p.total_bandwidth_hz = bandwidth;
  p.tau_s = tau;
  p.d_min = d_min;
  p.model_size_bits = bits;
  p.noise_w = 1.0;
  return p;
}

// Far clients on the default 2 km square need several hundred seconds to
// upload alone on a B/|I| share, so short deadlines need a deep tier budget.
inline LeadParams table_params(const ScenarioConfig& sc, double tau, long long d_min = 10) {
  LeadParams p;
  p.j_max = 4096;
  p.total_bandwidth_hz = sc.total_bandwidth_hz;
  p.tau_s = tau;
  p.d_min = d_min;
  p.model_size_bits = sc.model_size_bits;
  p.noise_w = sc.noise_w();
  return p;
}

// Single server serving jobs in list order: job k arrives at comp[k] and
// holds the server for up[k]. Returns departure times.
inline std::vector<double> queue_departures(const std::vector<double>& comp,
                                            const std::vector<double>& up) {
  std::vector<double> out;
  double server_free = 0.0;
  for (std::size_t k = 0; k < comp.size(); ++k) {
    const double start = std::max(server_free, comp[k]);
    server_free = start + up[k];
    out.push_back(server_free);
  }
  return out;
}

inline double upload_in_tier(const TierPlan& plan, const ClientProfile& c, int j) {
  const double b = plan.tier_bandwidth_hz[static_cast<std::size_t>(j - 1)];
  return plan.model_size_bits / (b * std::log2(1.0 + c.tx_power_w * c.gain / plan.noise_w));
}

// max(d_min, (j*tau - uploads from m to the end of the tier) * f / C)
inline std::vector<double> closed_form_workloads(const TierPlan& plan,
                                                 const std::vector<ClientProfile>& clients,
                                                 double d_min) {
  std::vector<double> d(clients.size(), 0.0);
  for (int j = 1; j <= plan.n_tiers; ++j) {
    const auto& order = plan.members(j);
    for (std::size_t m = 0; m < order.size(); ++m) {
      double suffix = 0.0;
      for (std::size_t n = m; n < order.size(); ++n) {
        suffix += upload_in_tier(plan, clients[static_cast<std::size_t>(order[n])], j);
      }
      const auto& c = clients[static_cast<std::size_t>(order[m])];
      d[static_cast<std::size_t>(c.id)] =
          std::max(d_min, (j * plan.tau_s - suffix) * c.cpu_hz / c.cycles_per_sample);
    }
  }
  return d;
}

// Every tier's queue, in plan order, finishes within j*tau.
inline bool queue_feasible(const TierPlan& plan, const std::vector<ClientProfile>& clients,
                           const std::vector<long long>& d) {
  for (int j = 1; j <= plan.n_tiers; ++j) {
    std::vector<double> comp, up;
    for (ClientId id : plan.members(j)) {
      const auto& c = clients[static_cast<std::size_t>(id)];
      comp.push_back(c.seconds_per_sample() * static_cast<double>(d[static_cast<std::size_t>(id)]));
      up.push_back(upload_in_tier(plan, c, j));
    }
    for (double t : queue_departures(comp, up)) {
      if (!meets_deadline(t, j * plan.tau_s)) return false;
    }
  }
  return true;
}

// Best weighted integer workload over the box [d_min, hi_i], by enumeration.
inline double exhaustive_best(const TierPlan& plan, const std::vector<ClientProfile>& clients,
                              long long d_min, const std::vector<long long>& hi,
                              std::vector<long long>& best) {
  const std::size_t n = clients.size();
  std::vector<long long> d(n, d_min);
  double best_obj = -1.0;
  while (true) {
    if (queue_feasible(plan, clients, d)) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        obj += plan.weight_of_tier(plan.tier_of(static_cast<ClientId>(i))) * static_cast<double>(d[i]);
      }
      if (obj > best_obj) {
        best_obj = obj;
        best = d;
      }
    }
    std::size_t k = 0;
    while (k < n && ++d[k] > hi[k]) d[k++] = d_min;
    if (k == n) break;
  }
  return best_obj;
}

struct SmallLpInstance {
  std::vector<ClientProfile> clients;
  TierPlan plan;
  long long d_min = 2;
  std::vector<long long> hi;  // per-client search bound (alone-in-queue)
};

// Random 1..4-client instance whose integer search box holds at most
// `max_box` points. Returns false when the draw is unusable.
template <class Rng>
bool small_lp_instance(Rng& rng, SmallLpInstance& out, double max_box = 3e5) {
  std::uniform_int_distribution<int> n_dist(1, 4);
  std::uniform_real_distribution<double> sps(0.01, 0.2), se(0.5, 6.0), tau_d(0.5, 3.0);
  const int n = n_dist(rng);
  out = SmallLpInstance{};
  for (int i = 0; i < n; ++i) out.clients.push_back(toy_client(i, sps(rng), se(rng)));
  try {
    out.plan = lead_cluster(out.clients, toy_params(tau_d(rng), out.d_min));
  } catch (const std::exception&) {
    return false;
  }
  double box = 1.0;
  for (int i = 0; i < n; ++i) {
    const int j = out.plan.tier_of(i);
    const double room = j * out.plan.tau_s - upload_in_tier(out.plan, out.clients[i], j);
    out.hi.push_back(static_cast<long long>(std::floor(room / out.clients[i].seconds_per_sample())));
    box *= static_cast<double>(out.hi.back() - out.d_min + 1);
  }
  return box <= max_box;
}

}  // namespace decant::oracle
