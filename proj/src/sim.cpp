#include "decant/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "decant/errors.hpp"
#include "decant/fl.hpp"
#include "decant/format.hpp"
#include "decant/rng.hpp"
#include "decant/wireless.hpp"

namespace decant {

LabeledDataset load_train_set(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == "idx") {
    return load_idx(spec.train_images, spec.train_labels, Split::kTrain, spec.max_train);
  }
  return synth_gaussian(spec.n_classes, spec.n_per_class, spec.n_features, spec.class_sep, seed, 0);
}

LabeledDataset load_test_set(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.kind == "idx") {
    auto ds = load_idx(spec.test_images, spec.test_labels, Split::kTest, spec.max_test);
    return ds;
  }
  return synth_gaussian(spec.n_classes, spec.test_per_class, spec.n_features, spec.class_sep, seed,
                        1);
}

Environment prepare_environment(const RunConfig& cfg) {
  cfg.validate();
  Environment env;
  env.scenario = cfg.scenario_config();
  env.train = load_train_set(cfg.dataset, cfg.seed);
  env.test = load_test_set(cfg.dataset, cfg.seed);
  env.train.validate();
  if (env.test.n_features != env.train.n_features) {
    throw ContractError("train and test sets have different feature counts");
  }
  env.test.n_classes = std::max(env.test.n_classes, env.train.n_classes);
  env.train.n_classes = env.test.n_classes;
  env.clients = generate_scenario(env.scenario);
  auto parts = dirichlet_partition(env.train.labels, env.scenario.n_clients, cfg.beta, cfg.seed);
  for (std::size_t i = 0; i < parts.size(); ++i) env.clients[i].dataset_indices = std::move(parts[i]);
  return env;
}

namespace {

LeadParams lead_params(const RunConfig& cfg, const ScenarioConfig& sc) {
  LeadParams p;
  p.total_bandwidth_hz = sc.total_bandwidth_hz;
  p.tau_s = cfg.tau_s;
  p.d_min = cfg.d_min;
  p.model_size_bits = sc.model_size_bits;
  p.noise_w = sc.noise_w();
  p.order = cfg.scheduling.order;
  p.j_max = cfg.scheduling.j_max;
  return p;
}

TierPlan single_tier_plan(int n_clients, const LeadParams& params, std::vector<ClientId> members,
                          double bandwidth_hz, double tau_s) {
  TierPlan plan;
  plan.assignment.assign(static_cast<std::size_t>(n_clients), 0);
  for (ClientId id : members) plan.assignment[static_cast<std::size_t>(id)] = 1;
  plan.tier_bandwidth_hz = {bandwidth_hz};
  plan.upload_order = {std::move(members)};
  plan.tau_s = tau_s;
  plan.n_tiers = 1;
  plan.n_total_clients = n_clients;
  plan.total_bandwidth_hz = params.total_bandwidth_hz;
  plan.model_size_bits = params.model_size_bits;
  plan.noise_w = params.noise_w;
  plan.assign_weights();
  return plan;
}

}  // namespace

TierPlan fedprox_selection(std::span<const ClientProfile> clients, const LeadParams& params) {
  std::vector<ClientId> all(clients.size());
  std::iota(all.begin(), all.end(), 0);
  auto kept = lead_select_tier(clients, all, 1, params);
  if (kept.empty()) {
    throw InfeasibleError("fedprox: no client can upload before the deadline tau=" +
                          format_double(params.tau_s) + " s; try a larger tau");
  }
  const double b = static_cast<double>(kept.size()) / static_cast<double>(clients.size()) *
                   params.total_bandwidth_hz;
  return single_tier_plan(static_cast<int>(clients.size()), params, std::move(kept), b,
                          params.tau_s);
}

TierPlan fedavg_plan(std::span<const ClientProfile> clients, const LeadParams& params) {
  std::vector<ClientId> all(clients.size());
  std::iota(all.begin(), all.end(), 0);
  auto order = order_by_compute(clients, all, params);
  std::vector<double> comp, up;
  for (ClientId id : order) {
    const auto& c = clients[static_cast<std::size_t>(id)];
    comp.push_back(wireless::computing_latency_s(c.cycles_per_sample, c.cpu_hz,
                                                 static_cast<double>(params.min_workload(id))));
    up.push_back(wireless::upload_latency_s({.bandwidth_hz = params.total_bandwidth_hz,
                                             .tx_power_w = c.tx_power_w,
                                             .gain = c.gain,
                                             .noise_w = params.noise_w,
                                             .model_size_bits = params.model_size_bits}));
  }
  const auto done = wireless::tier_completion_times(comp, up);
  const double makespan = done.empty() ? 0.0 : *std::max_element(done.begin(), done.end());
  return single_tier_plan(static_cast<int>(clients.size()), params, std::move(order),
                          params.total_bandwidth_hz, makespan);
}

Schedule make_schedule(const RunConfig& cfg, const Environment& env) {
  const auto params = lead_params(cfg, env.scenario);
  WorkloadOptions wopt;
  wopt.cap_to_dataset = cfg.scheduling.cap_to_dataset;
  Schedule s;
  s.algorithm = cfg.algorithm;
  switch (cfg.algorithm) {
    case Algorithm::kDecantFed:
      s.plan = lead_cluster(env.clients, params);
      s.workload = optimize_workload(s.plan, env.clients, cfg.d_min, wopt);
      s.round_s = cfg.tau_s;
      break;
    case Algorithm::kUniformDecant:
      s.plan = lead_cluster(env.clients, params);
      s.workload = uniform_workload(s.plan, cfg.d_min);
      s.round_s = cfg.tau_s;
      break;
    case Algorithm::kFedProx:
      s.plan = fedprox_selection(env.clients, params);
      s.workload = optimize_workload(s.plan, env.clients, cfg.d_min, wopt);
      s.round_s = cfg.tau_s;
      break;
    case Algorithm::kFedAvg:
      s.plan = fedavg_plan(env.clients, params);
      s.workload = uniform_workload(s.plan, cfg.d_min);
      s.round_s = s.plan.tau_s;
      break;
  }
  return s;
}

RunResult run(const RunConfig& cfg) {
  const auto env = prepare_environment(cfg);
  return run(cfg, env);
}

RunResult run(const RunConfig& cfg, const Environment& env) {
  return run(cfg, env, make_schedule(cfg, env));
}

RunResult run(const RunConfig& cfg, const Environment& env, const Schedule& schedule) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  res.schedule = schedule;
  const auto& plan = schedule.plan;
  const auto n = env.clients.size();
  if (plan.assignment.size() != n) throw ContractError("run: plan does not match the scenario");

  int total_iters = cfg.iterations;
  if (cfg.time_budget_s > 0.0) {
    total_iters = static_cast<int>(std::floor(cfg.time_budget_s / schedule.round_s + 1e-9));
  }

  const auto layers =
      make_layers(env.train.n_features, cfg.model.hidden, static_cast<std::size_t>(env.train.n_classes));
  ModelParams global = init_params(layers, cfg.seed);

  // Each client keeps the last global model it received and its version.
  std::vector<ModelParams> base(n, global);
  std::vector<int> base_version(n, 0);
  res.client_data_sizes.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.client_data_sizes[i] = env.clients[i].dataset_indices.size();

  const double mu = cfg.algorithm == Algorithm::kFedProx ? cfg.learning.mu : 0.0;

  for (int l = 1; l <= total_iters; ++l) {
    const auto k_set = participants(l, plan);
    std::vector<LocalTrainResult> updates;
    std::vector<double> weights;
    double loss_sum = 0.0;
    int contributors = 0;
    MetricsRow row;
    row.iteration = l;
    row.participants = static_cast<int>(k_set.clients.size());
    row.tier_counts.assign(static_cast<std::size_t>(plan.n_tiers), 0);

    for (std::size_t k = 0; k < k_set.clients.size(); ++k) {
      const ClientId id = k_set.clients[k];
      const auto idx = static_cast<std::size_t>(id);
      const int tier = plan.tier_of(id);
      ++row.tier_counts[static_cast<std::size_t>(tier - 1)];
      TrainSpec spec;
      spec.samples = schedule.workload.d_int.at(idx);
      spec.batch_size = cfg.learning.batch_size;
      spec.learning_rate = learning_rate(tier, cfg.learning.delta1, cfg.learning.alpha);
      spec.clip_zeta = cfg.learning.zeta;
      spec.prox_mu = mu;
      Rng rng(derive_seed(cfg.seed, Stream::kLocalTrain,
                          {static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(l)}));
      res.provenance.push_back({l, id, base_version[idx], tier});
      auto upd = local_train(base[idx], env.train, env.clients[idx].dataset_indices, spec, rng, id);
      if (!upd.contributed) continue;
      loss_sum += upd.mean_loss;
      ++contributors;
      weights.push_back(cfg.scheduling.aggregate_weight == AggregateWeight::kDatasetSize
                            ? static_cast<double>(res.client_data_sizes[idx])
                            : static_cast<double>(spec.samples));
      updates.push_back(std::move(upd));
    }

    if (!updates.empty()) {
      std::vector<Contribution> contribs;
      for (std::size_t k = 0; k < updates.size(); ++k) {
        contribs.push_back({&updates[k].params, weights[k]});
      }
      global = aggregate(contribs).params;
      if (!global.all_finite()) {
        throw NonFiniteError("aggregate: non-finite global model at iteration " +
                             std::to_string(l));
      }
    }
    for (ClientId id : k_set.clients) {
      base[static_cast<std::size_t>(id)] = global;
      base_version[static_cast<std::size_t>(id)] = l;
    }

    if (l % cfg.eval_every == 0 || l == total_iters) {
      row.time_s = schedule.round_s * l;
      row.train_loss =
          contributors > 0 ? loss_sum / contributors : std::numeric_limits<double>::quiet_NaN();
      const auto ev = evaluate(global, env.test);
      row.test_acc = ev.accuracy;
      row.test_loss = ev.mean_loss;
      res.log.rows.push_back(std::move(row));
    }
  }
  res.final_model = std::move(global);
  return res;
}

RunResult run_decantfed(RunConfig cfg) {
  cfg.algorithm = Algorithm::kDecantFed;
  return run(cfg);
}

RunResult run_fedavg(RunConfig cfg) {
  cfg.algorithm = Algorithm::kFedAvg;
  return run(cfg);
}

RunResult run_fedprox(RunConfig cfg) {
  cfg.algorithm = Algorithm::kFedProx;
  return run(cfg);
}

RunResult run_uniform_decant(RunConfig cfg) {
  cfg.algorithm = Algorithm::kUniformDecant;
  return run(cfg);
}

void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.iteration << ',' << format_double(r.time_s) << ',' << r.participants << ','
        << format_double(r.train_loss) << ',' << format_double(r.test_acc) << ',';
    for (std::size_t k = 0; k < r.tier_counts.size(); ++k) {
      if (k) out << ';';
      out << r.tier_counts[k];
    }
    out << '\n';
  }
}

std::string metrics_csv(const MetricsLog& log) {
  std::ostringstream out;
  write_metrics_csv(out, log);
  return out.str();
}

namespace {

double parse_number(const std::string& s, int line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ParseError("metrics csv line " + std::to_string(line) + ": bad number \"" + s + "\"");
  }
  return v;
}

}  // namespace

MetricsLog parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw ParseError("metrics csv: header must be \"" + std::string(kMetricsCsvHeader) + "\"");
  }
  MetricsLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) {
      throw ParseError("metrics csv line " + std::to_string(lineno) + ": expected 6 fields");
    }
    MetricsRow r;
    r.iteration = static_cast<int>(parse_number(f[0], lineno));
    r.time_s = parse_number(f[1], lineno);
    r.participants = static_cast<int>(parse_number(f[2], lineno));
    r.train_loss = parse_number(f[3], lineno);
    r.test_acc = parse_number(f[4], lineno);
    std::stringstream ts(f[5]);
    while (std::getline(ts, cell, ';')) r.tier_counts.push_back(static_cast<int>(parse_number(cell, lineno)));
    log.rows.push_back(std::move(r));
  }
  return log;
}

std::optional<double> time_to_accuracy(const MetricsLog& log, double target) {
  for (const auto& r : log.rows) {
    if (r.test_acc >= target) return r.time_s;
  }
  return std::nullopt;
}

std::string scenario_digest(std::span<const ClientProfile> clients) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& c : clients) {
    mix(&c.id, sizeof(c.id));
    for (double v : {c.x_km, c.y_km, c.distance_km, c.gain, c.cpu_hz, c.cycles_per_sample,
                     c.tx_power_w}) {
      mix(&v, sizeof(v));
    }
    const std::uint64_t n = c.dataset_indices.size();
    mix(&n, sizeof(n));
    for (std::size_t idx : c.dataset_indices) {
      const std::uint64_t v = idx;
      mix(&v, sizeof(v));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json run_summary(const RunResult& result, std::span<const double> targets) {
  const auto& rows = result.log.rows;
  nlohmann::json tta = nlohmann::json::array();
  for (double t : targets) {
    const auto hit = time_to_accuracy(result.log, t);
    tta.push_back({{"target", t}, {"time_s", hit ? nlohmann::json(*hit) : nlohmann::json()}});
  }
  std::vector<std::size_t> tier_sizes;
  for (const auto& members : result.schedule.plan.upload_order) tier_sizes.push_back(members.size());
  const auto d = result.schedule.workload.d_int_as_double();
  return {
      {"algorithm", to_string(result.config.algorithm)},
      {"seed", result.config.seed},
      {"beta", result.config.beta},
      {"iterations", rows.empty() ? 0 : rows.back().iteration},
      {"final_time_s", rows.empty() ? 0.0 : rows.back().time_s},
      {"final_accuracy", rows.empty() ? nlohmann::json() : nlohmann::json(rows.back().test_acc)},
      {"final_test_loss", rows.empty() ? nlohmann::json() : nlohmann::json(rows.back().test_loss)},
      {"time_to_accuracy", tta},
      {"plan",
       {{"n_tiers", result.schedule.plan.n_tiers},
        {"tier_sizes", tier_sizes},
        {"tau_s", result.config.tau_s},
        {"round_s", result.schedule.round_s},
        {"participating_clients",
         std::count_if(result.schedule.plan.assignment.begin(),
                       result.schedule.plan.assignment.end(), [](int j) { return j > 0; })},
        {"p0_objective", p0_objective(result.schedule.plan, d)}}},
  };
}

nlohmann::json plan_document(const RunConfig& cfg, const Environment& env, const Schedule& s) {
  return {{"format", "decant-plan"},
          {"version", 1},
          {"algorithm", to_string(s.algorithm)},
          {"seed", cfg.seed},
          {"beta", cfg.beta},
          {"tau_s", cfg.tau_s},
          {"d_min", cfg.d_min},
          {"scenario_digest", scenario_digest(env.clients)},
          {"round_s", s.round_s},
          {"plan", s.plan},
          {"workload", s.workload}};
}

Schedule schedule_from_document(const nlohmann::json& doc, const RunConfig& cfg,
                                const Environment& env) {
  if (doc.value("format", "") != "decant-plan") {
    throw ParseError("plan document: missing or wrong \"format\" tag");
  }
  if (doc.value("version", 0) != 1) throw ParseError("plan document: unsupported version");
  Schedule s;
  s.algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
  if (s.algorithm != cfg.algorithm) {
    throw ConfigError("algorithm", "plan was built for " + to_string(s.algorithm) +
                                       ", config asks for " + to_string(cfg.algorithm));
  }
  if (doc.at("scenario_digest").get<std::string>() != scenario_digest(env.clients)) {
    throw ConfigError("plan", "plan was built for a different scenario (seed, beta or clients)");
  }
  if (doc.at("tau_s").get<double>() != cfg.tau_s || doc.at("d_min").get<long long>() != cfg.d_min) {
    throw ConfigError("plan", "plan tau_s/d_min differ from the config");
  }
  s.plan = doc.at("plan").get<TierPlan>();
  s.workload = doc.at("workload").get<WorkloadAssignment>();
  s.round_s = doc.at("round_s").get<double>();
  if (s.plan.assignment.size() != env.clients.size() ||
      s.workload.d_int.size() != env.clients.size()) {
    throw ConfigError("plan", "plan covers a different number of clients");
  }
  return s;
}

}  // namespace decant
