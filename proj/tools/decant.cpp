// Command-line front end: partition, plan, simulate, sweep, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "decant/config.hpp"
#include "decant/errors.hpp"
#include "decant/report.hpp"
#include "decant/sim.hpp"

namespace {

using decant::RunConfig;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algorithm;
  std::optional<double> tau;
  std::optional<double> beta;
  std::optional<int> iterations;
  std::optional<double> time_budget;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "run config JSON");
    app->add_option("--seed", seed, "override the run seed");
    app->add_option("--algorithm", algorithm,
                    "decantfed | fedavg | fedprox | decantfed_uniform");
    app->add_option("--tau", tau, "round deadline in seconds");
    app->add_option("--beta", beta, "Dirichlet concentration");
    app->add_option("--iterations", iterations, "global iterations");
    app->add_option("--time-budget", time_budget, "simulated-seconds budget (replaces iterations)");
  }

  RunConfig load() const {
    RunConfig cfg = config.empty() ? RunConfig{} : decant::load_run_config(config);
    if (seed) cfg.seed = *seed;
    if (algorithm) cfg.algorithm = decant::algorithm_from_string(*algorithm);
    if (tau) cfg.tau_s = *tau;
    if (beta) cfg.beta = *beta;
    if (iterations) {
      cfg.iterations = *iterations;
      cfg.time_budget_s = 0.0;
    }
    if (time_budget) cfg.time_budget_s = *time_budget;
    cfg.validate();
    return cfg;
  }
};

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw decant::ParseError(path + ": " + e.what());
  }
}

int default_jobs() {
  if (const char* env = std::getenv("DECANT_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-synchronous federated learning scheduler and simulator"};
  app.require_subcommand(1);

  Overrides ov;
  std::string out;
  std::string plan_path;
  std::string summary_path;
  std::vector<double> targets;
  int jobs = default_jobs();
  std::vector<std::string> sweep_dirs;

  auto* partition = app.add_subcommand("partition", "write per-client dataset indices as JSON");
  ov.attach(partition);
  partition->add_option("--out", out, "output JSON (default stdout)");

  auto* plan = app.add_subcommand("plan", "run client tiering and workload LP, write a plan JSON");
  ov.attach(plan);
  plan->add_option("--out", out, "output JSON (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "run training, write the metrics CSV");
  ov.attach(simulate);
  simulate->add_option("--plan", plan_path, "precomputed plan from `plan`");
  simulate->add_option("--out", out, "metrics CSV (default stdout)");
  simulate->add_option("--summary", summary_path, "run summary JSON");
  simulate->add_option("--target-acc", targets, "accuracy targets for the summary");

  auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
  std::string experiment_path;
  sweep->add_option("--config", experiment_path, "experiment JSON (base, axes, seeds)")
      ->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--jobs", jobs, "concurrent cells (default $DECANT_JOBS or 1)");
  sweep->add_option("--target-acc", targets, "accuracy targets for cell summaries");

  auto* report = app.add_subcommand("report", "aggregate sweep directories into tables");
  double report_target = 0.8;
  report->add_option("sweep_dir", sweep_dirs, "sweep output directories")->required();
  report->add_option("--out", out, "report directory (default: each sweep dir)");
  report->add_option("--target-acc", report_target, "time-to-accuracy target");

  CLI11_PARSE(app, argc, argv);

  try {
    if (partition->parsed()) {
      const auto cfg = ov.load();
      const auto env = decant::prepare_environment(cfg);
      nlohmann::json clients = nlohmann::json::array();
      for (const auto& c : env.clients) {
        clients.push_back({{"id", c.id}, {"indices", c.dataset_indices}});
      }
      const nlohmann::json doc = {{"format", "decant-partition"},
                                  {"version", 1},
                                  {"seed", cfg.seed},
                                  {"beta", cfg.beta},
                                  {"n_train", env.train.size()},
                                  {"clients", clients}};
      write_file(out, doc.dump() + "\n");
    } else if (plan->parsed()) {
      const auto cfg = ov.load();
      const auto env = decant::prepare_environment(cfg);
      const auto schedule = decant::make_schedule(cfg, env);
      write_file(out, decant::plan_document(cfg, env, schedule).dump(2) + "\n");
    } else if (simulate->parsed()) {
      const auto cfg = ov.load();
      const auto env = decant::prepare_environment(cfg);
      const auto schedule = plan_path.empty()
                                ? decant::make_schedule(cfg, env)
                                : decant::schedule_from_document(read_json_file(plan_path), cfg, env);
      const auto result = decant::run(cfg, env, schedule);
      write_file(out, decant::metrics_csv(result.log));
      if (!summary_path.empty()) {
        write_file(summary_path, decant::run_summary(result, targets).dump(2) + "\n");
      }
    } else if (sweep->parsed()) {
      if (jobs < 1) throw decant::ConfigError("jobs", "must be at least 1");
      const auto spec = decant::experiment_from_json(read_json_file(experiment_path));
      const auto manifest = decant::run_sweep(spec, out, jobs, targets);
      int failed = 0;
      for (const auto& cell : manifest.at("cells")) {
        if (cell.at("status") != "ok") {
          ++failed;
          std::cerr << "cell " << cell.at("index") << " failed: " << cell.at("error").get<std::string>()
                    << "\n";
        }
      }
      std::cerr << manifest.at("cells").size() << " cells, " << failed << " failed\n";
      return failed == 0 ? 0 : 3;
    } else if (report->parsed()) {
      for (const auto& dir : sweep_dirs) {
        const std::string dest =
            out.empty() ? dir
                        : (sweep_dirs.size() == 1
                               ? out
                               : (std::filesystem::path(out) / std::filesystem::path(dir).filename())
                                     .string());
        const auto rows = decant::write_sweep_report(dir, dest, report_target);
        std::cerr << dir << ": " << rows << " rows -> " << dest << "/final_accuracy.csv\n";
      }
    }
  } catch (const decant::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
