#include "decant/report.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "decant/errors.hpp"
#include "decant/format.hpp"

namespace decant {

namespace fs = std::filesystem;

namespace {

nlohmann::json::json_pointer pointer_for(const std::string& dot_path) {
  std::string p;
  std::stringstream ss(dot_path);
  std::string part;
  while (std::getline(ss, part, '.')) p += "/" + part;
  return nlohmann::json::json_pointer(p);
}

std::string cell_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cell_%04d.%s", index, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace

void ExperimentSpec::validate() const {
  base.validate();
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  const nlohmann::json doc = base;
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError(axis.path, "sweep axis has no values");
    if (!doc.contains(pointer_for(axis.path))) {
      throw ConfigError(axis.path, "sweep path does not name a config field");
    }
  }
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  spec.base = run_config_from_json(j.at("base"));
  for (const auto& a : j.value("axes", nlohmann::json::array())) {
    SweepAxis axis;
    axis.path = a.at("path").get<std::string>();
    for (const auto& v : a.at("values")) axis.values.push_back(v);
    spec.axes.push_back(std::move(axis));
  }
  if (j.contains("seeds")) {
    spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else {
    spec.seeds = {spec.base.seed};
  }
  spec.validate();
  return spec;
}

nlohmann::json experiment_to_json(const ExperimentSpec& spec) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : spec.axes) axes.push_back({{"path", a.path}, {"values", a.values}});
  return {{"base", spec.base}, {"axes", axes}, {"seeds", spec.seeds}};
}

std::vector<SweepCell> expand_cells(const ExperimentSpec& spec) {
  std::vector<SweepCell> cells;
  std::vector<std::size_t> pos(spec.axes.size(), 0);
  int index = 0;
  while (true) {
    nlohmann::json overrides = nlohmann::json::object();
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      overrides[spec.axes[a].path] = spec.axes[a].values[pos[a]];
    }
    for (auto seed : spec.seeds) cells.push_back({index++, overrides, seed});
    // odometer over axes, last axis fastest
    std::size_t a = spec.axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < spec.axes[a].values.size()) break;
      pos[a] = 0;
      if (a == 0) return cells;
    }
    if (spec.axes.empty()) return cells;
  }
}

RunConfig cell_config(const ExperimentSpec& spec, const SweepCell& cell) {
  nlohmann::json doc = spec.base;
  for (const auto& [path, value] : cell.overrides.items()) doc[pointer_for(path)] = value;
  doc["seed"] = cell.seed;
  return run_config_from_json(doc);
}

nlohmann::json run_sweep(const ExperimentSpec& spec, const std::string& out_dir, int jobs,
                         std::span<const double> targets) {
  spec.validate();
  fs::create_directories(out_dir);
  const auto cells = expand_cells(spec);
  std::vector<nlohmann::json> entries(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& cell = cells[k];
      nlohmann::json entry = {{"index", cell.index},
                              {"overrides", cell.overrides},
                              {"seed", cell.seed},
                              {"csv", cell_name(cell.index, "csv")},
                              {"summary", cell_name(cell.index, "json")}};
      try {
        const auto cfg = cell_config(spec, cell);
        const auto result = run(cfg);
        write_text(fs::path(out_dir) / cell_name(cell.index, "csv"), metrics_csv(result.log));
        write_text(fs::path(out_dir) / cell_name(cell.index, "json"),
                   run_summary(result, targets).dump(2) + "\n");
        entry["status"] = "ok";
      } catch (const std::exception& e) {
        entry["status"] = "error";
        entry["error"] = e.what();
      }
      entries[k] = std::move(entry);
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::json manifest = {{"format", "decant-sweep"},
                             {"version", 1},
                             {"experiment", experiment_to_json(spec)},
                             {"targets", std::vector<double>(targets.begin(), targets.end())},
                             {"cells", entries}};
  write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

std::vector<TimeToAccuracyRow> report_time_to_accuracy(
    const std::vector<std::pair<std::string, MetricsLog>>& logs, double target) {
  if (logs.empty()) throw ContractError("time-to-accuracy report needs at least one log");
  std::vector<TimeToAccuracyRow> rows;
  for (const auto& [label, log] : logs) rows.push_back({label, time_to_accuracy(log, target)});
  return rows;
}

std::size_t write_sweep_report(const std::string& sweep_dir, const std::string& out_dir,
                               double target_acc) {
  const auto manifest = read_json(fs::path(sweep_dir) / "manifest.json");
  if (manifest.value("format", "") != "decant-sweep") {
    throw ParseError(sweep_dir + "/manifest.json is not a sweep manifest");
  }
  std::vector<std::string> axis_paths;
  for (const auto& a : manifest.at("experiment").at("axes")) {
    axis_paths.push_back(a.at("path").get<std::string>());
  }
  const std::string algorithm =
      manifest.at("experiment").at("base").at("algorithm").get<std::string>();

  // Group final accuracies by axis values, keeping first-seen order.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<double>> finals;
  std::ostringstream tta;
  tta << "cell,";
  for (const auto& p : axis_paths) tta << p << ',';
  tta << "seed,target,time_s\n";

  for (const auto& cell : manifest.at("cells")) {
    std::string key;
    for (const auto& p : axis_paths) {
      const auto& v = cell.at("overrides").at(p);
      key += (v.is_string() ? v.get<std::string>() : v.dump()) + ",";
    }
    if (!finals.count(key)) group_order.push_back(key);
    auto& accs = finals[key];
    tta << cell.at("index").get<int>() << ',' << key << cell.at("seed").get<std::uint64_t>() << ','
        << format_double(target_acc) << ',';
    if (cell.at("status") != "ok") {
      tta << "error\n";
      continue;
    }
    std::ifstream csv(fs::path(sweep_dir) / cell.at("csv").get<std::string>());
    const auto log = parse_metrics_csv(csv);
    if (!log.rows.empty()) accs.push_back(log.rows.back().test_acc);
    const auto hit = time_to_accuracy(log, target_acc);
    tta << (hit ? format_double(*hit) : std::string("never")) << '\n';
  }

  std::ostringstream fa;
  fa << "algorithm,";
  for (const auto& p : axis_paths) fa << p << ',';
  fa << "n_seeds,final_acc_mean,final_acc_std\n";
  for (const auto& key : group_order) {
    const auto& accs = finals[key];
    double mean = 0.0, var = 0.0;
    for (double a : accs) mean += a;
    if (!accs.empty()) mean /= static_cast<double>(accs.size());
    for (double a : accs) var += (a - mean) * (a - mean);
    if (accs.size() > 1) var /= static_cast<double>(accs.size() - 1);
    fa << algorithm << ',' << key << accs.size() << ','
       << (accs.empty() ? "nan" : format_double(mean)) << ',' << format_double(std::sqrt(var))
       << '\n';
  }
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "final_accuracy.csv", fa.str());
  write_text(fs::path(out_dir) / "time_to_accuracy.csv", tta.str());
  return group_order.size();
}

}  // namespace decant
