#include "decant/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "decant/errors.hpp"

namespace decant {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kDecantFed: return "decantfed";
    case Algorithm::kFedAvg: return "fedavg";
    case Algorithm::kFedProx: return "fedprox";
    case Algorithm::kUniformDecant: return "decantfed_uniform";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "decantfed") return Algorithm::kDecantFed;
  if (s == "fedavg") return Algorithm::kFedAvg;
  if (s == "fedprox") return Algorithm::kFedProx;
  if (s == "decantfed_uniform" || s == "uniform_decant") return Algorithm::kUniformDecant;
  throw ConfigError("algorithm", "unknown algorithm \"" + s +
                                     "\" (expected decantfed, fedavg, fedprox, decantfed_uniform)");
}

void RunConfig::validate() const {
  if (!(tau_s > 0.0) || !std::isfinite(tau_s)) throw ConfigError("tau_s", "must be positive");
  if (d_min < 1) throw ConfigError("d_min", "must be at least 1");
  if (time_budget_s < 0.0) throw ConfigError("time_budget_s", "must be nonnegative");
  if (time_budget_s == 0.0 && iterations < 1) {
    throw ConfigError("iterations", "set iterations >= 1 or a positive time_budget_s");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be positive");
  if (eval_every < 1) throw ConfigError("eval_every", "must be at least 1");
  if (!(learning.delta1 > 0.0) || learning.delta1 > 0.1) {
    throw ConfigError("learning.delta1", "must lie in (0, 0.1]");
  }
  if (!(learning.alpha > 1.0)) throw ConfigError("learning.alpha", "must be greater than 1");
  if (!(learning.zeta > 0.0)) throw ConfigError("learning.zeta", "must be positive");
  if (!(learning.mu >= 0.0)) throw ConfigError("learning.mu", "must be nonnegative");
  if (learning.batch_size < 1) throw ConfigError("learning.batch_size", "must be at least 1");
  if (scheduling.j_max < 1) throw ConfigError("scheduling.j_max", "must be at least 1");
  if (dataset.kind != "idx" && dataset.kind != "synthetic") {
    throw ConfigError("dataset.kind", "must be \"idx\" or \"synthetic\"");
  }
  if (dataset.kind == "synthetic") {
    if (dataset.n_classes < 2) throw ConfigError("dataset.n_classes", "must be at least 2");
    if (dataset.n_per_class < 1 || dataset.test_per_class < 1 || dataset.n_features < 1) {
      throw ConfigError("dataset", "synthetic sizes must be positive");
    }
  } else if (dataset.train_images.empty() || dataset.train_labels.empty() ||
             dataset.test_images.empty() || dataset.test_labels.empty()) {
    throw ConfigError("dataset", "idx datasets need train/test image and label paths");
  }
  try {
    scenario_config().validate();
  } catch (const ConfigError& e) {
    const std::string prefix = e.field() + ": ";
    std::string msg = e.what();
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    throw ConfigError("scenario." + e.field(), msg);
  }
}

ScenarioConfig RunConfig::scenario_config() const {
  ScenarioConfig s = scenario;
  s.seed = seed;
  return s;
}

namespace {

void dataset_to_json(nlohmann::json& j, const DatasetSpec& d) {
  if (d.kind == "idx") {
    j = {{"kind", "idx"},
         {"train_images", d.train_images},
         {"train_labels", d.train_labels},
         {"test_images", d.test_images},
         {"test_labels", d.test_labels},
         {"max_train", d.max_train},
         {"max_test", d.max_test}};
  } else {
    j = {{"kind", "synthetic"},
         {"n_classes", d.n_classes},
         {"n_per_class", d.n_per_class},
         {"test_per_class", d.test_per_class},
         {"n_features", d.n_features},
         {"class_sep", d.class_sep}};
  }
}

DatasetSpec dataset_from_json(const nlohmann::json& j) {
  DatasetSpec d;
  d.kind = j.value("kind", d.kind);
  d.train_images = j.value("train_images", d.train_images);
  d.train_labels = j.value("train_labels", d.train_labels);
  d.test_images = j.value("test_images", d.test_images);
  d.test_labels = j.value("test_labels", d.test_labels);
  d.max_train = j.value("max_train", d.max_train);
  d.max_test = j.value("max_test", d.max_test);
  d.n_classes = j.value("n_classes", d.n_classes);
  d.n_per_class = j.value("n_per_class", d.n_per_class);
  d.test_per_class = j.value("test_per_class", d.test_per_class);
  d.n_features = j.value("n_features", d.n_features);
  d.class_sep = j.value("class_sep", d.class_sep);
  return d;
}

std::string weight_name(AggregateWeight w) {
  return w == AggregateWeight::kDatasetSize ? "dataset_size" : "workload";
}

AggregateWeight weight_from(const std::string& s) {
  if (s == "dataset_size") return AggregateWeight::kDatasetSize;
  if (s == "workload") return AggregateWeight::kWorkload;
  throw ConfigError("scheduling.aggregate_weight", "expected \"dataset_size\" or \"workload\"");
}

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& cfg) {
  nlohmann::json dataset;
  dataset_to_json(dataset, cfg.dataset);
  j = nlohmann::json{
      {"schema_version", RunConfig::kSchemaVersion},
      {"algorithm", to_string(cfg.algorithm)},
      {"tau_s", cfg.tau_s},
      {"d_min", cfg.d_min},
      {"iterations", cfg.iterations},
      {"time_budget_s", cfg.time_budget_s},
      {"scenario", cfg.scenario},
      {"dataset", dataset},
      {"model", {{"hidden", cfg.model.hidden}}},
      {"beta", cfg.beta},
      {"seed", cfg.seed},
      {"eval_every", cfg.eval_every},
      {"learning", {{"delta1", cfg.learning.delta1},
                    {"alpha", cfg.learning.alpha},
                    {"zeta", cfg.learning.zeta},
                    {"mu", cfg.learning.mu},
                    {"batch_size", cfg.learning.batch_size}}},
      {"scheduling", {{"order", to_string(cfg.scheduling.order)},
                      {"j_max", cfg.scheduling.j_max},
                      {"cap_to_dataset", cfg.scheduling.cap_to_dataset},
                      {"aggregate_weight", weight_name(cfg.scheduling.aggregate_weight)}}},
  };
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
  RunConfig c;
  try {
    if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j.at("algorithm"));
    c.tau_s = j.value("tau_s", c.tau_s);
    c.d_min = j.value("d_min", c.d_min);
    c.iterations = j.value("iterations", c.iterations);
    c.time_budget_s = j.value("time_budget_s", c.time_budget_s);
    if (j.contains("scenario")) c.scenario = j.at("scenario").get<ScenarioConfig>();
    if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
    if (j.contains("model")) c.model.hidden = j.at("model").value("hidden", c.model.hidden);
    c.beta = j.value("beta", c.beta);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    if (j.contains("learning")) {
      const auto& l = j.at("learning");
      c.learning.delta1 = l.value("delta1", c.learning.delta1);
      c.learning.alpha = l.value("alpha", c.learning.alpha);
      c.learning.zeta = l.value("zeta", c.learning.zeta);
      c.learning.mu = l.value("mu", c.learning.mu);
      c.learning.batch_size = l.value("batch_size", c.learning.batch_size);
    }
    if (j.contains("scheduling")) {
      const auto& s = j.at("scheduling");
      if (s.contains("order")) c.scheduling.order = upload_order_from_string(s.at("order"));
      c.scheduling.j_max = s.value("j_max", c.scheduling.j_max);
      c.scheduling.cap_to_dataset = s.value("cap_to_dataset", c.scheduling.cap_to_dataset);
      if (s.contains("aggregate_weight")) {
        c.scheduling.aggregate_weight = weight_from(s.at("aggregate_weight"));
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError("config", std::string("wrong value type: ") + e.what());
  }
  cfg = std::move(c);
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "document must be a JSON object");
  static const std::set<std::string> known{
      "schema_version", "algorithm", "tau_s", "d_min",      "iterations", "time_budget_s",
      "scenario",       "dataset",   "model", "beta",       "seed",       "eval_every",
      "learning",       "scheduling"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(key, "unknown config field");
  }
  const int version = j.value("schema_version", RunConfig::kSchemaVersion);
  if (version != RunConfig::kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }
  RunConfig cfg = j.get<RunConfig>();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", path + ": " + e.what());
  }
  RunConfig cfg = run_config_from_json(j);
  namespace fs = std::filesystem;
  fs::path base = fs::path(path).parent_path();
  if (const char* env = std::getenv("DECANT_DATA_DIR"); env && *env) base = env;
  for (auto* p : {&cfg.dataset.train_images, &cfg.dataset.train_labels, &cfg.dataset.test_images,
                  &cfg.dataset.test_labels}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return cfg;
}

}  // namespace decant
