#include "decant/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "decant/errors.hpp"
#include "decant/rng.hpp"

namespace decant {

double ScenarioConfig::noise_w() const { return wireless::dbm_to_watts(noise_dbm); }

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be positive and finite");
}

void require_range(const std::pair<double, double>& r, const char* field) {
  require_positive(r.first, field);
  require_positive(r.second, field);
  if (r.first > r.second) throw ConfigError(field, "low must not exceed high");
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_clients < 1) throw ConfigError("n_clients", "must be at least 1");
  require_positive(area_km, "area_km");
  require_positive(total_bandwidth_hz, "total_bandwidth_hz");
  require_positive(tx_power_w, "tx_power_w");
  if (!std::isfinite(noise_dbm)) throw ConfigError("noise_dbm", "must be finite");
  require_positive(model_size_bits, "model_size_bits");
  require_range(cpu_hz_range, "cpu_hz_range");
  require_range(cycles_range, "cycles_range");
  require_positive(min_distance_km, "min_distance_km");
}

double distance_to_bs_km(double x_km, double y_km, double area_km, double min_distance_km) {
  const double c = area_km / 2.0;
  return std::max(std::hypot(x_km - c, y_km - c), min_distance_km);
}

std::vector<ClientProfile> generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, Stream::kScenario));
  std::vector<ClientProfile> out(static_cast<std::size_t>(cfg.n_clients));
  for (int i = 0; i < cfg.n_clients; ++i) {
    auto& c = out[static_cast<std::size_t>(i)];
    c.id = i;
    c.x_km = uniform_real(rng, 0.0, cfg.area_km);
    c.y_km = uniform_real(rng, 0.0, cfg.area_km);
    c.distance_km = distance_to_bs_km(c.x_km, c.y_km, cfg.area_km, cfg.min_distance_km);
    c.gain = wireless::channel_gain(wireless::path_loss_db(c.distance_km, cfg.path_loss));
    c.cpu_hz = uniform_real(rng, cfg.cpu_hz_range.first, cfg.cpu_hz_range.second);
    c.cycles_per_sample = uniform_real(rng, cfg.cycles_range.first, cfg.cycles_range.second);
    c.tx_power_w = cfg.tx_power_w;
  }
  return out;
}

double client_spectral_efficiency(const ClientProfile& c, double noise_w) {
  return wireless::spectral_efficiency(c.tx_power_w, c.gain, noise_w);
}

void to_json(nlohmann::json& j, const ScenarioConfig& cfg) {
  j = nlohmann::json{
      {"n_clients", cfg.n_clients},
      {"area_km", cfg.area_km},
      {"total_bandwidth_hz", cfg.total_bandwidth_hz},
      {"tx_power_w", cfg.tx_power_w},
      {"noise_dbm", cfg.noise_dbm},
      {"model_size_bits", cfg.model_size_bits},
      {"cpu_hz_range", {cfg.cpu_hz_range.first, cfg.cpu_hz_range.second}},
      {"cycles_range", {cfg.cycles_range.first, cfg.cycles_range.second}},
      {"path_loss", {{"intercept_db", cfg.path_loss.intercept_db},
                     {"slope_db", cfg.path_loss.slope_db}}},
      {"min_distance_km", cfg.min_distance_km},
      {"seed", cfg.seed},
  };
}

void from_json(const nlohmann::json& j, ScenarioConfig& cfg) {
  ScenarioConfig d;
  d.n_clients = j.value("n_clients", d.n_clients);
  d.area_km = j.value("area_km", d.area_km);
  d.total_bandwidth_hz = j.value("total_bandwidth_hz", d.total_bandwidth_hz);
  d.tx_power_w = j.value("tx_power_w", d.tx_power_w);
  d.noise_dbm = j.value("noise_dbm", d.noise_dbm);
  d.model_size_bits = j.value("model_size_bits", d.model_size_bits);
  if (j.contains("cpu_hz_range")) {
    d.cpu_hz_range = {j.at("cpu_hz_range").at(0).get<double>(),
                      j.at("cpu_hz_range").at(1).get<double>()};
  }
  if (j.contains("cycles_range")) {
    d.cycles_range = {j.at("cycles_range").at(0).get<double>(),
                      j.at("cycles_range").at(1).get<double>()};
  }
  if (j.contains("path_loss")) {
    d.path_loss.intercept_db = j.at("path_loss").value("intercept_db", d.path_loss.intercept_db);
    d.path_loss.slope_db = j.at("path_loss").value("slope_db", d.path_loss.slope_db);
  }
  d.min_distance_km = j.value("min_distance_km", d.min_distance_km);
  d.seed = j.value("seed", d.seed);
  cfg = d;
}

void to_json(nlohmann::json& j, const ClientProfile& c) {
  j = nlohmann::json{{"id", c.id},
                     {"x_km", c.x_km},
                     {"y_km", c.y_km},
                     {"distance_km", c.distance_km},
                     {"gain", c.gain},
                     {"cpu_hz", c.cpu_hz},
                     {"cycles_per_sample", c.cycles_per_sample},
                     {"tx_power_w", c.tx_power_w},
                     {"dataset_indices", c.dataset_indices}};
}

void from_json(const nlohmann::json& j, ClientProfile& c) {
  j.at("id").get_to(c.id);
  j.at("x_km").get_to(c.x_km);
  j.at("y_km").get_to(c.y_km);
  j.at("distance_km").get_to(c.distance_km);
  j.at("gain").get_to(c.gain);
  j.at("cpu_hz").get_to(c.cpu_hz);
  j.at("cycles_per_sample").get_to(c.cycles_per_sample);
  j.at("tx_power_w").get_to(c.tx_power_w);
  c.dataset_indices = j.value("dataset_indices", std::vector<std::size_t>{});
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg,
                                const std::vector<ClientProfile>& clients) {
  return {{"format", "decant-scenario"}, {"version", 1}, {"config", cfg}, {"clients", clients}};
}

std::pair<ScenarioConfig, std::vector<ClientProfile>> scenario_from_json(
    const nlohmann::json& j) {
  if (j.value("format", "") != "decant-scenario") {
    throw ParseError("scenario document: missing or wrong \"format\" tag");
  }
  return {j.at("config").get<ScenarioConfig>(),
          j.at("clients").get<std::vector<ClientProfile>>()};
}

}  // namespace decant
