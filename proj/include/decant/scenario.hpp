#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "decant/wireless.hpp"

namespace decant {

using ClientId = int;

struct ScenarioConfig {
  int n_clients = 100;
  double area_km = 2.0;                  // side of the square, BS at the center
  double total_bandwidth_hz = 1e6;       // B
  double tx_power_w = 0.1;               // p
  double noise_dbm = -94.0;              // N0
  double model_size_bits = 1e5;          // s
  std::pair<double, double> cpu_hz_range{1e8, 1e9};
  std::pair<double, double> cycles_range{1e7, 5e7};
  wireless::PathLossModel path_loss{};
  double min_distance_km = 0.001;
  std::uint64_t seed = 1;

  double noise_w() const;
  // Throws ConfigError naming the first bad field.
  void validate() const;
};

struct ClientProfile {
  ClientId id = 0;
  double x_km = 0.0;
  double y_km = 0.0;
  double distance_km = 0.0;
  double gain = 0.0;
  double cpu_hz = 0.0;
  double cycles_per_sample = 0.0;
  double tx_power_w = 0.0;
  std::vector<std::size_t> dataset_indices;

  // Seconds per training sample, C_i / f_i.
  double seconds_per_sample() const { return cycles_per_sample / cpu_hz; }
};

// Positions, gains, CPU speed and cycles per sample for every client. Output is
// a pure function of `cfg` (including its seed). dataset_indices are empty.
std::vector<ClientProfile> generate_scenario(const ScenarioConfig& cfg);

// Full-band spectral efficiency log2(1 + p g / N0) of a client.
double client_spectral_efficiency(const ClientProfile& c, double noise_w);

void to_json(nlohmann::json& j, const ScenarioConfig& cfg);
void from_json(const nlohmann::json& j, ScenarioConfig& cfg);
void to_json(nlohmann::json& j, const ClientProfile& c);
void from_json(const nlohmann::json& j, ClientProfile& c);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg,
                                const std::vector<ClientProfile>& clients);
std::pair<ScenarioConfig, std::vector<ClientProfile>> scenario_from_json(
    const nlohmann::json& j);

}  // namespace decant

namespace decant {
// Euclidean distance from (x_km, y_km) to the BS at the center of the square,
// clamped below at min_distance_km.
double distance_to_bs_km(double x_km, double y_km, double area_km, double min_distance_km);
}  // namespace decant
