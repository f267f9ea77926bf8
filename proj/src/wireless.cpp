#include "decant/wireless.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decant/errors.hpp"

namespace decant::wireless {

double path_loss_db(double distance_km, const PathLossModel& model) {
  if (!(distance_km > 0.0) || !std::isfinite(distance_km)) {
    throw DomainError("path_loss_db: distance must be positive, got " +
                      std::to_string(distance_km));
  }
  return model.intercept_db + model.slope_db * std::log10(distance_km);
}

double channel_gain(double path_loss_db) {
  if (!std::isfinite(path_loss_db)) {
    throw DomainError("channel_gain: path loss must be finite");
  }
  return std::pow(10.0, -path_loss_db / 10.0);
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double spectral_efficiency(double tx_power_w, double gain, double noise_w) {
  return std::log2(1.0 + tx_power_w * gain / noise_w);
}

double data_rate_bps(const ChannelParams& ch) {
  return ch.bandwidth_hz * spectral_efficiency(ch.tx_power_w, ch.gain, ch.noise_w);
}

double computing_latency_s(const ComputeParams& cp) {
  return computing_latency_s(cp.cycles_per_sample, cp.cpu_hz,
                             static_cast<double>(cp.samples));
}

double computing_latency_s(double cycles_per_sample, double cpu_hz, double samples) {
  if (!(cycles_per_sample > 0.0) || !(cpu_hz > 0.0)) {
    throw ContractError("computing_latency_s: cycles_per_sample and cpu_hz must be positive");
  }
  return cycles_per_sample * samples / cpu_hz;
}

double upload_latency_s(const ChannelParams& ch) {
  const double rate = data_rate_bps(ch);
  if (!(rate > 0.0)) {
    throw InfeasibleError("upload_latency_s: zero data rate, upload can never finish");
  }
  return ch.model_size_bits / rate;
}

std::vector<double> tier_waiting_times(std::span<const double> comp_s,
                                       std::span<const double> upload_s) {
  if (comp_s.size() != upload_s.size()) {
    throw ContractError("tier_waiting_times: comp has " + std::to_string(comp_s.size()) +
                        " entries, upload has " + std::to_string(upload_s.size()));
  }
  std::vector<double> wait(comp_s.size(), 0.0);
  for (std::size_t k = 1; k < comp_s.size(); ++k) {
    wait[k] = std::max(0.0, comp_s[k - 1] + wait[k - 1] + upload_s[k - 1] - comp_s[k]);
  }
  return wait;
}

std::vector<double> tier_completion_times(std::span<const double> comp_s,
                                          std::span<const double> upload_s) {
  auto out = tier_waiting_times(comp_s, upload_s);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += comp_s[k] + upload_s[k];
  return out;
}

}  // namespace decant::wireless
