#pragma once

#include <span>
#include <vector>

namespace decant::wireless {

struct ChannelParams {
  double bandwidth_hz = 0.0;
  double tx_power_w = 0.0;
  double gain = 0.0;  // linear, <= 1
  double noise_w = 0.0;
  double model_size_bits = 0.0;
};

struct ComputeParams {
  double cycles_per_sample = 0.0;
  double cpu_hz = 0.0;
  long long samples = 0;
};

// Log-distance path loss: intercept + slope * log10(distance_km).
struct PathLossModel {
  double intercept_db = 128.1;
  double slope_db = 37.6;
};

double path_loss_db(double distance_km, const PathLossModel& model = {});
double channel_gain(double path_loss_db);
double dbm_to_watts(double dbm);

// log2(1 + p*g/N0), the spectral efficiency in bit/s/Hz.
double spectral_efficiency(double tx_power_w, double gain, double noise_w);

double data_rate_bps(const ChannelParams& ch);
double computing_latency_s(const ComputeParams& cp);
// Real-valued workload variant used by the LP (d is continuous there).
double computing_latency_s(double cycles_per_sample, double cpu_hz, double samples);
// Throws InfeasibleError when the rate is zero.
double upload_latency_s(const ChannelParams& ch);

// TDMA waiting times for clients served in the given order. The order is
// taken as-is; callers decide how the queue is sorted.
std::vector<double> tier_waiting_times(std::span<const double> comp_s,
                                       std::span<const double> upload_s);

// comp + wait + upload per position, same order as the inputs.
std::vector<double> tier_completion_times(std::span<const double> comp_s,
                                          std::span<const double> upload_s);

}  // namespace decant::wireless
