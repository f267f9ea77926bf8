#pragma once

#include <span>
#include <vector>

#include "decant/dataset.hpp"
#include "decant/lead.hpp"
#include "decant/model.hpp"
#include "decant/rng.hpp"

namespace decant {

// Tier learning rate: min(delta1 * max(log_alpha(j), 1), 0.1). Throws
// ConfigError for alpha <= 1.
double learning_rate(int tier_j, double delta1, double alpha);

struct TrainSpec {
  long long samples = 10;       // d_i, sample presentations this participation
  std::size_t batch_size = 10;
  double learning_rate = 0.005;
  double clip_zeta = 3.33;
  double prox_mu = 0.0;         // 0 disables the proximal term

  void validate() const;
};

struct LocalTrainResult {
  ModelParams params;
  bool contributed = true;      // false when the client has no local data
  double mean_loss = 0.0;       // mean clipped batch loss over the steps
  long long steps = 0;
};

// Mini-batch SGD from `global_params` over exactly spec.samples presentations
// of the client's rows. Rows are visited in seeded permutations, reshuffled
// each time the local set is exhausted. `client_id` only labels diagnostics.
// Throws NonFiniteError if a parameter or gradient stops being finite.
LocalTrainResult local_train(const ModelParams& global_params, const LabeledDataset& data,
                             std::span<const std::size_t> local_indices, const TrainSpec& spec,
                             Rng& rng, int client_id = -1);
// Same, but starting from `start` while the proximal term still pulls toward
// `global_params`.
LocalTrainResult local_train(const ModelParams& start, const ModelParams& global_params,
                             const LabeledDataset& data,
                             std::span<const std::size_t> local_indices, const TrainSpec& spec,
                             Rng& rng, int client_id = -1);

struct Contribution {
  const ModelParams* params = nullptr;
  double weight = 0.0;  // |D_i| by default
};

struct AggregateResult {
  ModelParams params;
  bool unweighted_fallback = false;
};

// Normalized weights w_i / sum w. All-zero weights give equal weights and set
// `fallback`. Empty input throws ContractError.
std::vector<double> aggregation_weights(std::span<const double> weights, bool* fallback = nullptr);

AggregateResult aggregate(std::span<const Contribution> locals);

struct ParticipationSet {
  int iteration = 0;
  std::vector<ClientId> clients;
  std::vector<int> staleness;  // per entry of `clients`: iterations since its base model
};

// Clients whose tier divides l. Tier-0 (excluded) clients never participate.
ParticipationSet participants(int iteration, const TierPlan& plan);

}  // namespace decant
