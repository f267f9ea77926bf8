#include "decant/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "decant/errors.hpp"

namespace decant {

double learning_rate(int tier_j, double delta1, double alpha) {
  if (!(alpha > 1.0)) throw ConfigError("alpha", "must be greater than 1");
  if (!(delta1 > 0.0)) throw ConfigError("delta1", "must be positive");
  if (tier_j < 1) throw ContractError("learning_rate: tier must be >= 1");
  const double log_alpha_j = std::log(static_cast<double>(tier_j)) / std::log(alpha);
  return std::min(delta1 * std::max(log_alpha_j, 1.0), 0.1);
}

void TrainSpec::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!(learning_rate >= 0.0 && learning_rate <= 0.1)) {
    throw ConfigError("learning_rate", "must lie in [0, 0.1]");
  }
  if (!(clip_zeta > 0.0)) throw ConfigError("zeta", "must be positive");
  if (!(prox_mu >= 0.0)) throw ConfigError("mu", "must be nonnegative");
}

LocalTrainResult local_train(const ModelParams& global_params, const LabeledDataset& data,
                             std::span<const std::size_t> local_indices, const TrainSpec& spec,
                             Rng& rng, int client_id) {
  return local_train(global_params, global_params, data, local_indices, spec, rng, client_id);
}

LocalTrainResult local_train(const ModelParams& start, const ModelParams& global_params,
                             const LabeledDataset& data,
                             std::span<const std::size_t> local_indices, const TrainSpec& spec,
                             Rng& rng, int client_id) {
  spec.validate();
  if (spec.samples < 1) throw ContractError("local_train: workload must be at least 1 sample");
  if (start.layers != global_params.layers) {
    throw ContractError("local_train: start and global models differ in shape");
  }
  LocalTrainResult res{start, true, 0.0, 0};
  if (local_indices.empty()) {
    res.contributed = false;
    return res;
  }

  std::vector<std::size_t> perm(local_indices.begin(), local_indices.end());
  std::shuffle(perm.begin(), perm.end(), rng);
  std::size_t cursor = 0;
  std::vector<std::size_t> batch;
  batch.reserve(spec.batch_size);
  std::vector<double> grad;
  auto& w = res.params.values;
  const auto& w0 = global_params.values;
  double loss_sum = 0.0;

  long long remaining = spec.samples;
  while (remaining > 0) {
    const auto take = static_cast<std::size_t>(
        std::min<long long>(remaining, static_cast<long long>(spec.batch_size)));
    batch.clear();
    while (batch.size() < take) {
      if (cursor == perm.size()) {
        std::shuffle(perm.begin(), perm.end(), rng);
        cursor = 0;
      }
      batch.push_back(perm[cursor++]);
    }
    remaining -= static_cast<long long>(take);

    const auto loss = loss_and_gradient(res.params, data, batch, spec.clip_zeta, grad);
    loss_sum += loss.mean_loss;
    for (std::size_t k = 0; k < w.size(); ++k) {
      double g = grad[k];
      if (spec.prox_mu > 0.0) g += spec.prox_mu * (w[k] - w0[k]);
      w[k] -= spec.learning_rate * g;
      if (!std::isfinite(w[k]) || !std::isfinite(g)) {
        std::ostringstream msg;
        msg << "local_train: non-finite value at client " << client_id << ", step " << res.steps
            << ", parameter " << k;
        throw NonFiniteError(msg.str());
      }
    }
    ++res.steps;
  }
  res.mean_loss = loss_sum / static_cast<double>(res.steps);
  return res;
}

std::vector<double> aggregation_weights(std::span<const double> weights, bool* fallback) {
  if (weights.empty()) throw ContractError("aggregate: no contributions");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> out(weights.size());
  const bool equal = !(total > 0.0);
  if (fallback) *fallback = equal;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out[k] = equal ? 1.0 / static_cast<double>(weights.size()) : weights[k] / total;
  }
  return out;
}

AggregateResult aggregate(std::span<const Contribution> locals) {
  if (locals.empty()) throw ContractError("aggregate: no contributions");
  std::vector<double> raw;
  for (const auto& c : locals) {
    if (c.params == nullptr) throw ContractError("aggregate: null parameters");
    if (c.params->layers != locals.front().params->layers) {
      throw ContractError("aggregate: contributors disagree on model shape");
    }
    raw.push_back(c.weight);
  }
  AggregateResult res;
  const auto weights = aggregation_weights(raw, &res.unweighted_fallback);
  res.params = ModelParams::zeros(locals.front().params->layers);
  auto& out = res.params.values;
  for (std::size_t c = 0; c < locals.size(); ++c) {
    const auto& v = locals[c].params->values;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights[c] * v[k];
  }
  return res;
}

ParticipationSet participants(int iteration, const TierPlan& plan) {
  if (iteration < 1) throw ContractError("participants: iteration must be >= 1");
  ParticipationSet set;
  set.iteration = iteration;
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    const int j = plan.assignment[i];
    if (j > 0 && iteration % j == 0) {
      set.clients.push_back(static_cast<ClientId>(i));
      set.staleness.push_back(j);
    }
  }
  return set;
}

}  // namespace decant
