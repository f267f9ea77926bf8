#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "decant/dataset.hpp"

namespace decant {

enum class Activation { kIdentity, kRelu };

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;

  bool operator==(const LayerShape&) const = default;
};

// Flat parameters of a fully connected network. Layer k stores its weights
// row-major (out x in) followed by its out biases. The last layer's output
// feeds a softmax.
struct ModelParams {
  std::vector<double> values;
  std::vector<LayerShape> layers;

  static std::size_t expected_size(std::span<const LayerShape> layers);
  static ModelParams zeros(std::vector<LayerShape> layers);
  std::size_t n_inputs() const { return layers.front().in; }
  std::size_t n_outputs() const { return layers.back().out; }
  // Throws ContractError on shape mismatch or non-finite values.
  void validate() const;
  bool all_finite() const;
};

// Hidden layers use ReLU; the output layer is linear. An empty `hidden` gives
// softmax regression.
std::vector<LayerShape> make_layers(std::size_t n_features, std::span<const std::size_t> hidden,
                                    std::size_t n_classes);

// Weights ~ N(0, 1/in), biases zero.
ModelParams init_params(std::vector<LayerShape> layers, std::uint64_t seed);

struct LossResult {
  double mean_loss = 0.0;          // mean of per-sample losses, clipped at zeta
  std::vector<bool> clipped;       // per sample: raw loss exceeded zeta
};

// Softmax cross-entropy (natural log) over the rows `idx` of `data`, each
// sample's loss clipped to min(loss, zeta).
LossResult forward_loss(const ModelParams& params, const LabeledDataset& data,
                        std::span<const std::size_t> idx, double clip_zeta);

// Same as forward_loss and writes the gradient of the mean clipped loss into
// `grad` (resized to the parameter count). Clipped samples contribute zero.
LossResult loss_and_gradient(const ModelParams& params, const LabeledDataset& data,
                             std::span<const std::size_t> idx, double clip_zeta,
                             std::vector<double>& grad);

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;  // unclipped
};

// Throws ContractError on an empty dataset.
Evaluation evaluate(const ModelParams& params, const LabeledDataset& data);

// Checkpoint: one line of JSON describing the layers, then the parameters as
// little-endian IEEE-754 doubles.
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace decant
