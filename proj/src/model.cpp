#include "decant/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "decant/errors.hpp"
#include "decant/rng.hpp"

namespace decant {

std::size_t ModelParams::expected_size(std::span<const LayerShape> layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += (l.in + 1) * l.out;
  return n;
}

ModelParams ModelParams::zeros(std::vector<LayerShape> layers) {
  ModelParams p;
  p.values.assign(expected_size(layers), 0.0);
  p.layers = std::move(layers);
  return p;
}

bool ModelParams::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void ModelParams::validate() const {
  if (layers.empty()) throw ContractError("model: no layers");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].in != layers[k - 1].out) throw ContractError("model: layer widths do not chain");
  }
  if (values.size() != expected_size(layers)) {
    throw ContractError("model: parameter count does not match layer shapes");
  }
  if (!all_finite()) throw ContractError("model: non-finite parameter");
}

std::vector<LayerShape> make_layers(std::size_t n_features, std::span<const std::size_t> hidden,
                                    std::size_t n_classes) {
  std::vector<LayerShape> layers;
  std::size_t in = n_features;
  for (std::size_t h : hidden) {
    layers.push_back({in, h, Activation::kRelu});
    in = h;
  }
  layers.push_back({in, n_classes, Activation::kIdentity});
  return layers;
}

ModelParams init_params(std::vector<LayerShape> layers, std::uint64_t seed) {
  auto p = ModelParams::zeros(std::move(layers));
  Rng rng(derive_seed(seed, Stream::kModelInit));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t off = 0;
  for (const auto& l : p.layers) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t k = 0; k < l.in * l.out; ++k) p.values[off + k] = normal(rng) * scale;
    off += (l.in + 1) * l.out;
  }
  return p;
}

namespace {

// Per-sample forward/backward buffers.
struct Workspace {
  std::vector<std::vector<double>> pre;   // z per layer
  std::vector<std::vector<double>> post;  // activation per layer; post[0] is the input
  std::vector<double> delta, delta_prev;

  explicit Workspace(const std::vector<LayerShape>& layers) {
    pre.resize(layers.size());
    post.resize(layers.size() + 1);
    post[0].resize(layers.front().in);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      pre[k].resize(layers[k].out);
      post[k + 1].resize(layers[k].out);
    }
  }
};

void check_inputs(const ModelParams& params, const LabeledDataset& data) {
  if (params.values.size() != ModelParams::expected_size(params.layers) || params.layers.empty()) {
    throw ContractError("model: parameter count does not match layer shapes");
  }
  if (data.n_features != params.n_inputs()) {
    throw ContractError("model: dataset has " + std::to_string(data.n_features) +
                        " features, model expects " + std::to_string(params.n_inputs()));
  }
}

// Returns the unclipped loss of one sample and leaves softmax probabilities in
// ws.post.back().
double forward_sample(const ModelParams& params, std::span<const double> x, int label,
                      Workspace& ws) {
  const std::size_t n_classes = params.n_outputs();
  if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
    throw ContractError("forward_loss: label " + std::to_string(label) + " out of range [0, " +
                        std::to_string(n_classes) + ")");
  }
  std::copy(x.begin(), x.end(), ws.post[0].begin());
  std::size_t off = 0;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& l = params.layers[k];
    const double* w = params.values.data() + off;
    const double* b = w + l.in * l.out;
    const double* a = ws.post[k].data();
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = w + o * l.in;
      double z = b[o];
      for (std::size_t i = 0; i < l.in; ++i) z += row[i] * a[i];
      ws.pre[k][o] = z;
      ws.post[k + 1][o] = l.activation == Activation::kRelu ? std::max(z, 0.0) : z;
    }
    off += (l.in + 1) * l.out;
  }
  auto& logits = ws.post.back();
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  const double log_norm = zmax + std::log(sum);
  const double loss = log_norm - logits[static_cast<std::size_t>(label)];
  for (auto& z : logits) z = std::exp(z - log_norm);
  return loss;
}

// Accumulates d(loss)/d(params) of one sample into grad, given the softmax
// probabilities from forward_sample.
void backward_sample(const ModelParams& params, int label, Workspace& ws,
                     std::vector<double>& grad) {
  ws.delta = ws.post.back();
  ws.delta[static_cast<std::size_t>(label)] -= 1.0;
  std::size_t off = params.values.size();
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& l = params.layers[k];
    off -= (l.in + 1) * l.out;
    const double* w = params.values.data() + off;
    double* gw = grad.data() + off;
    double* gb = gw + l.in * l.out;
    const double* a = ws.post[k].data();
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) grow[i] += d * a[i];
      gb[o] += d;
    }
    if (k == 0) break;
    ws.delta_prev.assign(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) ws.delta_prev[i] += row[i] * d;
    }
    const auto& prev = params.layers[k - 1];
    if (prev.activation == Activation::kRelu) {
      for (std::size_t i = 0; i < l.in; ++i) {
        if (ws.pre[k - 1][i] <= 0.0) ws.delta_prev[i] = 0.0;
      }
    }
    std::swap(ws.delta, ws.delta_prev);
  }
}

LossResult run_batch(const ModelParams& params, const LabeledDataset& data,
                     std::span<const std::size_t> idx, double clip_zeta, std::vector<double>* grad) {
  check_inputs(params, data);
  if (!(clip_zeta > 0.0)) throw ConfigError("zeta", "loss clip must be positive");
  LossResult res;
  res.clipped.resize(idx.size());
  if (grad) grad->assign(params.values.size(), 0.0);
  if (idx.empty()) return res;
  Workspace ws(params.layers);
  double total = 0.0;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const std::size_t r = idx[s];
    if (r >= data.size()) throw ContractError("forward_loss: sample index out of range");
    const int label = data.labels[r];
    const double loss = forward_sample(params, data.row(r), label, ws);
    const bool clipped = loss > clip_zeta;
    res.clipped[s] = clipped;
    total += clipped ? clip_zeta : loss;
    if (grad && !clipped) backward_sample(params, label, ws, *grad);
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  res.mean_loss = total * inv;
  if (grad) {
    for (auto& g : *grad) g *= inv;
  }
  return res;
}

}  // namespace

LossResult forward_loss(const ModelParams& params, const LabeledDataset& data,
                        std::span<const std::size_t> idx, double clip_zeta) {
  return run_batch(params, data, idx, clip_zeta, nullptr);
}

LossResult loss_and_gradient(const ModelParams& params, const LabeledDataset& data,
                             std::span<const std::size_t> idx, double clip_zeta,
                             std::vector<double>& grad) {
  return run_batch(params, data, idx, clip_zeta, &grad);
}

Evaluation evaluate(const ModelParams& params, const LabeledDataset& data) {
  if (data.size() == 0) throw ContractError("evaluate: empty test set");
  check_inputs(params, data);
  Workspace ws(params.layers);
  std::size_t correct = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    total += forward_sample(params, data.row(r), data.labels[r], ws);
    const auto& prob = ws.post.back();
    const auto best = static_cast<int>(std::max_element(prob.begin(), prob.end()) - prob.begin());
    if (best == data.labels[r]) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(data.size()),
          total / static_cast<double>(data.size())};
}

namespace {

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw ParseError("checkpoint: unknown activation \"" + s + "\"");
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  nlohmann::json header{{"format", "decant-checkpoint"},
                        {"version", 1},
                        {"dtype", "float64-le"},
                        {"count", params.values.size()},
                        {"layers", nlohmann::json::array()}};
  for (const auto& l : params.layers) {
    header["layers"].push_back(
        {{"in", l.in}, {"out", l.out}, {"activation", activation_name(l.activation)}});
  }
  out << header.dump() << '\n';
  for (double v : params.values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    out.write(buf, 8);
  }
}

ModelParams read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "decant-checkpoint") {
    throw ParseError("checkpoint: wrong format tag");
  }
  ModelParams p;
  for (const auto& l : header.at("layers")) {
    p.layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                        activation_from(l.at("activation").get<std::string>())});
  }
  const auto count = header.at("count").get<std::size_t>();
  if (count != ModelParams::expected_size(p.layers)) {
    throw ParseError("checkpoint: count does not match layer shapes");
  }
  p.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) {
      throw ParseError("checkpoint: truncated payload at value " + std::to_string(k));
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{buf[b]} << (8 * b);
    p.values[k] = std::bit_cast<double>(bits);
  }
  return p;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_checkpoint(in);
}

}  // namespace decant
