#include "decant/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>

#include "decant/errors.hpp"
#include "decant/rng.hpp"

namespace decant {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw ParseError(path + ": zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw ParseError(path + ": corrupt gzip stream at compressed byte offset " +
                       std::to_string(zs.total_in));
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw ParseError(path + ": truncated gzip stream at compressed byte offset " +
                       std::to_string(zs.total_in));
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path);
  return bytes;
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t offset) {
  if (offset + 4 > b.size()) {
    throw ParseError("idx: truncated header at byte offset " + std::to_string(offset) +
                     " (file has " + std::to_string(b.size()) + " bytes)");
  }
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void expect_magic(std::uint32_t got, std::uint32_t want, const char* what) {
  if (got != want) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "idx: magic mismatch for %s: expected 0x%08x, got 0x%08x",
                  what, want, got);
    throw ParseError(msg);
  }
}

void expect_payload(std::span<const std::uint8_t> b, std::size_t header, std::size_t payload) {
  if (b.size() < header + payload) {
    throw ParseError("idx: truncated payload at byte offset " + std::to_string(b.size()) +
                     ", expected " + std::to_string(header + payload) + " bytes");
  }
}

}  // namespace

void LabeledDataset::validate() const {
  if (n_features == 0) throw ContractError("dataset: n_features must be positive");
  if (features.size() != labels.size() * n_features) {
    throw ContractError("dataset: feature rows do not match label count");
  }
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw ContractError("dataset: label out of range");
  }
}

LabeledDataset LabeledDataset::head(std::size_t n) const {
  LabeledDataset out;
  const std::size_t k = std::min(n, size());
  out.n_features = n_features;
  out.n_classes = n_classes;
  out.split = split;
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
  out.features.assign(features.begin(),
                      features.begin() + static_cast<std::ptrdiff_t>(k * n_features));
  return out;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  expect_magic(read_be32(bytes, 0), kImagesMagic, "images");
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);
  const std::size_t payload = img.count * img.rows * img.cols;
  expect_payload(bytes, 16, payload);
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  expect_magic(read_be32(bytes, 0), kLabelsMagic, "labels");
  const std::size_t count = read_be32(bytes, 4);
  expect_payload(bytes, 8, count);
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

IdxImages read_idx_images(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return parse_idx_images(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return parse_idx_labels(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        Split split, std::size_t max_samples) {
  const IdxImages img = read_idx_images(images_path);
  const auto lbl = read_idx_labels(labels_path);
  if (img.count != lbl.size()) {
    throw ParseError("idx: count mismatch, " + std::to_string(img.count) + " images vs " +
                     std::to_string(lbl.size()) + " labels");
  }
  const std::size_t n = max_samples > 0 ? std::min(max_samples, img.count) : img.count;
  LabeledDataset ds;
  ds.split = split;
  ds.n_features = img.rows * img.cols;
  ds.features.resize(n * ds.n_features);
  for (std::size_t k = 0; k < ds.features.size(); ++k) ds.features[k] = img.pixels[k] / 255.0;
  ds.labels.assign(lbl.begin(), lbl.begin() + static_cast<std::ptrdiff_t>(n));
  int max_label = 0;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.n_classes = n > 0 ? max_label + 1 : 0;
  return ds;
}

LabeledDataset synth_gaussian(int n_classes, std::size_t n_per_class, std::size_t n_features,
                              double class_sep, std::uint64_t seed, std::uint64_t stream) {
  if (n_classes < 1 || n_features < 1) {
    throw ContractError("synth_gaussian: n_classes and n_features must be positive");
  }
  Rng mean_rng(derive_seed(seed, Stream::kSynthetic, {0}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> means(static_cast<std::size_t>(n_classes) * n_features);
  for (int c = 0; c < n_classes; ++c) {
    double* m = means.data() + static_cast<std::size_t>(c) * n_features;
    double norm = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      m[f] = normal(mean_rng);
      norm += m[f] * m[f];
    }
    norm = std::sqrt(norm);
    for (std::size_t f = 0; f < n_features; ++f) m[f] = norm > 0 ? m[f] / norm * class_sep : 0.0;
  }

  Rng noise_rng(derive_seed(seed, Stream::kSynthetic, {1, stream}));
  const std::size_t n = static_cast<std::size_t>(n_classes) * n_per_class;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), noise_rng);

  LabeledDataset ds;
  ds.n_classes = n_classes;
  ds.n_features = n_features;
  ds.split = stream == 0 ? Split::kTrain : Split::kTest;
  ds.features.resize(n * n_features);
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = static_cast<int>(order[r] / n_per_class);
    ds.labels[r] = c;
    const double* m = means.data() + static_cast<std::size_t>(c) * n_features;
    for (std::size_t f = 0; f < n_features; ++f) {
      ds.features[r * n_features + f] = m[f] + normal(noise_rng);
    }
  }
  return ds;
}

std::vector<std::size_t> largest_remainder_counts(std::span<const double> proportions,
                                                  std::size_t total) {
  const std::size_t k = proportions.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> frac(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  // Rounding error in the proportions can push the floor sum past total.
  while (assigned > total) {
    const auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[idx[r % k]];
  return counts;
}

std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> labels,
                                                          int n_clients, double beta,
                                                          std::uint64_t seed) {
  if (!(beta > 0.0)) throw ConfigError("beta", "must be positive");
  if (n_clients < 1) throw ConfigError("n_clients", "must be at least 1");
  const auto k = static_cast<std::size_t>(n_clients);
  std::vector<std::vector<std::size_t>> parts(k);
  if (labels.empty()) return parts;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(derive_seed(seed, Stream::kPartition));
  std::gamma_distribution<double> gamma(beta, 1.0);
  std::vector<double> props(k);
  for (auto& [cls, members] : by_class) {
    double sum = 0.0;
    for (auto& p : props) {
      p = gamma(rng);
      sum += p;
    }
    if (!(sum > 0.0)) {
      // Every draw underflowed; put the whole class on one client.
      std::fill(props.begin(), props.end(), 0.0);
      props[rng() % k] = 1.0;
    } else {
      for (auto& p : props) p /= sum;
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = largest_remainder_counts(props, members.size());
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < k; ++c) {
      parts[c].insert(parts[c].end(), members.begin() + static_cast<std::ptrdiff_t>(cursor),
                      members.begin() + static_cast<std::ptrdiff_t>(cursor + counts[c]));
      cursor += counts[c];
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

}  // namespace decant
