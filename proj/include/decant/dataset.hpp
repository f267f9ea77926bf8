#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace decant {

enum class Split { kTrain, kTest };

// Row-major feature matrix with aligned integer labels in [0, n_classes).
struct LabeledDataset {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t n_features = 0;
  int n_classes = 0;
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
  // Throws ContractError when rows/labels disagree or a label is out of range.
  void validate() const;
  // Copy of the first `n` rows (all rows when n >= size()).
  LabeledDataset head(std::size_t n) const;
};

// Raw IDX tensors. Gzip-compressed files are inflated transparently.
struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

// Reads an image/label file pair; pixels are scaled to [0, 1]. When
// max_samples > 0 only the first max_samples rows are kept.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        Split split = Split::kTrain, std::size_t max_samples = 0);

// Isotropic unit-variance Gaussian blobs, one per class, centered at seeded
// random means of norm class_sep. The means depend only on `seed`; the noise
// also depends on `stream`, so stream 0 and stream 1 give a train/test pair.
LabeledDataset synth_gaussian(int n_classes, std::size_t n_per_class, std::size_t n_features,
                              double class_sep, std::uint64_t seed, std::uint64_t stream = 0);

// Per-class symmetric Dirichlet(beta) proportions over clients, converted to
// counts by largest-remainder rounding. Every index lands in exactly one list.
std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> labels,
                                                          int n_clients, double beta,
                                                          std::uint64_t seed);

// Largest-remainder rounding of `total` by `proportions` (which must sum to 1).
// Ties go to the lowest index.
std::vector<std::size_t> largest_remainder_counts(std::span<const double> proportions,
                                                  std::size_t total);

}  // namespace decant
