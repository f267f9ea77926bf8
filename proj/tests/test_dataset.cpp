#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "decant/dataset.hpp"
#include "decant/errors.hpp"
#include "decant/fl.hpp"
#include "decant/model.hpp"
#include "decant/rng.hpp"

using namespace decant;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> image_bytes(std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> b;
  put_u32(b, 0x00000803);
  put_u32(b, count);
  put_u32(b, rows);
  put_u32(b, cols);
  for (std::uint32_t k = 0; k < count * rows * cols; ++k) b.push_back(static_cast<std::uint8_t>(k));
  return b;
}

std::vector<std::uint8_t> label_bytes(std::uint32_t count) {
  std::vector<std::uint8_t> b;
  put_u32(b, 0x00000801);
  put_u32(b, count);
  for (std::uint32_t k = 0; k < count; ++k) b.push_back(static_cast<std::uint8_t>(k % 10));
  return b;
}

std::string write_temp(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  const auto path = std::filesystem::temp_directory_path() / ("decant_test_" + name);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return path.string();
}

std::string data_file(const char* name) {
  return std::string(DECANT_SOURCE_DIR) + "/data/mnist-subset/" + name;
}

double train_accuracy(const LabeledDataset& ds, int steps, double lr) {
  auto params = init_params(make_layers(ds.n_features, {}, static_cast<std::size_t>(ds.n_classes)), 3);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  TrainSpec spec;
  spec.samples = static_cast<long long>(ds.size()) * steps;
  spec.learning_rate = lr;
  spec.clip_zeta = 1e9;
  Rng rng(11);
  auto res = local_train(params, ds, all, spec, rng);
  return evaluate(res.params, ds).accuracy;
}

}  // namespace

TEST(Idx, ParsesHeaderAndPixels) {
  const auto img = parse_idx_images(image_bytes(3, 2, 2));
  EXPECT_EQ(img.count, 3u);
  EXPECT_EQ(img.rows, 2u);
  EXPECT_EQ(img.cols, 2u);
  EXPECT_EQ(img.pixels[5], 5);
  EXPECT_EQ(parse_idx_labels(label_bytes(12))[11], 1);
}

TEST(Idx, TruncatedNamesOffset) {
  auto b = image_bytes(3, 2, 2);
  b.resize(b.size() - 1);
  try {
    parse_idx_images(b);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  auto h = image_bytes(1, 1, 1);
  h.resize(6);
  EXPECT_THROW(parse_idx_images(h), ParseError);
}

TEST(Idx, LabelsFileAsImagesIsMagicMismatch) {
  try {
    parse_idx_images(label_bytes(4));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_idx_labels(image_bytes(1, 1, 1)), ParseError);
}

TEST(Idx, CountMismatchBetweenFiles) {
  const auto images = write_temp("img3", image_bytes(3, 2, 2));
  const auto labels = write_temp("lab4", label_bytes(4));
  EXPECT_THROW(load_idx(images, labels), ParseError);
}

TEST(Idx, LoadScalesToUnitInterval) {
  const auto images = write_temp("img2", image_bytes(2, 4, 4));
  const auto labels = write_temp("lab2", label_bytes(2));
  const auto ds = load_idx(images, labels, Split::kTest);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.n_features, 16u);
  EXPECT_EQ(ds.split, Split::kTest);
  EXPECT_DOUBLE_EQ(ds.row(1)[0], 16.0 / 255.0);
}

TEST(Idx, BundledMnistSubset) {
  const auto ds = load_idx(data_file("train-images-idx3-ubyte.gz"),
                           data_file("train-labels-idx1-ubyte.gz"));
  EXPECT_EQ(ds.size(), 6000u);
  EXPECT_EQ(ds.n_features, 784u);
  EXPECT_EQ(ds.n_classes, 10);
  EXPECT_TRUE(std::all_of(ds.features.begin(), ds.features.end(),
                          [](double v) { return v >= 0.0 && v <= 1.0; }));
  const auto head = load_idx(data_file("t10k-images-idx3-ubyte.gz"),
                             data_file("t10k-labels-idx1-ubyte.gz"), Split::kTest, 100);
  EXPECT_EQ(head.size(), 100u);
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = synth_gaussian(3, 20, 5, 2.0, 7);
  const auto b = synth_gaussian(3, 20, 5, 2.0, 7);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(synth_gaussian(3, 20, 5, 2.0, 8).features, a.features);
}

TEST(Synthetic, WellSeparatedIsLinearlyLearnable) {
  const auto ds = synth_gaussian(2, 100, 10, 10.0, 1);
  EXPECT_GE(train_accuracy(ds, 20, 0.05), 0.99);
}

TEST(Synthetic, ZeroSeparationIsChance) {
  const auto train = synth_gaussian(4, 250, 10, 0.0, 2);
  const auto test = synth_gaussian(4, 250, 10, 0.0, 2, 1);
  auto params = init_params(make_layers(10, {}, 4), 3);
  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), 0);
  TrainSpec spec;
  spec.samples = 5000;
  spec.learning_rate = 0.05;
  Rng rng(3);
  const double acc = evaluate(local_train(params, train, all, spec, rng).params, test).accuracy;
  EXPECT_NEAR(acc, 0.25, 0.1);
}

TEST(LargestRemainder, ExactTotalsAndTies) {
  const std::vector<double> p{0.5, 0.25, 0.25};
  EXPECT_EQ(largest_remainder_counts(p, 3), (std::vector<std::size_t>{1, 1, 1}));
  const std::vector<double> q{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_EQ(largest_remainder_counts(q, 10), (std::vector<std::size_t>{4, 3, 3}));
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(0.3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> w(13);
    double s = 0.0;
    for (auto& v : w) s += (v = g(rng) + 1e-12);
    for (auto& v : w) v /= s;
    const std::size_t total = 1 + rng() % 1000;
    const auto c = largest_remainder_counts(w, total);
    EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), total);
    for (std::size_t k = 0; k < w.size(); ++k) {
      EXPECT_LE(std::abs(static_cast<double>(c[k]) - w[k] * total), 1.0);
    }
  }
}

namespace {

std::vector<int> balanced_labels(std::size_t n, int classes) {
  std::vector<int> labels(n);
  for (std::size_t k = 0; k < n; ++k) labels[k] = static_cast<int>(k % classes);
  return labels;
}

}  // namespace

TEST(Dirichlet, ExactPartition) {
  const auto labels = balanced_labels(1234, 10);
  for (double beta : {0.05, 0.5, 5.0}) {
    const auto parts = dirichlet_partition(labels, 17, beta, 4);
    std::vector<int> seen(labels.size(), 0);
    for (const auto& p : parts) {
      EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
      for (auto i : p) ++seen[i];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  }
}

TEST(Dirichlet, Degenerate) {
  const auto labels = balanced_labels(50, 5);
  const auto one = dirichlet_partition(labels, 1, 0.1, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size(), 50u);
  const auto empty = dirichlet_partition(std::vector<int>{}, 4, 0.1, 1);
  ASSERT_EQ(empty.size(), 4u);
  for (const auto& p : empty) EXPECT_TRUE(p.empty());
  EXPECT_THROW(dirichlet_partition(labels, 3, 0.0, 1), ConfigError);
  EXPECT_THROW(dirichlet_partition(labels, 0, 1.0, 1), ConfigError);
}

TEST(Dirichlet, Deterministic) {
  const auto labels = balanced_labels(500, 10);
  EXPECT_EQ(dirichlet_partition(labels, 9, 0.3, 12), dirichlet_partition(labels, 9, 0.3, 12));
  EXPECT_NE(dirichlet_partition(labels, 9, 0.3, 12), dirichlet_partition(labels, 9, 0.3, 13));
}

TEST(Dirichlet, LargeBetaIsNearlyUniform) {
  const auto labels = balanced_labels(10000, 10);
  int within = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto parts = dirichlet_partition(labels, 10, 1e6, seed);
    for (const auto& p : parts) {
      std::map<int, int> per_class;
      for (auto i : p) ++per_class[labels[i]];
      for (int c = 0; c < 10; ++c) {
        // share of class c that this client holds
        const double share = per_class[c] / 1000.0;
        within += std::abs(share - 0.1) <= 0.02;
        ++total;
      }
    }
  }
  EXPECT_GE(within, static_cast<int>(0.95 * total));
}

TEST(Dirichlet, SmallBetaIsSkewed) {
  const auto labels = balanced_labels(10000, 10);
  int skewed_seeds = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto parts = dirichlet_partition(labels, 100, 0.1, seed);
    bool found = false;
    for (const auto& p : parts) {
      if (p.empty()) continue;
      std::map<int, int> per_class;
      for (auto i : p) ++per_class[labels[i]];
      int top = 0;
      for (auto& [c, n] : per_class) top = std::max(top, n);
      found = found || top > 0.6 * static_cast<double>(p.size());
    }
    skewed_seeds += found;
  }
  EXPECT_GE(skewed_seeds, 18);
}
