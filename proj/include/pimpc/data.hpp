#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pimpc/graph.hpp"
#include "pimpc/rng.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

struct Dataset {
  SparseGraph graph;
  Tensor features;          // N x D
  std::vector<int> labels;  // N entries in [0, num_classes)
  int num_classes = 0;
  std::string name;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  std::size_t feature_dim() const { return features.cols(); }
};

struct SplitSpec {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  double imbalance_ratio = 1.0;
};

struct SbmSpec {
  std::vector<int> class_sizes;
  double p_within = 0.1;
  double p_between = 0.01;
  int feature_dim = 16;
  double mean_separation = 1.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Reads edges.csv ("src,dst" per line), features.csv (comma-separated
/// decimals) and labels.csv (one integer per line) from a directory.
Dataset load_dataset(const std::string& directory);

/// Writes the same layout; decimals carry 17 significant digits so a
/// reload is bit-exact.
void save_dataset(const Dataset& dataset, const std::string& directory);

std::optional<SplitSpec> load_split(const std::string& directory);
void save_split(const SplitSpec& split, const std::string& directory);

/// Planted-partition graph with Gaussian class-mean features.
Dataset generate_sbm(const SbmSpec& spec);

/// Training counts follow a geometric profile from the largest class's
/// count down to count/ratio (step_mode shrinks only the smallest
/// class); the remainder splits class-stratified into val and test.
SplitSpec make_imbalanced_split(const Dataset& dataset, double ratio,
                                double train_fraction, std::uint64_t seed,
                                bool step_mode = false);

/// Per-class node counts over an index subset.
std::vector<long> class_counts(const Dataset& dataset,
                               const std::vector<int>& index);

void validate_split(const Dataset& dataset, const SplitSpec& split);

}  // namespace pimpc
