#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pimpc/data.hpp"
#include "pimpc/errors.hpp"

using namespace pimpc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("pimpc_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("sbm honors its block structure") {
  SbmSpec spec;
  spec.class_sizes = {10, 10};
  spec.p_within = 1.0;
  spec.p_between = 0.0;
  spec.feature_dim = 4;
  spec.seed = 3;
  Dataset ds = generate_sbm(spec);
  CHECK(ds.num_nodes() == 20);
  CHECK(ds.num_classes == 2);
  // Two cliques: every within pair present, no between edges.
  CHECK(ds.graph.num_edges() == 2 * (10 * 9) / 2);
  for (auto [a, b] : ds.graph.edges()) {
    CHECK(ds.labels[a] == ds.labels[b]);
  }

  SbmSpec sparse = spec;
  sparse.p_within = 0.3;
  sparse.p_between = 0.0;
  Dataset ds2 = generate_sbm(sparse);
  for (auto [a, b] : ds2.graph.edges()) CHECK(ds2.labels[a] == ds2.labels[b]);
}

TEST_CASE("sbm edge counts match the binomial expectation") {
  SbmSpec spec;
  spec.class_sizes = {20, 15, 10};
  spec.p_within = 0.25;
  spec.p_between = 0.05;
  spec.feature_dim = 3;

  const double within_pairs = (20.0 * 19 + 15.0 * 14 + 10.0 * 9) / 2.0;
  const double between_pairs = 20.0 * 15 + 20.0 * 10 + 15.0 * 10;
  const double mean_edges =
      within_pairs * spec.p_within + between_pairs * spec.p_between;
  const double var_edges =
      within_pairs * spec.p_within * (1 - spec.p_within) +
      between_pairs * spec.p_between * (1 - spec.p_between);

  const int seeds = 20;
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) {
    spec.seed = 100 + s;
    total += static_cast<double>(generate_sbm(spec).graph.num_edges());
  }
  const double se = std::sqrt(var_edges * seeds);
  CHECK(std::abs(total - seeds * mean_edges) <= 3.0 * se);
}

TEST_CASE("sbm determinism per seed") {
  SbmSpec spec;
  spec.class_sizes = {8, 6};
  spec.p_within = 0.4;
  spec.p_between = 0.1;
  spec.feature_dim = 5;
  spec.seed = 42;
  Dataset a = generate_sbm(spec);
  Dataset b = generate_sbm(spec);
  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(a.features.values() == b.features.values());
}

TEST_CASE("balanced split at ratio 1") {
  SbmSpec spec;
  spec.class_sizes = {40, 40, 40};
  spec.p_within = 0.2;
  spec.p_between = 0.05;
  spec.seed = 7;
  Dataset ds = generate_sbm(spec);
  SplitSpec split = make_imbalanced_split(ds, 1.0, 0.5, 11);
  auto counts = class_counts(ds, split.train);
  CHECK(counts[0] == counts[1]);
  CHECK(counts[1] == counts[2]);
  validate_split(ds, split);
}

TEST_CASE("geometric imbalance profile hits the requested ratio") {
  SbmSpec spec;
  spec.class_sizes = {200, 200};
  spec.p_within = 0.05;
  spec.p_between = 0.01;
  spec.seed = 13;
  Dataset ds = generate_sbm(spec);
  SplitSpec split = make_imbalanced_split(ds, 50.0, 0.5, 17);
  auto counts = class_counts(ds, split.train);
  const long n_maj = std::max(counts[0], counts[1]);
  const long n_min = std::min(counts[0], counts[1]);
  CHECK(n_maj == 100);
  CHECK(n_min == 2);

  // Three classes, moderate ratio: achieved ratio within one count.
  SbmSpec spec3;
  spec3.class_sizes = {120, 90, 60};
  spec3.p_within = 0.1;
  spec3.p_between = 0.02;
  spec3.seed = 19;
  Dataset ds3 = generate_sbm(spec3);
  SplitSpec split3 = make_imbalanced_split(ds3, 10.0, 0.5, 23);
  auto counts3 = class_counts(ds3, split3.train);
  const long maj = *std::max_element(counts3.begin(), counts3.end());
  const long mini = *std::min_element(counts3.begin(), counts3.end());
  const double lo = static_cast<double>(maj) / static_cast<double>(mini + 1);
  const double hi = static_cast<double>(maj) / static_cast<double>(mini - 1);
  CHECK(lo <= 10.0);
  CHECK(hi >= 10.0);
}

TEST_CASE("step-mode shrinks only the smallest class") {
  SbmSpec spec;
  spec.class_sizes = {60, 50, 40};
  spec.p_within = 0.2;
  spec.p_between = 0.02;
  spec.seed = 29;
  Dataset ds = generate_sbm(spec);
  SplitSpec split = make_imbalanced_split(ds, 5.0, 0.5, 31, /*step_mode=*/true);
  auto counts = class_counts(ds, split.train);
  CHECK(counts[0] == 30);
  CHECK(counts[1] == 30);
  CHECK(counts[2] == 6);
}

TEST_CASE("insufficient class population is rejected") {
  SbmSpec spec;
  spec.class_sizes = {30, 2};  // two nodes cannot cover train/val/test
  spec.p_within = 0.5;
  spec.p_between = 0.1;
  spec.seed = 37;
  Dataset ds = generate_sbm(spec);
  CHECK_THROWS_AS(make_imbalanced_split(ds, 1.0, 0.8, 41), DataError);

  // A feasible but tight class scales the whole profile down instead.
  SbmSpec tight = spec;
  tight.class_sizes = {30, 4};
  Dataset ds2 = generate_sbm(tight);
  SplitSpec split = make_imbalanced_split(ds2, 1.0, 0.8, 41);
  auto counts = class_counts(ds2, split.train);
  CHECK(counts[0] == counts[1]);  // ratio 1 preserved by scaling
  CHECK(counts[1] <= 2);
}

TEST_CASE("dataset round-trip is bit exact") {
  SbmSpec spec;
  spec.class_sizes = {12, 9};
  spec.p_within = 0.35;
  spec.p_between = 0.08;
  spec.feature_dim = 6;
  spec.seed = 43;
  Dataset ds = generate_sbm(spec);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir.string());
  Dataset back = load_dataset(dir.string());
  CHECK(back.num_nodes() == ds.num_nodes());
  CHECK(back.graph.edges() == ds.graph.edges());
  CHECK(back.labels == ds.labels);
  CHECK(back.features.values() == ds.features.values());
  CHECK(back.num_classes == ds.num_classes);
  fs::remove_all(dir);
}

TEST_CASE("split json round-trip") {
  const fs::path dir = temp_dir("splitjson");
  SplitSpec split;
  split.train = {0, 2, 4};
  split.val = {1, 5};
  split.test = {3, 6, 7};
  split.imbalance_ratio = 12.5;
  save_split(split, dir.string());
  auto back = load_split(dir.string());
  REQUIRE(back.has_value());
  CHECK(back->train == split.train);
  CHECK(back->val == split.val);
  CHECK(back->test == split.test);
  CHECK(back->imbalance_ratio == split.imbalance_ratio);
  CHECK(!load_split(temp_dir("nosplit").string()).has_value());
  fs::remove_all(dir);
}

TEST_CASE("loader canonicalizes edges and accepts an edgeless graph") {
  const fs::path dir = temp_dir("canon");
  std::ofstream(dir / "features.csv") << "1.0,2.0\n3.0,4.0\n5.0,6.0\n";
  std::ofstream(dir / "labels.csv") << "0\n1\n0\n";
  std::ofstream(dir / "edges.csv") << "2,1\n1,2\n";
  Dataset ds = load_dataset(dir.string());
  CHECK(ds.graph.num_edges() == 1);
  CHECK(ds.graph.dropped_inputs() == 1);

  std::ofstream(dir / "edges.csv", std::ios::trunc) << "";
  Dataset empty = load_dataset(dir.string());
  CHECK(empty.graph.num_edges() == 0);
  CHECK(empty.num_nodes() == 3);
  fs::remove_all(dir);
}

TEST_CASE("loader reports precise errors") {
  const fs::path dir = temp_dir("errors");
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);  // missing files

  std::ofstream(dir / "features.csv") << "1.0,2.0\n3.0,oops\n";
  std::ofstream(dir / "labels.csv") << "0\n1\n";
  std::ofstream(dir / "edges.csv") << "0,1\n";
  try {
    load_dataset(dir.string());
    CHECK(false);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::ofstream(dir / "features.csv", std::ios::trunc) << "1.0,2.0\n3.0,4.0\n";
  std::ofstream(dir / "labels.csv", std::ios::trunc) << "0\n-3\n";
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);

  std::ofstream(dir / "labels.csv", std::ios::trunc) << "0\n1\n";
  std::ofstream(dir / "edges.csv", std::ios::trunc) << "0,7\n";
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
  fs::remove_all(dir);
}

TEST_CASE("split determinism and disjointness audit") {
  SbmSpec spec;
  spec.class_sizes = {50, 30, 20};
  spec.p_within = 0.15;
  spec.p_between = 0.03;
  spec.seed = 47;
  Dataset ds = generate_sbm(spec);
  SplitSpec a = make_imbalanced_split(ds, 5.0, 0.4, 53);
  SplitSpec b = make_imbalanced_split(ds, 5.0, 0.4, 53);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  SplitSpec c = make_imbalanced_split(ds, 5.0, 0.4, 54);
  CHECK(a.train != c.train);

  SplitSpec broken = a;
  broken.val.push_back(a.train[0]);
  CHECK_THROWS_AS(validate_split(ds, broken), DataError);
}
