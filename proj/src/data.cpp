#include "pimpc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pimpc/errors.hpp"

namespace pimpc {

namespace fs = std::filesystem;

namespace {

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("missing file: " + p.string());
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

double parse_double(const std::string& s, const std::string& file, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() &&
           (s[pos] == ' ' || s[pos] == '\r' || s[pos] == '\t')) {
      ++pos;
    }
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(file + " line " + std::to_string(line) +
                    ": malformed value '" + s + "'");
  }
}

long parse_int(const std::string& s, const std::string& file, int line) {
  const double v = parse_double(s, file, line);
  const long r = std::lround(v);
  if (static_cast<double>(r) != v) {
    throw DataError(file + " line " + std::to_string(line) +
                    ": expected an integer, got '" + s + "'");
  }
  return r;
}

}  // namespace

Dataset load_dataset(const std::string& directory) {
  const fs::path dir(directory);

  // Features first: they fix N and D.
  std::vector<double> feature_values;
  std::size_t n = 0, d = 0;
  {
    std::ifstream in = open_or_throw(dir / "features.csv");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      const auto fields = split_fields(line);
      if (d == 0) {
        d = fields.size();
      } else if (fields.size() != d) {
        throw DataError("features.csv line " + std::to_string(lineno) +
                        ": expected " + std::to_string(d) + " fields, got " +
                        std::to_string(fields.size()));
      }
      for (const auto& f : fields) {
        feature_values.push_back(parse_double(f, "features.csv", lineno));
      }
      ++n;
    }
    if (n == 0) throw DataError("features.csv is empty");
  }

  std::vector<int> labels;
  {
    std::ifstream in = open_or_throw(dir / "labels.csv");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      const long v = parse_int(line, "labels.csv", lineno);
      if (v < 0) {
        throw DataError("labels.csv line " + std::to_string(lineno) +
                        ": label out of range: " + std::to_string(v));
      }
      labels.push_back(static_cast<int>(v));
    }
    if (labels.size() != n) {
      throw DataError("labels.csv has " + std::to_string(labels.size()) +
                      " rows but features.csv has " + std::to_string(n));
    }
  }
  const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());

  std::vector<std::pair<int, int>> edges;
  {
    std::ifstream in = open_or_throw(dir / "edges.csv");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 2) {
        throw DataError("edges.csv line " + std::to_string(lineno) +
                        ": expected 'src,dst'");
      }
      const long a = parse_int(fields[0], "edges.csv", lineno);
      const long b = parse_int(fields[1], "edges.csv", lineno);
      if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n ||
          static_cast<std::size_t>(b) >= n) {
        throw DataError("edges.csv line " + std::to_string(lineno) +
                        ": node index out of range");
      }
      edges.push_back({static_cast<int>(a), static_cast<int>(b)});
    }
  }

  Dataset ds{SparseGraph(n, std::move(edges)),
             Tensor::from_values({n, d}, std::move(feature_values)),
             std::move(labels), num_classes, dir.filename().string()};
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& directory) {
  const fs::path dir(directory);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.csv");
    for (auto [a, b] : dataset.graph.edges()) out << a << "," << b << "\n";
  }
  {
    std::ofstream out(dir / "features.csv");
    char buf[64];
    const std::size_t n = dataset.features.rows(), d = dataset.features.cols();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", dataset.features(i, j));
        out << (j ? "," : "") << buf;
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (int label : dataset.labels) out << label << "\n";
  }
}

std::optional<SplitSpec> load_split(const std::string& directory) {
  const fs::path p = fs::path(directory) / "split.json";
  if (!fs::exists(p)) return std::nullopt;
  std::ifstream in(p);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed split.json: " + std::string(e.what()));
  }
  SplitSpec split;
  split.train = doc.at("train").get<std::vector<int>>();
  split.val = doc.at("val").get<std::vector<int>>();
  split.test = doc.at("test").get<std::vector<int>>();
  split.imbalance_ratio = doc.value("imbalance_ratio", 1.0);
  return split;
}

void save_split(const SplitSpec& split, const std::string& directory) {
  nlohmann::json doc;
  doc["train"] = split.train;
  doc["val"] = split.val;
  doc["test"] = split.test;
  doc["imbalance_ratio"] = split.imbalance_ratio;
  std::ofstream out(fs::path(directory) / "split.json");
  if (!out) throw DataError("cannot write split.json in " + directory);
  out << doc.dump(1) << "\n";
}

Dataset generate_sbm(const SbmSpec& spec) {
  if (spec.class_sizes.empty()) throw DataError("SBM needs class sizes");
  for (int s : spec.class_sizes) {
    if (s < 1) throw DataError("SBM class sizes must be >= 1");
  }
  if (spec.p_within < 0 || spec.p_within > 1 || spec.p_between < 0 ||
      spec.p_between > 1) {
    throw DataError("SBM edge probabilities must lie in [0, 1]");
  }
  Rng rng(spec.seed);
  const int num_classes = static_cast<int>(spec.class_sizes.size());
  const std::size_t n = static_cast<std::size_t>(
      std::accumulate(spec.class_sizes.begin(), spec.class_sizes.end(), 0));

  std::vector<int> labels(n);
  {
    std::size_t at = 0;
    for (int c = 0; c < num_classes; ++c) {
      for (int i = 0; i < spec.class_sizes[c]; ++i) labels[at++] = c;
    }
  }

  // Class means: seeded random directions scaled to the requested
  // separation.
  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
  std::vector<std::vector<double>> means(num_classes,
                                         std::vector<double>(d, 0.0));
  for (auto& mu : means) {
    double norm = 0.0;
    for (double& x : mu) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : mu) x = spec.mean_separation * x / (norm + 1e-12);
  }

  std::vector<double> feats(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      feats[i * d + j] = means[labels[i]][j] + spec.noise_scale * rng.normal();
    }
  }

  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p =
          labels[i] == labels[j] ? spec.p_within : spec.p_between;
      if (rng.bernoulli(p)) {
        edges.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
  }

  return Dataset{SparseGraph(n, std::move(edges)),
                 Tensor::from_values({n, d}, std::move(feats)),
                 std::move(labels), num_classes, "sbm"};
}

namespace {

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

}  // namespace

SplitSpec make_imbalanced_split(const Dataset& dataset, double ratio,
                                double train_fraction, std::uint64_t seed,
                                bool step_mode) {
  if (ratio < 1.0) throw DataError("imbalance ratio must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw DataError("train fraction must lie in (0, 1)");
  }
  const int num_classes = dataset.num_classes;
  std::vector<std::vector<int>> by_class(num_classes);
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    by_class[dataset.labels[i]].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < num_classes; ++c) {
    if (by_class[c].empty()) {
      throw DataError("class " + std::to_string(c) + " has no nodes");
    }
  }

  // Rank classes by population (largest first, ties by index).
  std::vector<int> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return by_class[a].size() > by_class[b].size();
  });

  // Geometric profile over class ranks, then scaled down uniformly when
  // a class cannot afford its share (ratios survive scaling; every
  // class must keep one node each for val and test).
  const double n_maj =
      train_fraction * static_cast<double>(by_class[order[0]].size());
  std::vector<double> profile(num_classes, n_maj);
  for (int rank = 0; rank < num_classes; ++rank) {
    double factor = 1.0;
    if (num_classes > 1) {
      if (step_mode) {
        factor = rank == num_classes - 1 ? 1.0 / ratio : 1.0;
      } else {
        factor = std::pow(ratio, -static_cast<double>(rank) /
                                     static_cast<double>(num_classes - 1));
      }
    }
    profile[order[rank]] = n_maj * factor;
  }
  double scale = 1.0;
  for (int c = 0; c < num_classes; ++c) {
    const long budget = static_cast<long>(by_class[c].size()) - 2;
    if (budget < 1) {
      throw DataError("class " + std::to_string(c) + " has only " +
                      std::to_string(by_class[c].size()) +
                      " nodes; at least 3 are needed for train/val/test");
    }
    scale = std::min(scale, static_cast<double>(budget) / profile[c]);
  }
  std::vector<long> train_counts(num_classes, 0);
  for (int c = 0; c < num_classes; ++c) {
    train_counts[c] = std::max<long>(1, std::lround(profile[c] * scale));
    train_counts[c] =
        std::min(train_counts[c], static_cast<long>(by_class[c].size()) - 2);
  }

  Rng rng(seed);
  SplitSpec split;
  split.imbalance_ratio = ratio;
  for (int c = 0; c < num_classes; ++c) {
    auto nodes = by_class[c];
    const long want = train_counts[c];
    shuffle(nodes, rng);
    for (long i = 0; i < want; ++i) split.train.push_back(nodes[i]);
    const long rest = static_cast<long>(nodes.size()) - want;
    const long val_count = rest / 2;  // test keeps the ceiling, so >= 1
    for (long i = 0; i < val_count; ++i) {
      split.val.push_back(nodes[want + i]);
    }
    for (long i = val_count; i < rest; ++i) {
      split.test.push_back(nodes[want + i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  validate_split(dataset, split);
  return split;
}

std::vector<long> class_counts(const Dataset& dataset,
                               const std::vector<int>& index) {
  std::vector<long> counts(dataset.num_classes, 0);
  for (int i : index) ++counts[dataset.labels[i]];
  return counts;
}

void validate_split(const Dataset& dataset, const SplitSpec& split) {
  const std::size_t n = dataset.num_nodes();
  std::vector<char> seen(n, 0);
  auto check = [&](const std::vector<int>& idx, const char* name) {
    for (int i : idx) {
      if (i < 0 || static_cast<std::size_t>(i) >= n) {
        throw DataError(std::string(name) + " index out of range: " +
                        std::to_string(i));
      }
      if (seen[i]) {
        throw DataError("node " + std::to_string(i) +
                        " appears in more than one split");
      }
      seen[i] = 1;
    }
  };
  check(split.train, "train");
  check(split.val, "val");
  check(split.test, "test");
  const auto test_counts = class_counts(dataset, split.test);
  for (int c = 0; c < dataset.num_classes; ++c) {
    if (test_counts[c] == 0) {
      throw DataError("class " + std::to_string(c) + " missing from test");
    }
  }
}

}  // namespace pimpc
