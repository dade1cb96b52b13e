#include "pimpc/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pimpc/errors.hpp"

namespace pimpc {

EvalReport evaluate(std::span<const int> labels_true,
                    std::span<const int> labels_pred,
                    const std::vector<int>& minority, RejectPolicy policy,
                    int num_classes) {
  if (labels_true.size() != labels_pred.size()) {
    throw DataError("evaluate: " + std::to_string(labels_true.size()) +
                    " true labels vs " + std::to_string(labels_pred.size()) +
                    " predictions");
  }
  const std::size_t n = labels_true.size();
  EvalReport rep;
  rep.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
  rep.rejected_per_class.assign(num_classes, 0);
  rep.support.assign(num_classes, 0);

  long covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = labels_true[i];
    if (t < 0 || t >= num_classes) {
      throw DataError("true label out of range: " + std::to_string(t));
    }
    if (labels_pred[i] < 0) {
      ++rep.rejected_per_class[t];
      if (policy == RejectPolicy::CountAsError) ++rep.support[t];
      continue;
    }
    if (labels_pred[i] >= num_classes) {
      throw DataError("prediction out of range: " +
                      std::to_string(labels_pred[i]));
    }
    ++covered;
    ++rep.support[t];
    ++rep.confusion[t][labels_pred[i]];
  }
  rep.coverage = n == 0 ? 1.0 : static_cast<double>(covered) /
                                    static_cast<double>(n);

  rep.precision.assign(num_classes, 0.0);
  rep.recall.assign(num_classes, 0.0);
  rep.f1.assign(num_classes, 0.0);

  long correct = 0;
  double recall_sum = 0.0, f1_sum = 0.0;
  int classes_with_support = 0;
  for (int c = 0; c < num_classes; ++c) {
    long tp = rep.confusion[c][c];
    long fp = 0, fn = 0;
    for (int o = 0; o < num_classes; ++o) {
      if (o != c) {
        fp += rep.confusion[o][c];
        fn += rep.confusion[c][o];
      }
    }
    if (policy == RejectPolicy::CountAsError) fn += rep.rejected_per_class[c];
    correct += tp;
    rep.precision[c] =
        tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                    : 0.0;
    rep.recall[c] =
        tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                    : 0.0;
    rep.f1[c] = rep.precision[c] + rep.recall[c] > 0.0
                    ? 2.0 * rep.precision[c] * rep.recall[c] /
                          (rep.precision[c] + rep.recall[c])
                    : 0.0;
    if (rep.support[c] > 0) {
      ++classes_with_support;
      recall_sum += rep.recall[c];
      f1_sum += rep.f1[c];
    }
  }

  const long denominator =
      policy == RejectPolicy::CountAsError ? static_cast<long>(n) : covered;
  if (denominator > 0) {
    rep.accuracy = static_cast<double>(correct) /
                   static_cast<double>(denominator);
  }
  if (classes_with_support > 0) {
    rep.balanced_accuracy = recall_sum / classes_with_support;
    rep.macro_f1 = f1_sum / classes_with_support;
  }

  double minority_sum = 0.0;
  int minority_with_support = 0;
  for (int c : minority) {
    if (c < 0 || c >= num_classes) {
      throw DataError("minority class out of range: " + std::to_string(c));
    }
    if (rep.support[c] > 0) {
      minority_sum += rep.recall[c];
      ++minority_with_support;
    }
  }
  if (minority_with_support > 0) {
    rep.minority_recall = minority_sum / minority_with_support;
  }
  return rep;
}

std::vector<int> minority_classes(const std::vector<long>& train_counts,
                                  MinorityRule rule, double quantile) {
  const int c = static_cast<int>(train_counts.size());
  std::vector<int> out;
  if (rule == MinorityRule::BelowMeanCount) {
    const double mean =
        static_cast<double>(std::accumulate(train_counts.begin(),
                                            train_counts.end(), 0L)) /
        std::max(1, c);
    for (int i = 0; i < c; ++i) {
      if (static_cast<double>(train_counts[i]) < mean) out.push_back(i);
    }
    return out;
  }
  // BottomQuantile: the smallest floor(q*C) counts, at least one class.
  std::vector<int> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return train_counts[a] < train_counts[b];
  });
  const int take = std::max(1, static_cast<int>(quantile * c));
  out.assign(order.begin(), order.begin() + std::min(take, c));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

nlohmann::json opt_to_json(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

}  // namespace

void write_metrics_json(const EvalReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["accuracy"] = opt_to_json(report.accuracy);
  doc["balanced_accuracy"] = opt_to_json(report.balanced_accuracy);
  doc["macro_f1"] = opt_to_json(report.macro_f1);
  doc["minority_recall"] = opt_to_json(report.minority_recall);
  doc["coverage"] = report.coverage;
  doc["per_class"] = {{"precision", report.precision},
                      {"recall", report.recall},
                      {"f1", report.f1},
                      {"support", report.support},
                      {"rejected", report.rejected_per_class}};
  doc["confusion"] = report.confusion;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(1) << "\n";
}

void write_per_class_csv(const EvalReport& report,
                         const std::vector<long>& train_counts,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "class,precision,recall,f1,train_count\n";
  for (std::size_t c = 0; c < report.precision.size(); ++c) {
    out << c << "," << report.precision[c] << "," << report.recall[c] << ","
        << report.f1[c] << ","
        << (c < train_counts.size() ? train_counts[c] : 0) << "\n";
  }
}

}  // namespace pimpc
