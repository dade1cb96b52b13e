#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pimpc {

enum class RejectPolicy { ExcludeAndReportCoverage, CountAsError };
enum class MinorityRule { BelowMeanCount, BottomQuantile };

struct EvalReport {
  /// Rates are null when the support is empty (e.g. everything
  /// rejected under the exclude policy).
  std::optional<double> accuracy;
  std::optional<double> balanced_accuracy;
  std::optional<double> macro_f1;
  std::optional<double> minority_recall;
  std::vector<double> precision;  // per class; 0 on zero division
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<long> support;             // true counts in the eval set
  std::vector<std::vector<long>> confusion;  // covered nodes only
  std::vector<long> rejected_per_class;
  double coverage = 1.0;
};

/// Predictions use -1 for rejected nodes.
EvalReport evaluate(std::span<const int> labels_true,
                    std::span<const int> labels_pred,
                    const std::vector<int>& minority_classes,
                    RejectPolicy policy, int num_classes);

/// BelowMeanCount: classes with training count strictly below the mean.
/// BottomQuantile: the floor(q * C) classes with the smallest counts
/// (at least one).
std::vector<int> minority_classes(const std::vector<long>& train_counts,
                                  MinorityRule rule = MinorityRule::BelowMeanCount,
                                  double quantile = 0.25);

void write_metrics_json(const EvalReport& report, const std::string& path);
void write_per_class_csv(const EvalReport& report,
                         const std::vector<long>& train_counts,
                         const std::string& path);

}  // namespace pimpc
