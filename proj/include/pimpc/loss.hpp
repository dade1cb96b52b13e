#pragma once

#include <vector>

#include "pimpc/tensor.hpp"

namespace pimpc {

enum class ClassBalance { InverseFrequency, EffectiveNumber, Off };

struct LossConfig {
  double lambda_class = 1.0;
  double lambda_physics = 1.0;
  double focal_gamma = 2.5;
  ClassBalance class_balance = ClassBalance::InverseFrequency;
  /// b in (1 - b) / (1 - b^n) for the EffectiveNumber scheme.
  double effective_number_beta = 0.999;
  /// Coefficient of the ensemble-weight entropy regularizer (off at 0).
  double lambda_entropy = 0.0;
};

/// Per-class weights from training-mask counts. InverseFrequency gives
/// N_train / (C * count_c); EffectiveNumber gives (1-b)/(1-b^count)
/// normalized to sum to C over the present classes. Absent classes get
/// weight 0 (unused) and a stderr warning.
std::vector<double> class_balance_weights(const std::vector<int>& labels,
                                          const std::vector<int>& train_index,
                                          int num_classes,
                                          const LossConfig& config);

/// Mean over masked nodes of beta_{y_i} (1 - p_i)^gamma (-log p_i) with
/// probabilities clamped to [1e-12, 1].
Tensor class_balanced_focal_ce(Tape& tape, const Tensor& y_final,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_index,
                               int num_classes, const LossConfig& config);

/// lambda_class * class_loss
///   + lambda_physics * sum_m mean-weight_m * consistency_m
///   + lambda_entropy * sum_m w_m log w_m (mean weights).
Tensor total_loss(Tape& tape, const Tensor& class_loss,
                  const std::vector<Tensor>& consistencies,
                  const Tensor& ensemble_weights, const LossConfig& config);

}  // namespace pimpc
