#include "pimpc/loss.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "pimpc/errors.hpp"

namespace pimpc {

std::vector<double> class_balance_weights(const std::vector<int>& labels,
                                          const std::vector<int>& train_index,
                                          int num_classes,
                                          const LossConfig& config) {
  if (train_index.empty()) throw DataError("empty training mask");
  std::vector<long> counts(num_classes, 0);
  for (int i : train_index) {
    if (i < 0 || static_cast<std::size_t>(i) >= labels.size()) {
      throw IndexOutOfRangeError("training index " + std::to_string(i));
    }
    ++counts[labels[i]];
  }
  std::vector<double> beta(num_classes, 0.0);
  const double n_train = static_cast<double>(train_index.size());
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) ++present;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      std::cerr << "warning: class " << c
                << " absent from the training mask; its weight is unused\n";
      continue;
    }
    switch (config.class_balance) {
      case ClassBalance::Off:
        beta[c] = 1.0;
        break;
      case ClassBalance::InverseFrequency:
        beta[c] = n_train / (static_cast<double>(num_classes) *
                             static_cast<double>(counts[c]));
        break;
      case ClassBalance::EffectiveNumber: {
        const double b = config.effective_number_beta;
        beta[c] = (1.0 - b) /
                  (1.0 - std::pow(b, static_cast<double>(counts[c])));
        break;
      }
    }
  }
  if (config.class_balance == ClassBalance::EffectiveNumber) {
    double sum = 0.0;
    for (double w : beta) sum += w;
    if (sum > 0.0) {
      const double scale = static_cast<double>(present) / sum;
      for (double& w : beta) w *= scale;
    }
  }
  return beta;
}

Tensor class_balanced_focal_ce(Tape& tape, const Tensor& y_final,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_index,
                               int num_classes, const LossConfig& config) {
  if (train_index.empty()) throw DataError("empty training mask");
  const std::vector<double> beta =
      class_balance_weights(labels, train_index, num_classes, config);

  std::vector<int> masked_labels(train_index.size());
  std::vector<double> node_weights(train_index.size());
  for (std::size_t i = 0; i < train_index.size(); ++i) {
    masked_labels[i] = labels[train_index[i]];
    node_weights[i] = beta[masked_labels[i]];
  }

  Tensor probs = tape.take_rows(y_final, train_index);
  Tensor p = tape.clamp(tape.gather_cols(probs, masked_labels), 1e-12, 1.0);
  Tensor nll = tape.scale(tape.log(p), -1.0);
  Tensor focal = tape.pow_const(
      tape.sub(Tensor::full(p.shape(), 1.0), p), config.focal_gamma);
  Tensor weighted = tape.mul(tape.mul(Tensor::column(std::move(node_weights)),
                                      focal),
                             nll);
  return tape.mean(weighted);
}

Tensor total_loss(Tape& tape, const Tensor& class_loss,
                  const std::vector<Tensor>& consistencies,
                  const Tensor& ensemble_weights, const LossConfig& config) {
  if (config.lambda_class < 0.0 || config.lambda_physics < 0.0) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (config.lambda_class == 0.0 && config.lambda_physics == 0.0) {
    throw ConfigError("at least one of lambda_class/lambda_physics must be "
                      "positive");
  }
  if (consistencies.size() != ensemble_weights.cols()) {
    throw ShapeMismatchError("total_loss: " +
                             std::to_string(consistencies.size()) +
                             " consistencies vs weights " +
                             ensemble_weights.shape().str());
  }
  Tensor loss = tape.scale(class_loss, config.lambda_class);
  if (config.lambda_physics > 0.0) {
    Tensor mean_w = tape.mean_rows(ensemble_weights);  // 1 x m
    for (std::size_t m = 0; m < consistencies.size(); ++m) {
      Tensor w_m = tape.slice_cols(mean_w, m, 1);
      Tensor term = tape.mul(w_m, consistencies[m]);
      loss = tape.add(loss, tape.scale(term, config.lambda_physics));
    }
  }
  if (config.lambda_entropy != 0.0) {
    Tensor mean_w = tape.mean_rows(ensemble_weights);
    Tensor reg = tape.sum(tape.mul(mean_w, tape.log(mean_w)));
    loss = tape.add(loss, tape.scale(reg, config.lambda_entropy));
  }
  return loss;
}

}  // namespace pimpc
