#include "pimpc/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pimpc/errors.hpp"

namespace pimpc {

Consensus::Consensus(ParamRegistry& reg, Options opts) : opts_(std::move(opts)) {
  const std::size_t d_h = opts_.d_h;
  const std::size_t m = opts_.phase_dims.size();
  if (m == 0) throw ConfigError("consensus needs at least one phase");

  const bool need_trunk = opts_.use_fusion || opts_.use_adaptive;
  if (need_trunk) {
    const std::size_t concat_dim = std::accumulate(
        opts_.phase_dims.begin(), opts_.phase_dims.end(), std::size_t{0});
    fuse_ = Linear(reg, "consensus.fuse", concat_dim, d_h);
    fuse_ln_gain_ = reg.create("consensus.fuse.ln_gain", {1, d_h});
    fuse_ln_bias_ = reg.create("consensus.fuse.ln_bias", {1, d_h});
  }
  if (opts_.use_fusion) {
    base_logits_ = reg.create("consensus.base_logits", {1, m});
    confidence_heads_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      confidence_heads_.emplace_back(reg,
                                     "consensus.conf" + std::to_string(i), d_h,
                                     d_h, 1, MlpHead::Output::Identity);
    }
    classifier_head_ = MlpHead(reg, "consensus.classifier", d_h, d_h,
                               opts_.num_classes, MlpHead::Output::Identity);
    if (!opts_.alpha_frozen) {
      alpha_raw_ = reg.create("consensus.alpha_raw", {1, 1});
    }
  }
  if (opts_.use_adaptive) {
    weight_class_head_ = MlpHead(reg, "consensus.weight_class", 2 * d_h, d_h,
                                 opts_.num_classes, MlpHead::Output::Identity);
    threshold_head_ = MlpHead(reg, "consensus.threshold", 2 * d_h, d_h, 1,
                              MlpHead::Output::Sigmoid);
  }
}

Tensor Consensus::fuse(Tape& tape, const std::vector<Tensor>& embeddings) const {
  if (!has_fused_trunk()) {
    throw ConfigError("fusion trunk not constructed in this configuration");
  }
  Tensor cat = tape.concat_cols(embeddings);
  Tensor pre = fuse_.forward(tape, cat);
  return tape.gelu(tape.layer_norm(pre, fuse_ln_gain_, fuse_ln_bias_));
}

Tensor Consensus::ensemble_weights(Tape& tape, const Tensor& h_fused,
                                   std::size_t num_nodes) const {
  const std::size_t m = num_phases();
  if (!opts_.use_fusion) {
    return Tensor::full({num_nodes, m}, 1.0 / static_cast<double>(m));
  }
  std::vector<Tensor> calibrations;
  calibrations.reserve(m);
  for (const MlpHead& head : confidence_heads_) {
    calibrations.push_back(head.forward(tape, h_fused));
  }
  Tensor eps = tape.concat_cols(calibrations);       // N x m
  Tensor logits = tape.add_rowvec(eps, base_logits_);  // + global p
  return tape.softmax_rows(logits);
}

Tensor Consensus::physics_ensemble(Tape& tape, const Tensor& weights,
                                   const std::vector<Tensor>& phase_probs) {
  if (weights.cols() != phase_probs.size()) {
    throw ShapeMismatchError("physics_ensemble: " +
                             std::to_string(phase_probs.size()) +
                             " phases vs weights " + weights.shape().str());
  }
  Tensor acc;
  for (std::size_t m = 0; m < phase_probs.size(); ++m) {
    Tensor w_col = tape.slice_cols(weights, m, 1);
    Tensor term = tape.mul_colvec(phase_probs[m], w_col);
    acc = m == 0 ? term : tape.add(acc, term);
  }
  return acc;
}

Tensor Consensus::blend(Tape& tape, const Tensor& y_physics,
                        const Tensor& neural_probs, const Tensor& alpha) {
  if (!alpha.is_scalar()) {
    throw ShapeMismatchError("blend: alpha must be scalar");
  }
  const double a = alpha.values()[0];
  if (a < 0.0 || a > 1.0) {
    throw ConfigError("blend: alpha " + std::to_string(a) +
                      " outside [0, 1]");
  }
  Tensor one_minus = tape.sub(Tensor::scalar(1.0), alpha);
  return tape.add(tape.mul_scalar(y_physics, alpha),
                  tape.mul_scalar(neural_probs, one_minus));
}

Tensor Consensus::alpha(Tape& tape) const {
  if (opts_.alpha_frozen || !opts_.use_fusion) {
    return Tensor::scalar(opts_.use_fusion ? opts_.alpha_frozen_value : 1.0);
  }
  return tape.sigmoid(alpha_raw_);
}

Tensor Consensus::neural_probs(Tape& tape, const Tensor& h_fused) const {
  return tape.softmax_rows(classifier_head_.forward(tape, h_fused));
}

Tensor Consensus::class_weights(Tape& tape, const Tensor& h_fused,
                                const Tensor& h0) const {
  if (!opts_.use_adaptive) {
    return Tensor::full({h0.rows(), opts_.num_classes}, 1.0);
  }
  Tensor input = tape.concat_cols({h_fused, h0});
  Tensor raw = weight_class_head_.forward(tape, input);
  Tensor pos = tape.softplus(raw);
  return tape.add(pos, Tensor::full(pos.shape(), 1e-6));
}

Tensor Consensus::thresholds(Tape& tape, const Tensor& h_fused,
                             const Tensor& h0) const {
  if (!opts_.use_adaptive) {
    return Tensor::zeros({h0.rows(), 1});
  }
  Tensor input = tape.concat_cols({h_fused, h0});
  return threshold_head_.forward(tape, input);
}

void Consensus::neutralize_decision_heads() {
  if (!opts_.use_adaptive) return;
  for (Tensor t : {weight_class_head_.second.weight,
                   weight_class_head_.second.bias,
                   threshold_head_.second.weight, threshold_head_.second.bias}) {
    std::fill(t.values().begin(), t.values().end(), 0.0);
  }
}

std::vector<int> decide(const Tensor& y_final, const Tensor& class_weights,
                        const Tensor& thresholds, bool reject_enabled) {
  const std::size_t n = y_final.rows(), c = y_final.cols();
  if (class_weights.rows() != n || class_weights.cols() != c ||
      thresholds.rows() != n || thresholds.cols() != 1) {
    throw ShapeMismatchError("decide: probs " + y_final.shape().str() +
                             ", weights " + class_weights.shape().str() +
                             ", thresholds " + thresholds.shape().str());
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_score = class_weights(i, 0) * y_final(i, 0);
    double max_prob = y_final(i, 0);
    for (std::size_t j = 1; j < c; ++j) {
      const double score = class_weights(i, j) * y_final(i, j);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
      max_prob = std::max(max_prob, y_final(i, j));
    }
    // The reject test uses the unweighted probabilities.
    labels[i] = (reject_enabled && max_prob <= thresholds(i, 0)) ? kReject
                                                                 : best;
  }
  return labels;
}

double bayes_threshold_oracle(double p0, double p1, double cost_fn,
                              double cost_fp) {
  if (cost_fn <= 0.0 || cost_fp <= 0.0) {
    throw ConfigError("bayes threshold: costs must be positive");
  }
  if (std::abs(p0 + p1 - 1.0) > 1e-9) {
    throw ConfigError("bayes threshold: priors must sum to 1");
  }
  return cost_fn * p0 / (cost_fn * p0 + cost_fp * p1);
}

}  // namespace pimpc
