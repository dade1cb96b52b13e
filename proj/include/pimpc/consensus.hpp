#pragma once

#include <vector>

#include "pimpc/nn.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

/// REJECT marker in decision vectors.
inline constexpr int kReject = -1;

/// Confidence-weighted fusion of the active phases plus the adaptive
/// decision machinery. Heads are only constructed for the features the
/// configuration actually uses.
class Consensus {
 public:
  struct Options {
    std::size_t d_h = 0;
    std::size_t num_classes = 0;
    /// Embedding width per active phase, in phase order.
    std::vector<std::size_t> phase_dims;
    bool use_fusion = true;
    bool use_adaptive = true;
    bool alpha_frozen = false;
    double alpha_frozen_value = 0.5;
  };

  Consensus() = default;
  Consensus(ParamRegistry& reg, Options opts);

  std::size_t num_phases() const { return opts_.phase_dims.size(); }
  bool has_fused_trunk() const { return fuse_.weight.defined(); }

  /// GELU(LN(concat(embeddings) W_fuse + b)).
  Tensor fuse(Tape& tape, const std::vector<Tensor>& embeddings) const;

  /// N-by-m simplex rows: softmax(base logits + per-node calibrations).
  /// Uniform rows when fusion is ablated.
  Tensor ensemble_weights(Tape& tape, const Tensor& h_fused,
                          std::size_t num_nodes) const;

  /// y_physics = sum_m w[:, m] * y_m (convex combination per row).
  static Tensor physics_ensemble(Tape& tape, const Tensor& weights,
                                 const std::vector<Tensor>& phase_probs);

  /// alpha * y_physics + (1 - alpha) * softmax(f_classifier(h_fused)).
  /// The scalar alpha tensor must lie in [0, 1].
  static Tensor blend(Tape& tape, const Tensor& y_physics,
                      const Tensor& neural_probs, const Tensor& alpha);

  /// The model's alpha: sigmoid of a learned scalar, or the frozen value.
  Tensor alpha(Tape& tape) const;

  Tensor neural_probs(Tape& tape, const Tensor& h_fused) const;

  /// softplus(f_weight-class([h_fused ; h0])) + 1e-6, N-by-C. All-ones
  /// when the adaptive machinery is ablated.
  Tensor class_weights(Tape& tape, const Tensor& h_fused,
                       const Tensor& h0) const;

  /// sigmoid(f_threshold([h_fused ; h0])), N-by-1. Zero when ablated.
  Tensor thresholds(Tape& tape, const Tensor& h_fused, const Tensor& h0) const;

  bool use_fusion() const { return opts_.use_fusion; }
  bool use_adaptive() const { return opts_.use_adaptive; }

  /// Starts the decision heads neutral: uniform class weights and
  /// tau = 1/2 until training (or a checkpoint) says otherwise.
  void neutralize_decision_heads();

 private:
  Options opts_;
  Linear fuse_;
  Tensor fuse_ln_gain_, fuse_ln_bias_;
  Tensor base_logits_;  // 1 x m
  std::vector<MlpHead> confidence_heads_;
  MlpHead classifier_head_;
  MlpHead weight_class_head_;
  MlpHead threshold_head_;
  Tensor alpha_raw_;  // 1 x 1
};

/// Class-weighted argmax with an optional max-probability reject test.
/// Returns kReject for withheld nodes; ties break toward the smaller
/// class index.
std::vector<int> decide(const Tensor& y_final, const Tensor& class_weights,
                        const Tensor& thresholds, bool reject_enabled);

/// Cost-sensitive Bayes threshold c_FN pi0 / (c_FN pi0 + c_FP pi1).
double bayes_threshold_oracle(double p0, double p1, double cost_fn,
                              double cost_fp);

}  // namespace pimpc
