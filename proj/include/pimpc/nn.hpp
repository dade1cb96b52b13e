#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pimpc/rng.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

/// Owns every trainable tensor under a unique name with deterministic
/// iteration order (insertion order), which the optimizer relies on.
class ParamRegistry {
 public:
  Tensor create(const std::string& name, Shape shape,
                bool requires_grad = true);
  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;

  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor>>& items() const {
    return items_;
  }

  std::size_t total_parameters() const;
  void zero_grad();

  /// Snapshot / restore raw values (used for best-epoch checkpoints).
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& snap);

  /// Versioned JSON checkpoint with shape metadata.
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

/// Glorot-uniform weights, zero biases. Tensors whose name ends in
/// ".bias", ".ln_gain", ".ln_bias" or that were created by the blocks
/// below follow their block-specific conventions.
void glorot_init(ParamRegistry& registry, Rng& rng);

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  Linear() = default;
  Linear(ParamRegistry& reg, const std::string& name, std::size_t in,
         std::size_t out);

  Tensor forward(Tape& tape, const Tensor& x) const;
  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

/// Two-layer head: Linear -> GELU -> Linear -> output activation.
struct MlpHead {
  enum class Output { Identity, Softplus, Tanh, Sigmoid };

  Linear first;
  Linear second;
  Output output = Output::Identity;

  MlpHead() = default;
  MlpHead(ParamRegistry& reg, const std::string& name, std::size_t in,
          std::size_t hidden, std::size_t out, Output activation);

  Tensor forward(Tape& tape, const Tensor& x) const;
};

/// Phase-specific input block: Dropout(GELU(LayerNorm(x W + b))).
struct PhaseProjection {
  Linear lin;
  Tensor ln_gain;  // 1 x out, init 1
  Tensor ln_bias;  // 1 x out, init 0

  PhaseProjection() = default;
  PhaseProjection(ParamRegistry& reg, const std::string& name, std::size_t in,
                  std::size_t out);

  Tensor forward(Tape& tape, const Tensor& x, double dropout_p, bool training,
                 Rng& rng) const;
};

}  // namespace pimpc
