#pragma once

#include <cstdint>
#include <vector>

#include "pimpc/nn.hpp"

namespace pimpc {

enum class LrSchedule { Cosine, Constant };

struct OptimConfig {
  double learning_rate = 5e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm cap; <= 0 disables clipping.
  double clip_norm = 1.0;
  int epochs = 300;
  int patience = 30;
  LrSchedule schedule = LrSchedule::Cosine;
  std::uint64_t seed = 17;
  /// Restore the best-on-validation snapshot after training.
  bool restore_best = true;
};

/// AdamW with decoupled weight decay and bias-corrected moments.
class AdamW {
 public:
  AdamW(ParamRegistry& registry, const OptimConfig& config);

  /// Scales every gradient by clip_norm / ||g|| when the global norm
  /// exceeds the cap; returns the pre-clip norm.
  double clip_gradients();

  /// One update using the schedule's learning rate for `epoch`.
  void step(int epoch);

  double lr_at(int epoch) const;

 private:
  ParamRegistry* registry_;
  OptimConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_count_ = 0;
};

}  // namespace pimpc
