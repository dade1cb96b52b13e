#include "pimpc/optimizer.hpp"

#include <cmath>

#include "pimpc/errors.hpp"

namespace pimpc {

AdamW::AdamW(ParamRegistry& registry, const OptimConfig& config)
    : registry_(&registry), config_(config) {
  if (config.learning_rate <= 0.0) {
    throw ConfigError("learning rate must be positive");
  }
  if (config.patience < 1) throw ConfigError("patience must be >= 1");
  m_.reserve(registry.items().size());
  v_.reserve(registry.items().size());
  for (const auto& [name, t] : registry.items()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

double AdamW::clip_gradients() {
  double sq = 0.0;
  for (auto& [name, t] : registry_->items()) {
    if (!t.requires_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (config_.clip_norm > 0.0 && norm > config_.clip_norm) {
    const double scale = config_.clip_norm / norm;
    for (auto& [name, t] : registry_->items()) {
      if (!t.requires_grad()) continue;
      for (double& g : t.grad()) g *= scale;
    }
  }
  return norm;
}

double AdamW::lr_at(int epoch) const {
  if (config_.schedule == LrSchedule::Constant) return config_.learning_rate;
  const double progress =
      config_.epochs > 0
          ? static_cast<double>(epoch) / static_cast<double>(config_.epochs)
          : 0.0;
  return config_.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

void AdamW::step(int epoch) {
  const double lr = lr_at(epoch);
  ++step_count_;
  const double bc1 = 1.0 - std::pow(config_.beta1, step_count_);
  const double bc2 = 1.0 - std::pow(config_.beta2, step_count_);
  auto& items = registry_->items();
  for (std::size_t p = 0; p < items.size(); ++p) {
    Tensor& t = items[p].second;
    if (!t.requires_grad()) continue;
    auto& values = t.values();
    const auto& grads = t.grad();
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grads[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * (mhat / (std::sqrt(vhat) + config_.eps) +
                         config_.weight_decay * values[i]);
    }
  }
}

}  // namespace pimpc
