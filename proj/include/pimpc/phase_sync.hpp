#pragma once

#include <utility>

#include "pimpc/graph.hpp"
#include "pimpc/nn.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

enum class PhaseInit { Zero, SeededUniform };

struct SyncConfig {
  int steps = 50;
  double coupling = 1.0;
  double dt = 0.1;
  PhaseInit phase_init = PhaseInit::Zero;
  std::uint64_t init_seed = 0;
  /// Divide the coupling sum by |N_i| (the discrete update). The
  /// unnormalized form matches the critical-coupling analysis.
  bool normalize_coupling = true;
};

/// Learned Kuramoto oscillator branch.
struct SyncPhase {
  PhaseProjection projection;
  MlpHead freq_head;        // D_h -> 1, tanh output
  MlpHead classifier_head;  // (D_h + 3) -> C

  SyncPhase() = default;
  SyncPhase(ParamRegistry& reg, std::size_t d_in, std::size_t d_h,
            std::size_t num_classes);

  /// omega = tanh(f_freq(h0)) in (-1, 1), N-by-1.
  Tensor learn_frequencies(Tape& tape, const Tensor& h0) const;

  /// Initial phases per config (constant on the tape).
  static Tensor initial_phases(std::size_t num_nodes, const SyncConfig& config);

  /// Explicit Euler phase dynamics; returns theta after config.steps.
  static Tensor integrate_phases(Tape& tape, const Tensor& theta0,
                                 const Tensor& omega, const SparseGraph& graph,
                                 const SyncConfig& config);

  /// [h0 ; cos theta ; sin theta ; omega], N-by-(D_h + 3).
  static Tensor encode(Tape& tape, const Tensor& h0, const Tensor& theta,
                       const Tensor& omega);

  Tensor readout(Tape& tape, const Tensor& encoding) const;

  /// 1 - r(theta): zero at perfect synchrony.
  static Tensor consistency(Tape& tape, const Tensor& theta);
};

/// (r, mean phase) of a phase configuration.
std::pair<double, double> order_parameter(std::span<const double> theta);

/// K_c = 2 (omega_max - omega_min) / lambda_2; lambda_2 must be positive
/// (connected graph).
double critical_coupling(std::span<const double> omega, double lambda2);

}  // namespace pimpc
