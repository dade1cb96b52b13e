#pragma once

#include "pimpc/nn.hpp"
#include "pimpc/spectral.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

struct SpectralConfig {
  std::size_t k = 16;
  CoordinateMode mode = CoordinateMode::EigenvectorRows;

  /// k clamped to [1, num_nodes - 1] for tiny graphs.
  std::size_t effective_k(std::size_t num_nodes) const;
};

/// Spectral embedding branch. The eigendecomposition is a constant on
/// the tape; gradients flow through the encoder and classifier only.
struct SpectralPhase {
  PhaseProjection projection;  // feeds the consensus H0 mean
  MlpHead encoder_head;        // k -> D_h
  MlpHead classifier_head;     // D_h -> C

  SpectralPhase() = default;
  SpectralPhase(ParamRegistry& reg, std::size_t d_in, std::size_t d_h,
                std::size_t k, std::size_t num_classes);

  /// Z_spec = f_spec-encoder(coords).
  Tensor encode(Tape& tape, const Tensor& coords) const;

  Tensor readout(Tape& tape, const Tensor& z_spec) const;

  /// trace(Z^T L Z) / (N * D_h * (var(Z) + 1e-8)): scale-invariant
  /// Dirichlet smoothness of the embedding.
  static Tensor consistency(Tape& tape, const Tensor& z_spec,
                            const SparseMatrix& laplacian);
};

}  // namespace pimpc
