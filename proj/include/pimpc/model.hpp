#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pimpc/consensus.hpp"
#include "pimpc/graph.hpp"
#include "pimpc/loss.hpp"
#include "pimpc/nn.hpp"
#include "pimpc/optimizer.hpp"
#include "pimpc/phase_spectral.hpp"
#include "pimpc/phase_sync.hpp"
#include "pimpc/phase_thermo.hpp"
#include "pimpc/spectral.hpp"

namespace pimpc {

/// Full hyperparameter record for a run.
struct ExperimentConfig {
  std::size_t hidden_dim = 128;
  double dropout = 0.1;
  std::uint64_t seed = 17;

  /// Operator feeding the heat and spectral phases.
  LaplacianKind laplacian = LaplacianKind::Combinatorial;

  ThermoConfig heat;
  SyncConfig sync;
  SpectralConfig spectral;

  bool use_thermo = true;
  bool use_sync = true;
  bool use_spectral = true;
  bool use_fusion = true;
  bool use_adaptive = true;

  bool reject_enabled = false;
  bool alpha_frozen = false;
  double alpha_value = 0.5;

  LossConfig loss;
  OptimConfig optim;

  std::size_t active_phase_count() const {
    return (use_thermo ? 1u : 0u) + (use_sync ? 1u : 0u) +
           (use_spectral ? 1u : 0u);
  }
};

struct PhaseResult {
  Tensor h0;          // projection output
  Tensor embedding;   // U_final / Z_sync / Z_spec
  Tensor probs;       // N x C
  Tensor consistency; // scalar
};

struct ModelOutput {
  std::optional<PhaseResult> thermo;
  std::optional<PhaseResult> sync;
  std::optional<PhaseResult> spectral;
  Tensor h0_mean;
  Tensor h_fused;            // defined iff the fused trunk exists
  Tensor ensemble_weights;   // N x m over active phases
  Tensor y_physics;
  Tensor y_final;
  Tensor class_weights;      // N x C
  Tensor thresholds;         // N x 1
  std::vector<Tensor> consistencies;  // active-phase order
};

/// The full multi-phase consensus classifier. Construction registers
/// parameters for the active branches only; attach_graph precomputes
/// the operators and the (cached) eigendecomposition.
class PimpcModel {
 public:
  PimpcModel(const ExperimentConfig& config, std::size_t d_in,
             std::size_t num_classes, std::size_t num_nodes,
             ParamRegistry& registry);

  /// Glorot weights, zero biases, neutral decision heads.
  void init_params(Rng& rng);

  /// Builds Laplacians and the spectral cache. The graph must outlive
  /// the model.
  void attach_graph(const SparseGraph& graph);

  ModelOutput forward(Tape& tape, const Tensor& features, bool training,
                      Rng& rng) const;

  std::vector<int> decide(const ModelOutput& out) const;

  const ExperimentConfig& config() const { return config_; }
  const SparseMatrix& laplacian() const { return laplacian_; }
  const EigenPairs& eigenpairs() const { return eigenpairs_; }
  double lambda2() const;
  std::size_t num_classes() const { return num_classes_; }
  ParamRegistry& registry() { return *registry_; }

 private:
  ExperimentConfig config_;
  std::size_t d_in_ = 0;
  std::size_t num_classes_ = 0;
  std::size_t k_eff_ = 0;
  ParamRegistry* registry_ = nullptr;

  std::optional<ThermoPhase> thermo_;
  std::optional<SyncPhase> sync_;
  std::optional<SpectralPhase> spectral_;
  Consensus consensus_;

  const SparseGraph* graph_ = nullptr;
  SparseMatrix laplacian_;
  ThermoConfig heat_resolved_;
  EigenPairs eigenpairs_;
  Tensor coords_;
};

}  // namespace pimpc
