#pragma once

#include "pimpc/graph.hpp"
#include "pimpc/nn.hpp"
#include "pimpc/sparse.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

enum class Integrator { ExplicitEuler, ImplicitEulerCG };

struct ThermoConfig {
  int steps = 25;
  double conductivity = 1.0;
  /// Step size; <= 0 selects 0.9 * (2 / lambda_max bound) / conductivity
  /// for the explicit scheme and 0.1 for the implicit one.
  double dt = 0.0;
  Integrator integrator = Integrator::ExplicitEuler;
  /// Add dt * S every step (otherwise sources act only through the
  /// initial field).
  bool per_step_source = false;
  double cg_tolerance = 1e-8;
  int cg_max_iter = 500;

  /// Spectral-radius bound for stability checks: 2 * max degree for the
  /// combinatorial Laplacian, 2 for the degree-normalized kinds.
  static double lambda_max_bound(const SparseGraph& graph, LaplacianKind kind);
  /// Materializes dt and validates the explicit stability condition
  /// dt * kappa < 2 / lambda_max.
  ThermoConfig resolved(const SparseGraph& graph, LaplacianKind kind) const;
};

/// Learned heat-diffusion branch.
struct ThermoPhase {
  PhaseProjection projection;
  MlpHead source_head;      // D_h -> 1, softplus output
  MlpHead classifier_head;  // D_h -> C

  ThermoPhase() = default;
  ThermoPhase(ParamRegistry& reg, std::size_t d_in, std::size_t d_h,
              std::size_t num_classes);

  /// S = softplus(f_source(h0)) > 0, N-by-1.
  Tensor generate_sources(Tape& tape, const Tensor& h0) const;

  /// U0 = h0 * S (source broadcast across columns).
  static Tensor init_field(Tape& tape, const Tensor& h0, const Tensor& sources);

  /// Runs the configured integrator for config.steps steps. `config`
  /// must already be resolved against the graph.
  static Tensor diffuse(Tape& tape, const Tensor& field,
                        const SparseMatrix& laplacian, const Tensor& sources,
                        const ThermoConfig& config);

  /// softmax(f_heat-classifier(U_final)).
  Tensor readout(Tape& tape, const Tensor& field) const;

  /// Mean squared equilibrium residual ||L U - S 1^T||_F^2 / (N D_h).
  static Tensor consistency(Tape& tape, const Tensor& field,
                            const SparseMatrix& laplacian,
                            const Tensor& sources);
};

}  // namespace pimpc
