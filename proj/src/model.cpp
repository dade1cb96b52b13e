#include "pimpc/model.hpp"

#include <cmath>

#include "pimpc/errors.hpp"

namespace pimpc {

PimpcModel::PimpcModel(const ExperimentConfig& config, std::size_t d_in,
                       std::size_t num_classes, std::size_t num_nodes,
                       ParamRegistry& registry)
    : config_(config),
      d_in_(d_in),
      num_classes_(num_classes),
      registry_(&registry) {
  if (config_.active_phase_count() == 0) {
    throw ConfigError("at least one phase must be active");
  }
  const std::size_t d_h = config_.hidden_dim;
  k_eff_ = config_.spectral.effective_k(num_nodes);

  std::vector<std::size_t> phase_dims;
  if (config_.use_thermo) {
    thermo_.emplace(registry, d_in, d_h, num_classes);
    phase_dims.push_back(d_h);
  }
  if (config_.use_sync) {
    sync_.emplace(registry, d_in, d_h, num_classes);
    phase_dims.push_back(d_h + 3);
  }
  if (config_.use_spectral) {
    spectral_.emplace(registry, d_in, d_h, k_eff_, num_classes);
    phase_dims.push_back(d_h);
  }

  Consensus::Options copts;
  copts.d_h = d_h;
  copts.num_classes = num_classes;
  copts.phase_dims = std::move(phase_dims);
  copts.use_fusion = config_.use_fusion;
  copts.use_adaptive = config_.use_adaptive;
  copts.alpha_frozen = config_.alpha_frozen;
  copts.alpha_frozen_value = config_.alpha_value;
  consensus_ = Consensus(registry, std::move(copts));
}

void PimpcModel::init_params(Rng& rng) {
  glorot_init(*registry_, rng);
  consensus_.neutralize_decision_heads();
}

void PimpcModel::attach_graph(const SparseGraph& graph) {
  graph_ = &graph;
  laplacian_ = build_laplacian(graph, config_.laplacian);
  heat_resolved_ = config_.heat.resolved(graph, config_.laplacian);

  // lambda_2 is part of the cache even when the spectral phase is off.
  const std::size_t k_solve =
      std::max<std::size_t>(k_eff_, std::min<std::size_t>(2, graph.num_nodes()));
  EigenPairs pairs = topk_smallest_eigenpairs(laplacian_, k_solve);
  if (pairs.k() > k_eff_) {
    // Trim to the spectral phase's width.
    std::vector<double> vals(pairs.values.begin(),
                             pairs.values.begin() + k_eff_);
    std::vector<double> vecs(graph.num_nodes() * k_eff_);
    for (std::size_t i = 0; i < graph.num_nodes(); ++i)
      for (std::size_t c = 0; c < k_eff_; ++c)
        vecs[i * k_eff_ + c] = pairs.vectors(i, c);
    eigenpairs_ = pairs;  // full cache for diagnostics
    coords_ = spectral_coordinates(
        EigenPairs{std::move(vals),
                   Tensor::from_values({graph.num_nodes(), k_eff_},
                                       std::move(vecs))},
        config_.spectral.mode);
  } else {
    eigenpairs_ = pairs;
    coords_ = spectral_coordinates(pairs, config_.spectral.mode);
  }
}

double PimpcModel::lambda2() const {
  if (eigenpairs_.k() < 2) {
    throw ConfigError("eigen cache too small for lambda_2");
  }
  return eigenpairs_.values[1];
}

ModelOutput PimpcModel::forward(Tape& tape, const Tensor& features,
                                bool training, Rng& rng) const {
  if (graph_ == nullptr) {
    throw ConfigError("attach_graph must be called before forward");
  }
  if (features.rows() != graph_->num_nodes() || features.cols() != d_in_) {
    throw ShapeMismatchError("features " + features.shape().str() +
                             " do not match model (" +
                             std::to_string(graph_->num_nodes()) + "x" +
                             std::to_string(d_in_) + ")");
  }
  const double p_drop = config_.dropout;
  ModelOutput out;
  std::vector<Tensor> embeddings;
  std::vector<Tensor> phase_probs;
  std::vector<Tensor> h0s;

  if (config_.use_thermo) {
    PhaseResult r;
    r.h0 = thermo_->projection.forward(tape, features, p_drop, training, rng);
    Tensor sources = thermo_->generate_sources(tape, r.h0);
    Tensor field = ThermoPhase::init_field(tape, r.h0, sources);
    r.embedding =
        ThermoPhase::diffuse(tape, field, laplacian_, sources, heat_resolved_);
    r.probs = thermo_->readout(tape, r.embedding);
    r.consistency =
        ThermoPhase::consistency(tape, r.embedding, laplacian_, sources);
    embeddings.push_back(r.embedding);
    phase_probs.push_back(r.probs);
    h0s.push_back(r.h0);
    out.consistencies.push_back(r.consistency);
    out.thermo = std::move(r);
  }
  if (config_.use_sync) {
    PhaseResult r;
    r.h0 = sync_->projection.forward(tape, features, p_drop, training, rng);
    Tensor omega = sync_->learn_frequencies(tape, r.h0);
    Tensor theta0 = SyncPhase::initial_phases(graph_->num_nodes(), config_.sync);
    Tensor theta =
        SyncPhase::integrate_phases(tape, theta0, omega, *graph_, config_.sync);
    r.embedding = SyncPhase::encode(tape, r.h0, theta, omega);
    r.probs = sync_->readout(tape, r.embedding);
    r.consistency = SyncPhase::consistency(tape, theta);
    embeddings.push_back(r.embedding);
    phase_probs.push_back(r.probs);
    h0s.push_back(r.h0);
    out.consistencies.push_back(r.consistency);
    out.sync = std::move(r);
  }
  if (config_.use_spectral) {
    PhaseResult r;
    r.h0 = spectral_->projection.forward(tape, features, p_drop, training, rng);
    r.embedding = spectral_->encode(tape, coords_);
    r.probs = spectral_->readout(tape, r.embedding);
    r.consistency = SpectralPhase::consistency(tape, r.embedding, laplacian_);
    embeddings.push_back(r.embedding);
    phase_probs.push_back(r.probs);
    h0s.push_back(r.h0);
    out.consistencies.push_back(r.consistency);
    out.spectral = std::move(r);
  }

  // H0: elementwise mean of the active projections.
  Tensor h0_acc = h0s[0];
  for (std::size_t i = 1; i < h0s.size(); ++i) h0_acc = tape.add(h0_acc, h0s[i]);
  out.h0_mean = tape.scale(h0_acc, 1.0 / static_cast<double>(h0s.size()));

  if (consensus_.has_fused_trunk()) {
    out.h_fused = consensus_.fuse(tape, embeddings);
  }
  out.ensemble_weights =
      consensus_.ensemble_weights(tape, out.h_fused, graph_->num_nodes());
  out.y_physics =
      Consensus::physics_ensemble(tape, out.ensemble_weights, phase_probs);

  if (config_.use_fusion) {
    Tensor alpha = consensus_.alpha(tape);
    Tensor neural = consensus_.neural_probs(tape, out.h_fused);
    out.y_final = Consensus::blend(tape, out.y_physics, neural, alpha);
  } else {
    out.y_final = out.y_physics;
  }

  out.class_weights = consensus_.class_weights(tape, out.h_fused, out.h0_mean);
  out.thresholds = consensus_.thresholds(tape, out.h_fused, out.h0_mean);
  return out;
}

std::vector<int> PimpcModel::decide(const ModelOutput& out) const {
  return pimpc::decide(out.y_final, out.class_weights, out.thresholds,
                       config_.reject_enabled);
}

}  // namespace pimpc
