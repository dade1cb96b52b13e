#include "pimpc/phase_sync.hpp"

#include <cmath>

#include "pimpc/errors.hpp"
#include "pimpc/rng.hpp"

namespace pimpc {

SyncPhase::SyncPhase(ParamRegistry& reg, std::size_t d_in, std::size_t d_h,
                     std::size_t num_classes)
    : projection(reg, "sync.proj", d_in, d_h),
      freq_head(reg, "sync.freq", d_h, d_h, 1, MlpHead::Output::Tanh),
      classifier_head(reg, "sync.classifier", d_h + 3, d_h, num_classes,
                      MlpHead::Output::Identity) {}

Tensor SyncPhase::learn_frequencies(Tape& tape, const Tensor& h0) const {
  return freq_head.forward(tape, h0);
}

Tensor SyncPhase::initial_phases(std::size_t num_nodes,
                                 const SyncConfig& config) {
  if (config.phase_init == PhaseInit::Zero) {
    return Tensor::zeros({num_nodes, 1});
  }
  Rng rng(config.init_seed);
  std::vector<double> theta(num_nodes);
  for (double& t : theta) t = rng.uniform(-M_PI, M_PI);
  return Tensor::column(std::move(theta));
}

Tensor SyncPhase::integrate_phases(Tape& tape, const Tensor& theta0,
                                   const Tensor& omega,
                                   const SparseGraph& graph,
                                   const SyncConfig& config) {
  const std::size_t n = graph.num_nodes();
  if (theta0.rows() != n || theta0.cols() != 1 || omega.rows() != n ||
      omega.cols() != 1) {
    throw ShapeMismatchError("integrate_phases: theta " + theta0.shape().str() +
                             ", omega " + omega.shape().str() + " for " +
                             std::to_string(n) + " nodes");
  }
  // Per-node coupling gain K/|N_i| (isolated nodes get no coupling and
  // drift at their natural frequency).
  std::vector<double> gain(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int deg = graph.degree(static_cast<int>(i));
    gain[i] = config.normalize_coupling
                  ? (deg > 0 ? config.coupling / deg : 0.0)
                  : config.coupling;
  }
  Tensor gain_col = Tensor::column(std::move(gain));
  const SparseMatrix& adj = graph.adjacency();

  Tensor theta = theta0;
  Tensor dt_omega = tape.scale(omega, config.dt);
  for (int t = 0; t < config.steps; ++t) {
    // sum_j A_ij sin(theta_j - theta_i)
    //   = cos(theta_i) (A sin theta)_i - sin(theta_i) (A cos theta)_i.
    Tensor sin_t = tape.sin(theta);
    Tensor cos_t = tape.cos(theta);
    Tensor a_sin = tape.spmm(adj, sin_t);
    Tensor a_cos = tape.spmm(adj, cos_t);
    Tensor coupling = tape.sub(tape.mul(cos_t, a_sin), tape.mul(sin_t, a_cos));
    Tensor drive = tape.add(dt_omega,
                            tape.scale(tape.mul(coupling, gain_col), config.dt));
    theta = tape.add(theta, drive);
  }
  return theta;
}

Tensor SyncPhase::encode(Tape& tape, const Tensor& h0, const Tensor& theta,
                         const Tensor& omega) {
  if (h0.rows() != theta.rows() || h0.rows() != omega.rows()) {
    throw ShapeMismatchError("sync encode: rows " + h0.shape().str() + ", " +
                             theta.shape().str() + ", " + omega.shape().str());
  }
  return tape.concat_cols({h0, tape.cos(theta), tape.sin(theta), omega});
}

Tensor SyncPhase::readout(Tape& tape, const Tensor& encoding) const {
  return tape.softmax_rows(classifier_head.forward(tape, encoding));
}

Tensor SyncPhase::consistency(Tape& tape, const Tensor& theta) {
  Tensor r = tape.kuramoto_order(theta);
  return tape.sub(Tensor::scalar(1.0), r);
}

std::pair<double, double> order_parameter(std::span<const double> theta) {
  double c = 0.0, s = 0.0;
  for (double t : theta) {
    c += std::cos(t);
    s += std::sin(t);
  }
  c /= static_cast<double>(theta.size());
  s /= static_cast<double>(theta.size());
  return {std::sqrt(c * c + s * s), std::atan2(s, c)};
}

double critical_coupling(std::span<const double> omega, double lambda2) {
  if (lambda2 <= 1e-12) {
    throw DisconnectedGraphError(
        "critical coupling needs lambda_2 > 0 (connected graph)");
  }
  double lo = omega[0], hi = omega[0];
  for (double w : omega) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  return 2.0 * (hi - lo) / lambda2;
}

}  // namespace pimpc
