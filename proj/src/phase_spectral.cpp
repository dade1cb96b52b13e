#include "pimpc/phase_spectral.hpp"

#include <algorithm>

#include "pimpc/errors.hpp"

namespace pimpc {

std::size_t SpectralConfig::effective_k(std::size_t num_nodes) const {
  if (num_nodes < 2) throw ConfigError("spectral phase needs >= 2 nodes");
  return std::clamp<std::size_t>(k, 1, num_nodes - 1);
}

SpectralPhase::SpectralPhase(ParamRegistry& reg, std::size_t d_in,
                             std::size_t d_h, std::size_t k,
                             std::size_t num_classes)
    : projection(reg, "spec.proj", d_in, d_h),
      encoder_head(reg, "spec.encoder", k, d_h, d_h,
                   MlpHead::Output::Identity),
      classifier_head(reg, "spec.classifier", d_h, d_h, num_classes,
                      MlpHead::Output::Identity) {}

Tensor SpectralPhase::encode(Tape& tape, const Tensor& coords) const {
  return encoder_head.forward(tape, coords);
}

Tensor SpectralPhase::readout(Tape& tape, const Tensor& z_spec) const {
  return tape.softmax_rows(classifier_head.forward(tape, z_spec));
}

Tensor SpectralPhase::consistency(Tape& tape, const Tensor& z_spec,
                                  const SparseMatrix& laplacian) {
  Tensor lz = tape.spmm(laplacian, z_spec);
  Tensor dirichlet = tape.sum(tape.mul(z_spec, lz));
  // Population variance of all entries.
  Tensor m = tape.mean(z_spec);
  Tensor m2 = tape.mean(tape.mul(z_spec, z_spec));
  Tensor var = tape.sub(m2, tape.mul(m, m));
  const double n_times_d = static_cast<double>(z_spec.size());
  Tensor denom = tape.scale(tape.add(var, Tensor::scalar(1e-8)), n_times_d);
  return tape.div(dirichlet, denom);
}

}  // namespace pimpc
