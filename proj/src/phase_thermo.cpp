#include "pimpc/phase_thermo.hpp"

#include <cmath>
#include <string>

#include "pimpc/errors.hpp"

namespace pimpc {

double ThermoConfig::lambda_max_bound(const SparseGraph& graph,
                                      LaplacianKind kind) {
  if (kind == LaplacianKind::Combinatorial) {
    return 2.0 * std::max(1, graph.max_degree());
  }
  return 2.0;
}

ThermoConfig ThermoConfig::resolved(const SparseGraph& graph,
                                    LaplacianKind kind) const {
  ThermoConfig out = *this;
  if (out.steps < 0) throw ConfigError("negative diffusion step count");
  if (out.conductivity <= 0.0) {
    throw ConfigError("conductivity must be positive");
  }
  const double bound = lambda_max_bound(graph, kind);
  if (out.dt <= 0.0) {
    out.dt = out.integrator == Integrator::ExplicitEuler
                 ? 0.9 * (2.0 / bound) / out.conductivity
                 : 0.1;
  }
  if (out.integrator == Integrator::ExplicitEuler &&
      out.dt * out.conductivity >= 2.0 / bound) {
    throw ConfigError("explicit Euler unstable: dt*kappa = " +
                      std::to_string(out.dt * out.conductivity) +
                      " >= 2/lambda_max = " + std::to_string(2.0 / bound));
  }
  return out;
}

ThermoPhase::ThermoPhase(ParamRegistry& reg, std::size_t d_in, std::size_t d_h,
                         std::size_t num_classes)
    : projection(reg, "thermo.proj", d_in, d_h),
      source_head(reg, "thermo.source", d_h, d_h, 1, MlpHead::Output::Softplus),
      classifier_head(reg, "thermo.classifier", d_h, d_h, num_classes,
                      MlpHead::Output::Identity) {}

Tensor ThermoPhase::generate_sources(Tape& tape, const Tensor& h0) const {
  return source_head.forward(tape, h0);
}

Tensor ThermoPhase::init_field(Tape& tape, const Tensor& h0,
                               const Tensor& sources) {
  return tape.mul_colvec(h0, sources);
}

Tensor ThermoPhase::diffuse(Tape& tape, const Tensor& field,
                            const SparseMatrix& laplacian,
                            const Tensor& sources,
                            const ThermoConfig& config) {
  const double dtk = config.dt * config.conductivity;
  Tensor u = field;
  double initial_norm = 0.0;
  for (double v : u.values()) initial_norm += v * v;

  if (config.integrator == Integrator::ExplicitEuler) {
    for (int t = 0; t < config.steps; ++t) {
      Tensor lu = tape.spmm(laplacian, u);
      u = tape.sub(u, tape.scale(lu, dtk));
      if (config.per_step_source) {
        u = tape.add(u, tape.mul_colvec(
                            Tensor::full({u.rows(), u.cols()}, config.dt),
                            sources));
      }
    }
    double final_norm = 0.0;
    for (double v : u.values()) final_norm += v * v;
    if (!std::isfinite(final_norm) ||
        final_norm > 1e12 * (initial_norm + 1.0)) {
      throw ExplicitInstabilityError(
          "explicit diffusion diverged: squared norm grew from " +
          std::to_string(initial_norm) + " to " + std::to_string(final_norm));
    }
    return u;
  }

  // Implicit Euler: (I + dt k L) U_{t+1} = U_t (+ dt S).
  std::vector<std::tuple<int, int, double>> trip;
  const auto& rp = laplacian.row_ptr();
  for (std::size_t r = 0; r < laplacian.n(); ++r) {
    for (std::size_t p = rp[r]; p < rp[r + 1]; ++p) {
      trip.emplace_back(static_cast<int>(r), laplacian.col_idx()[p],
                        dtk * laplacian.values()[p]);
    }
    trip.emplace_back(static_cast<int>(r), static_cast<int>(r), 1.0);
  }
  auto system = std::make_shared<SparseMatrix>(
      SparseMatrix::from_triplets(laplacian.n(), std::move(trip)));
  const CgOptions cg{config.cg_tolerance, config.cg_max_iter};
  for (int t = 0; t < config.steps; ++t) {
    Tensor rhs = u;
    if (config.per_step_source) {
      rhs = tape.add(rhs, tape.mul_colvec(
                              Tensor::full({u.rows(), u.cols()}, config.dt),
                              sources));
    }
    u = tape.cg_solve(std::shared_ptr<const SparseMatrix>(system), rhs, cg);
  }
  return u;
}

Tensor ThermoPhase::readout(Tape& tape, const Tensor& field) const {
  return tape.softmax_rows(classifier_head.forward(tape, field));
}

Tensor ThermoPhase::consistency(Tape& tape, const Tensor& field,
                                const SparseMatrix& laplacian,
                                const Tensor& sources) {
  Tensor lu = tape.spmm(laplacian, field);
  Tensor broadcast = tape.mul_colvec(
      Tensor::full({field.rows(), field.cols()}, 1.0), sources);
  Tensor residual = tape.sub(lu, broadcast);
  return tape.mean(tape.mul(residual, residual));
}

}  // namespace pimpc
