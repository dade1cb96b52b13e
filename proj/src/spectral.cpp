#include "pimpc/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "pimpc/errors.hpp"
#include "pimpc/rng.hpp"

namespace pimpc {

namespace {

void fix_signs(std::vector<double>& vecs, std::size_t n, std::size_t k) {
  for (std::size_t c = 0; c < k; ++c) {
    double lead = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(vecs[i * k + c]) > 1e-12) {
        lead = vecs[i * k + c];
        break;
      }
    }
    if (lead < 0.0) {
      for (std::size_t i = 0; i < n; ++i) vecs[i * k + c] = -vecs[i * k + c];
    }
  }
}

EigenPairs dense_eigenpairs(const SparseMatrix& m, std::size_t k) {
  const std::size_t n = m.n();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  const auto& rp = m.row_ptr();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t p = rp[r]; p < rp[r + 1]; ++p) {
      dense(static_cast<Eigen::Index>(r), m.col_idx()[p]) = m.values()[p];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("dense symmetric eigensolver failed");
  }
  EigenPairs out;
  out.values.resize(k);
  std::vector<double> vecs(n * k);
  for (std::size_t c = 0; c < k; ++c) {
    out.values[c] = es.eigenvalues()(static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < n; ++i) {
      vecs[i * k + c] = es.eigenvectors()(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(c));
    }
  }
  fix_signs(vecs, n, k);
  out.vectors = Tensor::from_values({n, k}, std::move(vecs));
  return out;
}

/// Lanczos with full reorthogonalization. On breakdown (invariant
/// subspace exhausted) the basis is extended with a fresh random
/// direction, which leaves the tridiagonal matrix block-diagonal and
/// the Ritz pairs valid. Extending to m == n reproduces the full
/// spectrum up to roundoff.
EigenPairs lanczos_eigenpairs(const SparseMatrix& m, std::size_t k,
                              const EigenOptions& opts) {
  const std::size_t n = m.n();
  Rng rng(opts.seed);

  std::vector<std::vector<double>> q;  // orthonormal basis
  std::vector<double> alpha, beta;     // T diagonal / off-diagonal

  auto orthogonalize = [&](std::vector<double>& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qi : q) {
        double dot = 0.0;
        for (std::size_t x = 0; x < n; ++x) dot += qi[x] * w[x];
        for (std::size_t x = 0; x < n; ++x) w[x] -= dot * qi[x];
      }
    }
  };

  auto fresh_direction = [&]() {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    orthogonalize(v);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      throw ConvergenceError("lanczos: could not find a new direction");
    }
    for (double& x : v) x /= norm;
    return v;
  };

  q.push_back(fresh_direction());

  // Processes q[alpha.size()]: appends its diagonal entry and extends
  // the chain with the orthogonalized remainder. A breakdown (remainder
  // ~ 0) closes an invariant subspace, so a fresh block with zero
  // coupling keeps T = Q^T L Q exact.
  std::vector<double> w(n);
  auto step = [&]() {
    const std::size_t j = alpha.size();
    m.multiply(q[j].data(), w.data(), 1);
    double a = 0.0;
    for (std::size_t x = 0; x < n; ++x) a += q[j][x] * w[x];
    alpha.push_back(a);
    if (alpha.size() == n) return;  // complete basis processed
    orthogonalize(w);
    double b = 0.0;
    for (double x : w) b += x * x;
    b = std::sqrt(b);
    if (b >= 1e-10) {
      std::vector<double> next(n);
      for (std::size_t x = 0; x < n; ++x) next[x] = w[x] / b;
      q.push_back(std::move(next));
      beta.push_back(b);
    } else {
      q.push_back(fresh_direction());
      beta.push_back(0.0);
    }
  };

  std::size_t target_m = std::min(n, std::max<std::size_t>(2 * k + 10, 30));

  while (true) {
    while (alpha.size() < target_m) step();

    const std::size_t mdim = alpha.size();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(mdim, mdim);
    for (std::size_t i = 0; i < mdim; ++i) {
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = alpha[i];
      if (i + 1 < mdim) {
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) =
            beta[i];
        t(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) =
            beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("lanczos: tridiagonal eigensolver failed");
    }

    const std::size_t kk = std::min(k, mdim);
    std::vector<double> vecs(n * kk, 0.0);
    std::vector<double> vals(kk);
    for (std::size_t c = 0; c < kk; ++c) {
      vals[c] = es.eigenvalues()(static_cast<Eigen::Index>(c));
      for (std::size_t j = 0; j < mdim; ++j) {
        const double s = es.eigenvectors()(static_cast<Eigen::Index>(j),
                                           static_cast<Eigen::Index>(c));
        for (std::size_t i = 0; i < n; ++i) vecs[i * kk + c] += s * q[j][i];
      }
    }

    // Residual check on the Ritz pairs.
    double worst = 0.0;
    std::vector<double> v(n), lv(n);
    for (std::size_t c = 0; c < kk; ++c) {
      for (std::size_t i = 0; i < n; ++i) v[i] = vecs[i * kk + c];
      m.multiply(v.data(), lv.data(), 1);
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = lv[i] - vals[c] * v[i];
        r2 += r * r;
      }
      worst = std::max(worst, std::sqrt(r2));
    }

    if ((worst <= opts.residual_tolerance && kk == k) || mdim >= n) {
      if (worst > opts.residual_tolerance) {
        throw ConvergenceError(
            "lanczos: residual " + std::to_string(worst) +
            " above tolerance at full basis size; operator may be "
            "ill-conditioned");
      }
      fix_signs(vecs, n, kk);
      EigenPairs out;
      out.values = std::move(vals);
      out.vectors = Tensor::from_values({n, kk}, std::move(vecs));
      return out;
    }
    target_m = std::min(n, std::max(target_m + 10, target_m * 3 / 2));
  }
}

}  // namespace

EigenPairs topk_smallest_eigenpairs(const SparseMatrix& laplacian,
                                    std::size_t k, const EigenOptions& opts) {
  const std::size_t n = laplacian.n();
  if (k < 1 || k > n) {
    throw IndexOutOfRangeError("eigenpair count " + std::to_string(k) +
                               " outside [1, " + std::to_string(n) + "]");
  }
  if (!laplacian.is_symmetric(1e-10)) {
    throw ConfigError("eigensolver requires a symmetric operator");
  }
  switch (opts.method) {
    case EigenMethod::Dense:
      return dense_eigenpairs(laplacian, k);
    case EigenMethod::Lanczos:
      return lanczos_eigenpairs(laplacian, k, opts);
    case EigenMethod::Auto:
      break;
  }
  if (n <= opts.dense_threshold) return dense_eigenpairs(laplacian, k);
  return lanczos_eigenpairs(laplacian, k, opts);
}

Tensor spectral_coordinates(const EigenPairs& pairs, CoordinateMode mode,
                            double zero_tolerance) {
  const std::size_t n = pairs.n();
  const std::size_t k = pairs.k();
  if (mode == CoordinateMode::EigenvectorRows) {
    return pairs.vectors.clone();
  }
  // Row i of sum_{lambda > tol} (1/lambda) v v^T, first k columns.
  std::vector<double> coords(n * k, 0.0);
  const auto& v = pairs.vectors.values();
  for (std::size_t j = 0; j < k; ++j) {
    if (pairs.values[j] <= zero_tolerance) continue;
    const double inv = 1.0 / pairs.values[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double vij = v[i * k + j];
      if (vij == 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) {
        coords[i * k + c] += inv * vij * v[c * k + j];
      }
    }
  }
  return Tensor::from_values({n, k}, std::move(coords));
}

double eigengap(const EigenPairs& pairs, std::size_t split_index) {
  if (split_index < 1 || split_index >= pairs.k()) {
    throw IndexOutOfRangeError("eigengap split " +
                               std::to_string(split_index) + " outside [1, " +
                               std::to_string(pairs.k()) + ")");
  }
  return pairs.values[split_index] - pairs.values[split_index - 1];
}

double max_eigen_residual(const SparseMatrix& laplacian,
                          const EigenPairs& pairs) {
  const std::size_t n = pairs.n(), k = pairs.k();
  std::vector<double> v(n), lv(n);
  double worst = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) v[i] = pairs.vectors(i, c);
    laplacian.multiply(v.data(), lv.data(), 1);
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = lv[i] - pairs.values[c] * v[i];
      r2 += r * r;
    }
    worst = std::max(worst, std::sqrt(r2));
  }
  return worst;
}

}  // namespace pimpc
