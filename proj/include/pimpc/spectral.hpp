#pragma once

#include <cstddef>
#include <vector>

#include "pimpc/sparse.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc {

/// The k algebraically smallest eigenpairs of a symmetric operator.
/// Values ascend; vectors are orthonormal columns of an N-by-k matrix
/// with each column's first nonzero entry made positive.
struct EigenPairs {
  std::vector<double> values;
  Tensor vectors;

  std::size_t k() const { return values.size(); }
  std::size_t n() const { return vectors.rows(); }
};

enum class EigenMethod { Auto, Dense, Lanczos };

struct EigenOptions {
  EigenMethod method = EigenMethod::Auto;
  /// Auto switches from the dense path to Lanczos above this size.
  std::size_t dense_threshold = 256;
  double residual_tolerance = 1e-9;
  std::uint64_t seed = 0x51ec7ea1u;
};

EigenPairs topk_smallest_eigenpairs(const SparseMatrix& laplacian,
                                    std::size_t k,
                                    const EigenOptions& opts = {});

enum class CoordinateMode { EigenvectorRows, PseudoinverseRows };

/// Node coordinates in the eigenspace. EigenvectorRows takes row i of
/// the eigenvector block; PseudoinverseRows takes row i of the rank-k
/// pseudoinverse restricted to its first k columns, excluding
/// eigenvalues below `zero_tolerance`.
Tensor spectral_coordinates(const EigenPairs& pairs, CoordinateMode mode,
                            double zero_tolerance = 1e-10);

/// values[split] - values[split - 1].
double eigengap(const EigenPairs& pairs, std::size_t split_index);

/// Max residual ||L v - lambda v||_2 across the stored pairs.
double max_eigen_residual(const SparseMatrix& laplacian,
                          const EigenPairs& pairs);

}  // namespace pimpc
