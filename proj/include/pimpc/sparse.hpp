#pragma once

#include <cstddef>
#include <tuple>
#include <vector>

namespace pimpc {

/// Square sparse matrix in compressed sparse row form. Immutable after
/// construction; used for adjacency and Laplacian operators. Column
/// indices within each row are sorted.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Build from (row, col, value) triplets; duplicate entries are summed.
  static SparseMatrix from_triplets(
      std::size_t n, std::vector<std::tuple<int, int, double>> triplets);

  std::size_t n() const { return n_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// y = A x where x and y are dense n-by-cols row-major blocks.
  void multiply(const double* x, double* y, std::size_t cols) const;

  /// y = A^T x (needed for gradients of non-symmetric operators).
  void multiply_transpose(const double* x, double* y, std::size_t cols) const;

  std::vector<double> diagonal() const;

  double coeff(int row, int col) const;

  bool is_symmetric(double tol = 1e-12) const;

  std::vector<std::vector<double>> to_dense() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

}  // namespace pimpc
