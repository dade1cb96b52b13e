#include "pimpc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pimpc/errors.hpp"

namespace pimpc {

SparseMatrix SparseMatrix::from_triplets(
    std::size_t n, std::vector<std::tuple<int, int, double>> triplets) {
  for (const auto& [r, c, v] : triplets) {
    (void)v;
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n ||
        static_cast<std::size_t>(c) >= n) {
      throw IndexOutOfRangeError("sparse triplet index out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b));
  });

  SparseMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());

  std::size_t i = 0;
  while (i < triplets.size()) {
    auto [r, c, v] = triplets[i];
    double acc = v;
    std::size_t j = i + 1;
    while (j < triplets.size() && std::get<0>(triplets[j]) == r &&
           std::get<1>(triplets[j]) == c) {
      acc += std::get<2>(triplets[j]);
      ++j;
    }
    m.col_idx_.push_back(c);
    m.values_.push_back(acc);
    m.row_ptr_[static_cast<std::size_t>(r) + 1]++;
    i = j;
  }
  for (std::size_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

void SparseMatrix::multiply(const double* x, double* y,
                            std::size_t cols) const {
  std::memset(y, 0, n_ * cols * sizeof(double));
  for (std::size_t r = 0; r < n_; ++r) {
    double* yr = y + r * cols;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const double v = values_[p];
      const double* xc = x + static_cast<std::size_t>(col_idx_[p]) * cols;
      for (std::size_t d = 0; d < cols; ++d) yr[d] += v * xc[d];
    }
  }
}

void SparseMatrix::multiply_transpose(const double* x, double* y,
                                      std::size_t cols) const {
  std::memset(y, 0, n_ * cols * sizeof(double));
  for (std::size_t r = 0; r < n_; ++r) {
    const double* xr = x + r * cols;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const double v = values_[p];
      double* yc = y + static_cast<std::size_t>(col_idx_[p]) * cols;
      for (std::size_t d = 0; d < cols; ++d) yc[d] += v * xr[d];
    }
  }
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      if (col_idx_[p] == static_cast<int>(r)) d[r] = values_[p];
    }
  }
  return d;
}

double SparseMatrix::coeff(int row, int col) const {
  for (std::size_t p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p) {
    if (col_idx_[p] == col) return values_[p];
  }
  return 0.0;
}

bool SparseMatrix::is_symmetric(double tol) const {
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const int c = col_idx_[p];
      if (std::abs(values_[p] - coeff(c, static_cast<int>(r))) > tol) {
        return false;
      }
    }
  }
  return true;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> dense(n_, std::vector<double>(n_, 0.0));
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      dense[r][col_idx_[p]] = values_[p];
    }
  }
  return dense;
}

}  // namespace pimpc
