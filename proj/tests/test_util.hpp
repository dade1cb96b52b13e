#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "pimpc/graph.hpp"
#include "pimpc/rng.hpp"
#include "pimpc/sparse.hpp"
#include "pimpc/tensor.hpp"

namespace pimpc::testutil {

inline SparseGraph path_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return SparseGraph(static_cast<std::size_t>(n), e);
}

inline SparseGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return SparseGraph(static_cast<std::size_t>(n), e);
}

inline SparseGraph star_graph(int leaves) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i <= leaves; ++i) e.push_back({0, i});
  return SparseGraph(static_cast<std::size_t>(leaves) + 1, e);
}

inline SparseGraph cycle_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return SparseGraph(static_cast<std::size_t>(n), e);
}

inline SparseGraph erdos_renyi(int n, double p, Rng& rng) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) e.push_back({i, j});
  return SparseGraph(static_cast<std::size_t>(n), e);
}

/// Rejection-samples a connected Erdos-Renyi graph.
inline SparseGraph random_connected_graph(int n, double p, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SparseGraph g = erdos_renyi(n, p, rng);
    if (g.connected()) return g;
  }
  return path_graph(n);  // practically unreachable
}

inline Eigen::MatrixXd to_eigen(const SparseMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.n()),
                                            static_cast<Eigen::Index>(m.n()));
  const auto dense = m.to_dense();
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 0; j < m.n(); ++j)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          dense[i][j];
  return d;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(shape.numel());
  for (double& x : v) x = rng.normal() * scale;
  return Tensor::from_values(shape, std::move(v));
}

}  // namespace pimpc::testutil
