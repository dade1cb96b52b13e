#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pimpc/sparse.hpp"

namespace pimpc {

enum class LaplacianKind { Combinatorial, Normalized, RandomWalk };

/// What to do when a zero-degree node meets a degree-normalized
/// Laplacian: substitute a unit degree (self-loop counted only in D),
/// or refuse.
enum class IsolatedNodePolicy { UnitSelfLoop, Strict };

/// Immutable undirected simple graph. The constructor canonicalizes the
/// edge list: self-loops are dropped, duplicates and reversed copies
/// collapse to a single stored edge.
class SparseGraph {
 public:
  SparseGraph(std::size_t num_nodes, std::vector<std::pair<int, int>> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  /// How many input rows were discarded during canonicalization.
  std::size_t dropped_inputs() const { return dropped_; }

  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  std::span<const int> neighbors(int node) const;
  int degree(int node) const { return degrees_[node]; }
  const std::vector<int>& degrees() const { return degrees_; }
  int max_degree() const;

  /// 0/1 adjacency in CSR form (symmetric, zero diagonal).
  const SparseMatrix& adjacency() const { return adjacency_; }

  int num_components() const;
  bool connected() const { return num_components() == 1; }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<int> neighbor_idx_;
  std::vector<int> degrees_;
  SparseMatrix adjacency_;
  std::size_t dropped_ = 0;
};

SparseMatrix build_laplacian(
    const SparseGraph& graph, LaplacianKind kind,
    IsolatedNodePolicy policy = IsolatedNodePolicy::UnitSelfLoop);

/// Quadratic form f^T L f. For the combinatorial Laplacian this equals
/// (1/2) sum_ij A_ij (f_i - f_j)^2.
double dirichlet_energy(const SparseMatrix& laplacian,
                        std::span<const double> signal);

/// Boundary edge count over the smaller side's volume (degree sum).
double conductance(const SparseGraph& graph, const std::vector<int>& subset);

/// Exhaustive minimum conductance over all nonempty proper subsets.
/// Guarded to num_nodes <= 16.
std::pair<double, std::vector<int>> min_conductance_bruteforce(
    const SparseGraph& graph);

}  // namespace pimpc
