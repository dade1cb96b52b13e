#include "pimpc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "pimpc/errors.hpp"

namespace pimpc {

SparseGraph::SparseGraph(std::size_t num_nodes,
                         std::vector<std::pair<int, int>> edges)
    : num_nodes_(num_nodes) {
  std::set<std::pair<int, int>> canonical;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes ||
        static_cast<std::size_t>(b) >= num_nodes) {
      throw IndexOutOfRangeError("edge endpoint " + std::to_string(a) + "," +
                                 std::to_string(b) + " out of range for " +
                                 std::to_string(num_nodes) + " nodes");
    }
    if (a == b) {
      ++dropped_;
      continue;
    }
    auto e = std::minmax(a, b);
    if (!canonical.insert({e.first, e.second}).second) ++dropped_;
  }
  edges_.assign(canonical.begin(), canonical.end());

  degrees_.assign(num_nodes_, 0);
  for (auto [a, b] : edges_) {
    ++degrees_[a];
    ++degrees_[b];
  }
  offsets_.assign(num_nodes_ + 1, 0);
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    offsets_[i + 1] = offsets_[i] + static_cast<std::size_t>(degrees_[i]);
  }
  neighbor_idx_.assign(offsets_[num_nodes_], 0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (auto [a, b] : edges_) {
    neighbor_idx_[cursor[a]++] = b;
    neighbor_idx_[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    std::sort(neighbor_idx_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              neighbor_idx_.begin() +
                  static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }

  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(2 * edges_.size());
  for (auto [a, b] : edges_) {
    trip.emplace_back(a, b, 1.0);
    trip.emplace_back(b, a, 1.0);
  }
  adjacency_ = SparseMatrix::from_triplets(num_nodes_, std::move(trip));
}

std::span<const int> SparseGraph::neighbors(int node) const {
  return {neighbor_idx_.data() + offsets_[node],
          neighbor_idx_.data() + offsets_[node + 1]};
}

int SparseGraph::max_degree() const {
  int m = 0;
  for (int d : degrees_) m = std::max(m, d);
  return m;
}

int SparseGraph::num_components() const {
  std::vector<int> comp(num_nodes_, -1);
  int count = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < num_nodes_; ++s) {
    if (comp[s] >= 0) continue;
    stack.push_back(static_cast<int>(s));
    comp[s] = count;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = count;
          stack.push_back(v);
        }
      }
    }
    ++count;
  }
  return count;
}

SparseMatrix build_laplacian(const SparseGraph& graph, LaplacianKind kind,
                             IsolatedNodePolicy policy) {
  const std::size_t n = graph.num_nodes();
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = static_cast<double>(graph.degree(static_cast<int>(i)));
    if (deg[i] == 0.0 && kind != LaplacianKind::Combinatorial) {
      if (policy == IsolatedNodePolicy::Strict) {
        throw IsolatedNodeError("node " + std::to_string(i) +
                                " has degree zero; degree-normalized "
                                "Laplacian undefined in strict mode");
      }
      deg[i] = 1.0;  // self-loop fallback, counted only in D
    }
  }

  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(2 * graph.num_edges() + n);
  switch (kind) {
    case LaplacianKind::Combinatorial:
      for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), deg[i]);
      }
      for (auto [a, b] : graph.edges()) {
        trip.emplace_back(a, b, -1.0);
        trip.emplace_back(b, a, -1.0);
      }
      break;
    case LaplacianKind::Normalized:
      for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
      }
      for (auto [a, b] : graph.edges()) {
        const double w = -1.0 / std::sqrt(deg[a] * deg[b]);
        trip.emplace_back(a, b, w);
        trip.emplace_back(b, a, w);
      }
      break;
    case LaplacianKind::RandomWalk:
      for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
      }
      for (auto [a, b] : graph.edges()) {
        trip.emplace_back(a, b, -1.0 / deg[a]);
        trip.emplace_back(b, a, -1.0 / deg[b]);
      }
      break;
  }
  return SparseMatrix::from_triplets(n, std::move(trip));
}

double dirichlet_energy(const SparseMatrix& laplacian,
                        std::span<const double> signal) {
  if (signal.size() != laplacian.n()) {
    throw ShapeMismatchError("signal length " + std::to_string(signal.size()) +
                             " != matrix dimension " +
                             std::to_string(laplacian.n()));
  }
  std::vector<double> lf(signal.size());
  laplacian.multiply(signal.data(), lf.data(), 1);
  double e = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) e += signal[i] * lf[i];
  return e;
}

namespace {

double conductance_of_mask(const SparseGraph& graph,
                           const std::vector<char>& in_subset,
                           std::size_t subset_size) {
  const std::size_t n = graph.num_nodes();
  if (subset_size == 0 || subset_size == n) {
    throw EmptyOrFullSubsetError("conductance needs a nonempty proper subset");
  }
  long boundary = 0;
  long vol_s = 0;
  long vol_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    vol_total += graph.degree(static_cast<int>(i));
    if (in_subset[i]) vol_s += graph.degree(static_cast<int>(i));
  }
  for (auto [a, b] : graph.edges()) {
    if (in_subset[a] != in_subset[b]) ++boundary;
  }
  const long denom = std::min<long>(vol_s, vol_total - vol_s);
  if (denom == 0) return 0.0;  // a zero-volume side has no boundary either
  return static_cast<double>(boundary) / static_cast<double>(denom);
}

}  // namespace

double conductance(const SparseGraph& graph, const std::vector<int>& subset) {
  std::vector<char> mask(graph.num_nodes(), 0);
  std::size_t count = 0;
  for (int v : subset) {
    if (v < 0 || static_cast<std::size_t>(v) >= graph.num_nodes()) {
      throw IndexOutOfRangeError("subset node out of range");
    }
    if (!mask[v]) {
      mask[v] = 1;
      ++count;
    }
  }
  return conductance_of_mask(graph, mask, count);
}

std::pair<double, std::vector<int>> min_conductance_bruteforce(
    const SparseGraph& graph) {
  const std::size_t n = graph.num_nodes();
  if (n > 16) {
    throw TooLargeForEnumerationError(
        "brute-force conductance limited to 16 nodes, got " +
        std::to_string(n));
  }
  if (n < 2) {
    throw EmptyOrFullSubsetError("graph too small for a proper subset");
  }
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  // h(S) = h(complement), so fixing node 0 in S covers every split.
  const std::uint32_t limit = 1u << (n - 1);
  std::vector<char> mask(n, 0);
  for (std::uint32_t bits = 0; bits + 1 < limit; ++bits) {
    const std::uint32_t subset = (bits << 1) | 1u;
    std::size_t size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = static_cast<char>((subset >> i) & 1u);
      size += static_cast<std::size_t>(mask[i]);
    }
    const double h = conductance_of_mask(graph, mask, size);
    if (h < best) {
      best = h;
      best_mask = subset;
    }
  }
  std::vector<int> attaining;
  for (std::size_t i = 0; i < n; ++i) {
    if ((best_mask >> i) & 1u) attaining.push_back(static_cast<int>(i));
  }
  return {best, attaining};
}

}  // namespace pimpc
