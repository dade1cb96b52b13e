#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pimpc/errors.hpp"
#include "pimpc/graph.hpp"
#include "test_util.hpp"

using namespace pimpc;
using namespace pimpc::testutil;

namespace {

/// Independent oracle: (1/2) sum_ij A_ij (f_i - f_j)^2.
double pairwise_dirichlet(const SparseGraph& g, const std::vector<double>& f) {
  double s = 0.0;
  for (auto [a, b] : g.edges()) s += (f[a] - f[b]) * (f[a] - f[b]);
  return s;
}

}  // namespace

TEST_CASE("edge list canonicalization") {
  SparseGraph g(3, {{2, 1}, {1, 2}, {0, 1}, {1, 1}});
  CHECK(g.num_edges() == 2);
  CHECK(g.dropped_inputs() == 2);  // one duplicate orientation, one self-loop
  CHECK(g.degree(1) == 2);
  CHECK(g.degree(0) == 1);
}

TEST_CASE("combinatorial laplacian of the path graph") {
  SparseGraph g = path_graph(3);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
  const std::vector<std::vector<double>> want = {
      {1, -1, 0}, {-1, 2, -1}, {0, -1, 1}};
  auto dense = lap.to_dense();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(dense[i][j] == doctest::Approx(want[i][j]));
}

TEST_CASE("combinatorial laplacian annihilates constants") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    SparseGraph g = erdos_renyi(8, 0.4, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
    std::vector<double> c(8, 3.7), out(8);
    lap.multiply(c.data(), out.data(), 1);
    for (double v : out) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("normalized laplacian spectrum of the path graph") {
  SparseGraph g = path_graph(3);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Normalized);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(lap));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(2.0));
}

TEST_CASE("isolated node policy") {
  SparseGraph g(3, {{0, 1}});  // node 2 isolated
  CHECK_THROWS_AS(
      build_laplacian(g, LaplacianKind::Normalized, IsolatedNodePolicy::Strict),
      IsolatedNodeError);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Normalized,
                                     IsolatedNodePolicy::UnitSelfLoop);
  CHECK(lap.coeff(2, 2) == doctest::Approx(1.0));
  CHECK(lap.coeff(2, 0) == 0.0);
  // Combinatorial never needs the policy.
  SparseMatrix comb = build_laplacian(g, LaplacianKind::Combinatorial,
                                      IsolatedNodePolicy::Strict);
  CHECK(comb.coeff(2, 2) == 0.0);
}

TEST_CASE("dirichlet energy examples") {
  SparseGraph g = path_graph(3);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
  std::vector<double> constant = {1, 1, 1};
  CHECK(dirichlet_energy(lap, constant) == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> spike = {1, 0, 0};
  CHECK(dirichlet_energy(lap, spike) == doctest::Approx(1.0));
  std::vector<double> bad = {1, 0};
  CHECK_THROWS_AS(dirichlet_energy(lap, bad), ShapeMismatchError);
}

TEST_CASE("dirichlet energy matches the pairwise-sum oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    SparseGraph g = erdos_renyi(8, 0.5, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
    std::vector<double> f(8);
    for (double& v : f) v = rng.normal();
    CHECK(dirichlet_energy(lap, f) ==
          doctest::Approx(pairwise_dirichlet(g, f)).epsilon(1e-12));
  }
}

TEST_CASE("combinatorial laplacian is positive semidefinite") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    SparseGraph g = erdos_renyi(10, 0.3, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
    std::vector<double> f(10);
    for (double& v : f) v = rng.normal();
    CHECK(dirichlet_energy(lap, f) >= -1e-12);
  }
}

TEST_CASE("kernel multiplicity equals component count") {
  Rng rng(47);
  for (int comps = 1; comps <= 3; ++comps) {
    // Disjoint paths of length 3.
    std::vector<std::pair<int, int>> e;
    for (int c = 0; c < comps; ++c) {
      e.push_back({3 * c, 3 * c + 1});
      e.push_back({3 * c + 1, 3 * c + 2});
    }
    SparseGraph g(static_cast<std::size_t>(3 * comps), e);
    CHECK(g.num_components() == comps);
    for (auto kind : {LaplacianKind::Combinatorial, LaplacianKind::Normalized}) {
      SparseMatrix lap = build_laplacian(g, kind);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(lap));
      int zeros = 0;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i)) < 1e-9) ++zeros;
      CHECK(zeros == comps);
    }
  }
  (void)rng;
}

TEST_CASE("conductance examples") {
  SparseGraph p3 = path_graph(3);
  CHECK(conductance(p3, {0}) == doctest::Approx(1.0));
  SparseGraph k4 = complete_graph(4);
  CHECK(conductance(k4, {0, 1}) == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS(conductance(p3, {}), EmptyOrFullSubsetError);
  CHECK_THROWS_AS(conductance(p3, {0, 1, 2}), EmptyOrFullSubsetError);
}

TEST_CASE("conductance is symmetric under complement") {
  Rng rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    SparseGraph g = random_connected_graph(8, 0.4, rng);
    std::vector<int> s, comp;
    for (int i = 0; i < 8; ++i) (rng.bernoulli(0.5) ? s : comp).push_back(i);
    if (s.empty() || comp.empty()) continue;
    CHECK(conductance(g, s) == doctest::Approx(conductance(g, comp)));
  }
}

TEST_CASE("brute-force minimum conductance") {
  CHECK(min_conductance_bruteforce(path_graph(3)).first == doctest::Approx(1.0));

  // Two triangles joined by a bridge; the optimum cuts the bridge.
  SparseGraph bridged(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
  auto [h, subset] = min_conductance_bruteforce(bridged);
  CHECK(h == doctest::Approx(1.0 / 7.0));
  CHECK(subset.size() == 3);
  CHECK(conductance(bridged, subset) == doctest::Approx(h));

  // Exhaustive oracle agreement on a random graph.
  Rng rng(71);
  SparseGraph g = erdos_renyi(7, 0.45, rng);
  auto [hg, sg] = min_conductance_bruteforce(g);
  double best = 1e300;
  for (int bits = 1; bits < (1 << 7) - 1; ++bits) {
    std::vector<int> s;
    for (int i = 0; i < 7; ++i)
      if ((bits >> i) & 1) s.push_back(i);
    best = std::min(best, conductance(g, s));
  }
  CHECK(hg == doctest::Approx(best));
  CHECK(conductance(g, sg) == doctest::Approx(hg));

  SparseGraph two_comps(4, {{0, 1}, {2, 3}});
  CHECK(min_conductance_bruteforce(two_comps).first == doctest::Approx(0.0));

  CHECK_THROWS_AS(min_conductance_bruteforce(path_graph(17)),
                  TooLargeForEnumerationError);
}

TEST_CASE("cheeger sandwich on random connected graphs") {
  Rng rng(83);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(7));
    SparseGraph g = random_connected_graph(n, 0.45, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Normalized);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(lap));
    const double lambda2 = es.eigenvalues()(1);
    const double hg = min_conductance_bruteforce(g).first;
    CHECK(lambda2 / 2.0 <= hg + 1e-9);
    CHECK(hg <= std::sqrt(2.0 * lambda2) + 1e-9);
  }
}
