#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pimpc/errors.hpp"
#include "pimpc/graph.hpp"
#include "pimpc/spectral.hpp"
#include "test_util.hpp"

using namespace pimpc;
using namespace pimpc::testutil;

TEST_CASE("known spectra of small graphs") {
  SparseMatrix p3 = build_laplacian(path_graph(3), LaplacianKind::Combinatorial);
  EigenPairs pairs = topk_smallest_eigenpairs(p3, 3);
  CHECK(pairs.values[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pairs.values[1] == doctest::Approx(1.0));
  CHECK(pairs.values[2] == doctest::Approx(3.0));

  SparseMatrix k4 = build_laplacian(complete_graph(4),
                                    LaplacianKind::Combinatorial);
  EigenPairs k4_pairs = topk_smallest_eigenpairs(k4, 2);
  CHECK(k4_pairs.values[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(k4_pairs.values[1] == doctest::Approx(4.0));
}

TEST_CASE("kernel of a connected combinatorial laplacian is constant") {
  Rng rng(7);
  SparseGraph g = random_connected_graph(12, 0.35, rng);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
  EigenPairs pairs = topk_smallest_eigenpairs(lap, 1);
  CHECK(pairs.values[0] == doctest::Approx(0.0).epsilon(1e-9));
  const double expect = 1.0 / std::sqrt(12.0);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(pairs.vectors(i, 0) == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("eigenpair invariants: orthonormal, small residual, ascending") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    SparseGraph g = random_connected_graph(20, 0.25, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Normalized);
    EigenPairs pairs = topk_smallest_eigenpairs(lap, 6);
    for (std::size_t a = 0; a + 1 < pairs.k(); ++a) {
      CHECK(pairs.values[a] <= pairs.values[a + 1] + 1e-12);
    }
    for (std::size_t a = 0; a < pairs.k(); ++a) {
      for (std::size_t b = 0; b < pairs.k(); ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < 20; ++i)
          dot += pairs.vectors(i, a) * pairs.vectors(i, b);
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
      }
    }
    CHECK(max_eigen_residual(lap, pairs) < 1e-7);
  }
}

TEST_CASE("lanczos agrees with the dense path") {
  Rng rng(31);
  for (int n : {40, 120, 200}) {
    SparseGraph g = random_connected_graph(n, 6.0 / n + 0.05, rng);
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
    const std::size_t k = 16;
    EigenOptions dense_opts;
    dense_opts.method = EigenMethod::Dense;
    EigenOptions lanczos_opts;
    lanczos_opts.method = EigenMethod::Lanczos;
    EigenPairs dense = topk_smallest_eigenpairs(lap, k, dense_opts);
    EigenPairs lanc = topk_smallest_eigenpairs(lap, k, lanczos_opts);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(std::abs(dense.values[i] - lanc.values[i]) < 1e-8);
    }
    // Principal angles for well-separated (simple) eigenvalues.
    for (std::size_t i = 0; i < k; ++i) {
      const double gap_lo = i == 0 ? 1.0 : dense.values[i] - dense.values[i - 1];
      const double gap_hi = i + 1 < k ? dense.values[i + 1] - dense.values[i]
                                      : 1.0;
      if (std::min(gap_lo, gap_hi) < 1e-3) continue;
      double dot = 0.0;
      for (int r = 0; r < n; ++r) dot += dense.vectors(r, i) * lanc.vectors(r, i);
      CHECK(std::acos(std::min(1.0, std::abs(dot))) < 1e-6);
    }
  }
}

TEST_CASE("eigenvector-row coordinates: constant first column, equivariance") {
  Rng rng(43);
  SparseGraph g = random_connected_graph(10, 0.4, rng);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
  EigenPairs pairs = topk_smallest_eigenpairs(lap, 1);
  Tensor coords = spectral_coordinates(pairs, CoordinateMode::EigenvectorRows);
  for (std::size_t i = 1; i < 10; ++i) {
    CHECK(coords(i, 0) == doctest::Approx(coords(0, 0)).epsilon(1e-7));
  }

  // Relabeling nodes permutes coordinate rows identically.
  std::vector<int> perm = {3, 1, 4, 0, 2, 9, 7, 5, 8, 6};
  std::vector<std::pair<int, int>> pedges;
  for (auto [a, b] : g.edges()) pedges.push_back({perm[a], perm[b]});
  SparseGraph pg(10, pedges);
  SparseMatrix plap = build_laplacian(pg, LaplacianKind::Combinatorial);
  EigenPairs ppairs = topk_smallest_eigenpairs(plap, 3);
  EigenPairs pairs3 = topk_smallest_eigenpairs(lap, 3);
  Tensor c0 = spectral_coordinates(pairs3, CoordinateMode::EigenvectorRows);
  Tensor c1 = spectral_coordinates(ppairs, CoordinateMode::EigenvectorRows);
  // Compare |values|: signs are fixed by first-nonzero order, which the
  // permutation can flip.
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 1; c < 3; ++c) {
      if (eigengap(pairs3, c) < 1e-6) continue;
      CHECK(std::abs(c0(i, c)) ==
            doctest::Approx(std::abs(c1(perm[i], c))).epsilon(1e-6));
    }
  }
}

TEST_CASE("pseudoinverse-row coordinates match a dense pinv oracle") {
  SparseGraph g = path_graph(3);
  SparseMatrix lap = build_laplacian(g, LaplacianKind::Combinatorial);
  EigenPairs pairs = topk_smallest_eigenpairs(lap, 3);
  Tensor coords =
      spectral_coordinates(pairs, CoordinateMode::PseudoinverseRows);

  Eigen::MatrixXd dense = to_eigen(lap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(3, 3);
  for (int j = 0; j < 3; ++j) {
    if (es.eigenvalues()(j) > 1e-10) {
      pinv += es.eigenvectors().col(j) * es.eigenvectors().col(j).transpose() /
              es.eigenvalues()(j);
    }
  }
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(coords(i, c) == doctest::Approx(pinv(i, c)).epsilon(1e-9));
}

TEST_CASE("eigengap examples") {
  SparseMatrix p3 = build_laplacian(path_graph(3), LaplacianKind::Combinatorial);
  EigenPairs pairs = topk_smallest_eigenpairs(p3, 3);
  CHECK(eigengap(pairs, 2) == doctest::Approx(2.0));  // {0,1,3}

  SparseMatrix k4 = build_laplacian(complete_graph(4),
                                    LaplacianKind::Combinatorial);
  EigenPairs kp = topk_smallest_eigenpairs(k4, 4);
  CHECK(eigengap(kp, 1) == doctest::Approx(4.0));
  CHECK(eigengap(kp, 2) == doctest::Approx(0.0).epsilon(1e-8));  // repeated

  CHECK_THROWS_AS(eigengap(pairs, 0), IndexOutOfRangeError);
  CHECK_THROWS_AS(eigengap(pairs, 3), IndexOutOfRangeError);
}

TEST_CASE("planted clusters separate in spectral coordinates") {
  Rng rng(57);
  int separated = 0;
  const int draws = 20;
  for (int trial = 0; trial < draws; ++trial) {
    const int half = 30;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 2 * half; ++i) {
      for (int j = i + 1; j < 2 * half; ++j) {
        const bool same = (i < half) == (j < half);
        if (rng.bernoulli(same ? 0.5 : 0.02)) edges.push_back({i, j});
      }
    }
    SparseGraph g(2 * half, edges);
    if (!g.connected()) continue;
    SparseMatrix lap = build_laplacian(g, LaplacianKind::Normalized);
    EigenPairs pairs = topk_smallest_eigenpairs(lap, 2);
    Tensor coords = spectral_coordinates(pairs, CoordinateMode::EigenvectorRows);

    // Within-cluster mean distance should not exceed between-cluster.
    double within = 0.0, between = 0.0;
    int nw = 0, nb = 0;
    for (int i = 0; i < 2 * half; ++i) {
      for (int j = i + 1; j < 2 * half; ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < 2; ++c) {
          const double d = coords(i, c) - coords(j, c);
          d2 += d * d;
        }
        if ((i < half) == (j < half)) {
          within += std::sqrt(d2);
          ++nw;
        } else {
          between += std::sqrt(d2);
          ++nb;
        }
      }
    }
    CHECK(within / nw <= between / nb);

    // Fiedler-direction projection separates the two communities.
    double mean0 = 0.0, mean1 = 0.0;
    for (int i = 0; i < half; ++i) mean0 += coords(i, 1);
    for (int i = half; i < 2 * half; ++i) mean1 += coords(i, 1);
    mean0 /= half;
    mean1 /= half;
    const double mid = 0.5 * (mean0 + mean1);
    bool ok = true;
    for (int i = 0; i < 2 * half; ++i) {
      const bool side = coords(i, 1) > mid;
      const bool want = mean1 > mean0 ? i >= half : i < half;
      if (side != want) ok = false;
    }
    if (ok) ++separated;
  }
  CHECK(separated >= static_cast<int>(0.95 * draws));
}
