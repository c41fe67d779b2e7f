#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "fgrnn/error.hpp"
#include "fgrnn/graph.hpp"
#include "fgrnn/spectral.hpp"
#include "helpers.hpp"

using namespace fgrnn;
using testutil::random_dense;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_set(const Graph& g) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& e : g.edges()) s.insert({e.i, e.j});
    return s;
}

}  // namespace

TEST_CASE("knn: collinear points") {
    const DenseMatrix pts{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {3.0, 0.0, 0.0}};
    const Graph g = build_knn_graph(pts, 1);
    CHECK(edge_set(g) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});
    for (const auto& e : g.edges()) CHECK(e.weight == 1.0);
}

TEST_CASE("knn: k = N-1 gives the complete graph") {
    const Graph g = build_knn_graph(random_dense(7, 3, 11), 6);
    CHECK(g.edges().size() == 21);
}

TEST_CASE("knn: unit square keeps sides, drops diagonals") {
    const DenseMatrix pts{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    const Graph g = build_knn_graph(pts, 2);
    CHECK(edge_set(g) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 3}, {1, 2}, {2, 3}});
}

TEST_CASE("knn: ties go to the lower index and duplicates are legal") {
    // node 1 is equidistant from 0 and 2
    const DenseMatrix pts{{0.0}, {1.0}, {2.0}, {10.0}};
    const Graph g = build_knn_graph(pts, 1);
    CHECK(edge_set(g).count({0, 1}) == 1);
    CHECK(edge_set(g).count({1, 2}) == 1);  // 2 picks 1 (distance 1) over 3
    const DenseMatrix dup{{0.0}, {0.0}, {0.0}};
    CHECK(edge_set(build_knn_graph(dup, 1)) == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}});
}

TEST_CASE("knn: N <= k is a contract violation") {
    CHECK_THROWS_AS(build_knn_graph(random_dense(3, 2, 1), 3), ContractError);
    CHECK_THROWS_AS(build_knn_graph(random_dense(3, 2, 1), 0), ContractError);
}

TEST_CASE("knn is invariant under permutation then relabel") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t n = 5 + s % 12;
        const DenseMatrix pts = random_dense(n, 3, 40 + s);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        SplitMix64 rng(s);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        DenseMatrix permuted(n, 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 3; ++c) permuted(perm[i], c) = pts(i, c);
        const Graph a = build_knn_graph(pts, 3), b = build_knn_graph(permuted, 3);
        std::set<std::pair<std::size_t, std::size_t>> relabeled;
        for (const auto& e : a.edges()) relabeled.insert(std::minmax(perm[e.i], perm[e.j]));
        CHECK(relabeled == edge_set(b));
    }
}

TEST_CASE("graph validation") {
    CHECK_THROWS_AS(Graph(2, {{0, 0, 1.0}}), ContractError);
    CHECK_THROWS_AS(Graph(2, {{0, 2, 1.0}}), ContractError);
    CHECK_THROWS_AS(Graph(2, {{0, 1, 0.0}}), ContractError);
    CHECK_THROWS_AS(Graph(2, {{0, 1, 1.0}, {1, 0, 1.0}}), ContractError);
    const Graph g(3, {{2, 0, 1.0}, {0, 1, 2.0}});
    CHECK(g.edges()[0] == Edge{0, 1, 2.0});
    CHECK(g.edges()[1] == Edge{0, 2, 1.0});
}

TEST_CASE("laplacian of K2") {
    const auto lap = build_laplacians(Graph(2, {{0, 1, 1.0}}));
    CHECK(lap.laplacian.to_dense() == DenseMatrix{{1.0, -1.0}, {-1.0, 1.0}});
    CHECK(lap.lambda_max == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(max_abs_diff(lap.scaled.to_dense(), DenseMatrix{{0.0, -1.0}, {-1.0, 0.0}}) <= 1e-12);
    CHECK(lap.first_order.to_dense() == DenseMatrix{{1.0, 1.0}, {1.0, 1.0}});
}

TEST_CASE("laplacian of the triangle") {
    const auto lap = build_laplacians(Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}));
    const DenseMatrix l = lap.laplacian.to_dense();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(l(i, j) == doctest::Approx(i == j ? 1.0 : -0.5).epsilon(1e-15));
    const auto eig = dense_eig_sym(l);
    CHECK(eig.values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(eig.values[2] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(lap.lambda_max == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("edgeless graph uses the isolated-node convention") {
    const auto lap = build_laplacians(Graph(3, {}));
    CHECK(lap.laplacian.to_dense() == DenseMatrix::identity(3));
    CHECK(lap.first_order.to_dense() == DenseMatrix::identity(3));
    CHECK(std::isfinite(lap.lambda_max));
}

TEST_CASE("spectrum of L on random knn graphs") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const std::size_t n = 4 + s % 29;
        const Graph g = testutil::random_knn_graph(n, 1 + s % 3, s);
        const auto lap = build_laplacians(g);
        const DenseMatrix l = lap.laplacian.to_dense();
        const auto eig = dense_eig_sym(l);
        CHECK(eig.values.front() >= -1e-10);
        CHECK(eig.values.back() <= 2.0 + 1e-10);
        CHECK(max_abs_diff(lap.first_order.to_dense() + l, 2.0 * DenseMatrix::identity(n)) <= 1e-14);
        CHECK(max_abs_diff(l, l.transposed()) == 0.0);
        for (std::size_t i = 0; i < n; ++i) CHECK(l(i, i) == 1.0);
        CHECK(lap.lambda_max == doctest::Approx(eig.values.back()).epsilon(1e-6));
    }
}

TEST_CASE("L annihilates constants on a regular graph") {
    const auto lap = build_laplacians(testutil::ring_graph(8));
    const auto y = spmv(lap.laplacian, std::vector<double>(8, 1.0));
    for (double v : y) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("edge list round trip and checksum") {
    const Graph g = testutil::random_knn_graph(20, 4, 5);
    std::stringstream ss;
    write_edge_list(ss, g);
    const Graph back = read_edge_list(ss);
    CHECK(back == g);
    CHECK(back.checksum() == g.checksum());
    CHECK(testutil::random_knn_graph(20, 4, 6).checksum() != g.checksum());
}

TEST_CASE("edge list parse errors carry line numbers") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_edge_list(empty), ParseError);
    std::istringstream short_file("3 2\n0 1 1\n");
    try {
        read_edge_list(short_file);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() >= 2);
    }
    std::istringstream bad("2 1\n0 1 x\n");
    CHECK_THROWS_AS(read_edge_list(bad), ParseError);
}
