#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fgrnn/error.hpp"
#include "fgrnn/spectral.hpp"
#include "helpers.hpp"

using namespace fgrnn;
using testutil::random_dense;
using testutil::random_sparse;

TEST_CASE("csr constructor rejects broken invariants") {
    CHECK_NOTHROW(SparseMatrix(2, 2, {0, 1, 2}, {1, 0}, {1.0, 1.0}));
    CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), ContractError);
    CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), ContractError);  // unsorted
    CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 2, 2}, {0, 0}, {1.0, 1.0}), ContractError);  // duplicate
    CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1, 2}, {0, 2}, {1.0, 1.0}), ContractError);  // out of range
}

TEST_CASE("from_triplets sums duplicates and sorts") {
    auto a = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 0.5}, {1, 0, 3.0}});
    CHECK(a.nnz() == 3);
    CHECK(a.at(1, 2) == 1.5);
    CHECK(a.at(0, 1) == 2.0);
    CHECK(a.at(0, 0) == 0.0);
    CHECK(a.col_indices()[1] == 0);
}

TEST_CASE("spmm examples") {
    const DenseMatrix x = random_dense(3, 4, 7);
    CHECK(spmm(SparseMatrix::identity(3), x) == x);

    const SparseMatrix zero(3, 3, {0, 0, 0, 0}, {}, {});
    CHECK(spmm(zero, x) == DenseMatrix(3, 4));

    auto a = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    CHECK(spmm(a, DenseMatrix{{1.0}, {2.0}}) == DenseMatrix{{2.0}, {1.0}});

    CHECK_THROWS_AS(spmm(a, DenseMatrix(3, 1)), ContractError);
}

TEST_CASE("spmm matches the dense product on random inputs") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const std::size_t n = 1 + s % 32, m = 1 + (s * 7) % 32, f = 1 + s % 5;
        const SparseMatrix a = random_sparse(n, m, 0.2, s);
        const DenseMatrix x = random_dense(m, f, 100 + s);
        CHECK(max_abs_diff(spmm(a, x), matmul(a.to_dense(), x)) <= 1e-12);
    }
}

TEST_CASE("spmv agrees with spmm on a single column") {
    const SparseMatrix a = random_sparse(10, 8, 0.3, 3);
    const DenseMatrix x = random_dense(8, 1, 4);
    const auto y = spmv(a, x.values());
    const DenseMatrix ref = spmm(a, x);
    for (std::size_t i = 0; i < 10; ++i) CHECK(y[i] == ref(i, 0));
}

TEST_CASE("power iteration examples") {
    auto diag = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 3.0}});
    auto r = power_iteration(diag, 1e-14, 10000, 1);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(3.0).epsilon(1e-10));

    // normalized Laplacian of K2
    auto k2 = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}});
    CHECK(power_iteration(k2, 1e-14, 10000, 1).value == doctest::Approx(2.0).epsilon(1e-10));

    const SparseMatrix zero(3, 3, {0, 0, 0, 0}, {}, {});
    CHECK(power_iteration(zero, 1e-12, 100, 1).value == 0.0);
}

TEST_CASE("power iteration flags non-convergence") {
    // +1 and -1 have equal magnitude; the Rayleigh quotient oscillates
    auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
    auto r = power_iteration(a, 1e-15, 5, 3);
    CHECK(r.iterations <= 5);
    const SparseMatrix big = random_sparse(30, 30, 0.3, 9, true);
    auto r2 = power_iteration(big, 1e-300, 3, 1);
    CHECK_FALSE(r2.converged);
    CHECK(r2.iterations == 3);
    CHECK(std::isfinite(r2.value));
}

TEST_CASE("power iteration rejects asymmetric input") {
    auto a = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 2.0}});
    CHECK_THROWS_AS(power_iteration(a, 1e-12, 100, 1), ContractError);
}

TEST_CASE("power iteration matches the Jacobi oracle") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const std::size_t n = 2 + s % 31;
        // diagonal shift keeps the dominant eigenvalue away from a ±λ tie,
        // where successive Rayleigh quotients can agree on a mixed vector
        const SparseMatrix a = random_sparse(n, n, 0.3, 500 + s, true).scaled_shifted(1.0, 0.5 * static_cast<double>(n));
        const auto eig = dense_eig_sym(a.to_dense());
        const double ref = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
        const auto r = power_iteration(a, 1e-15, 200000, s);
        CHECK(r.converged);
        CHECK(std::abs(std::abs(r.value) - ref) / ref <= 1e-6);
    }
}

TEST_CASE("jacobi examples") {
    auto e = dense_eig_sym(DenseMatrix{{2.0, 0.0}, {0.0, 5.0}});
    CHECK(e.values[0] == 2.0);
    CHECK(e.values[1] == 5.0);
    CHECK(std::abs(e.vectors(0, 0)) == 1.0);
    CHECK(std::abs(e.vectors(1, 1)) == 1.0);

    auto e2 = dense_eig_sym(DenseMatrix{{1.0, -1.0}, {-1.0, 1.0}});
    CHECK(e2.values[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(e2.values[1] == doctest::Approx(2.0).epsilon(1e-14));

    auto e3 = dense_eig_sym(DenseMatrix::identity(4));
    for (double v : e3.values) CHECK(v == 1.0);

    CHECK_THROWS_AS(dense_eig_sym(DenseMatrix{{1.0, 2.0}, {0.0, 1.0}}), ContractError);
    CHECK_THROWS_AS(dense_eig_sym(DenseMatrix(65, 65)), ContractError);
}

TEST_CASE("jacobi reconstructs the input") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const std::size_t n = 1 + s % 40;
        const DenseMatrix a = random_sparse(n, n, 0.5, 900 + s, true).to_dense();
        const auto e = dense_eig_sym(a);
        DenseMatrix vl = e.vectors;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) vl(i, j) *= e.values[j];
        const DenseMatrix back = matmul_nt(vl, e.vectors);
        CHECK(frobenius_norm(back - a) <= 1e-9 * std::max(frobenius_norm(a), 1.0));
        CHECK(std::is_sorted(e.values.begin(), e.values.end()));
    }
}

TEST_CASE("dense helpers") {
    const DenseMatrix a = random_dense(4, 3, 1), b = random_dense(4, 5, 2), c = random_dense(6, 3, 3);
    CHECK(max_abs_diff(matmul_tn(a, b), matmul(a.transposed(), b)) <= 1e-15);
    CHECK(max_abs_diff(matmul_nt(a, c), matmul(a, c.transposed())) <= 1e-15);
    CHECK(frobenius_dot(a, a) == doctest::Approx(std::pow(frobenius_norm(a), 2)));
    CHECK_THROWS_AS(matmul(a, a), ContractError);
    CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1.0}), ContractError);
}
