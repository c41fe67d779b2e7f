#include "fgrnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgrnn/error.hpp"
#include "fgrnn/rng.hpp"

namespace fgrnn {

namespace {

void check_sampled_symmetry(const SparseMatrix& a, std::uint64_t seed) {
    if (a.nnz() == 0) return;
    SplitMix64 rng(seed ^ 0x5bd1e995ULL);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    const std::size_t samples = std::min<std::size_t>(a.nnz(), 64);
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t p = static_cast<std::size_t>(rng.below(a.nnz()));
        const auto row_it = std::upper_bound(offsets.begin(), offsets.end(), p);
        const std::size_t i = static_cast<std::size_t>(row_it - offsets.begin()) - 1;
        const std::size_t j = cols[p];
        const double aij = vals[p];
        const double aji = a.at(j, i);
        if (std::abs(aij - aji) > 1e-12 * std::max({1.0, std::abs(aij), std::abs(aji)}))
            throw ContractError("power_iteration: matrix is not symmetric at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
    }
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

PowerIterationResult power_iteration(std::size_t n,
                                     const std::function<void(std::span<const double>, std::span<double>)>& op,
                                     double tol, std::size_t max_iter, std::uint64_t seed) {
    require(n >= 1, "power_iteration: empty operator");
    require(tol > 0.0, "power_iteration: tolerance must be positive");
    SplitMix64 rng(seed);
    std::vector<double> x(n), y(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0) + 1e-3;
    {
        const double nx = norm2(x);
        for (double& v : x) v /= nx;
    }
    PowerIterationResult result;
    double prev = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        op(x, y);
        const double rq = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        result.value = rq;
        result.iterations = it;
        const double ny = norm2(y);
        if (ny == 0.0) {
            result.value = 0.0;
            result.converged = true;
            return result;
        }
        if (it > 1 && std::abs(rq - prev) < tol) {
            result.converged = true;
            return result;
        }
        prev = rq;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    }
    return result;
}

PowerIterationResult power_iteration(const SparseMatrix& a, double tol, std::size_t max_iter,
                                     std::uint64_t seed) {
    require(a.rows() == a.cols(), "power_iteration: matrix must be square");
    require(a.rows() >= 1, "power_iteration: matrix must have at least one row");
    check_sampled_symmetry(a, seed);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    return power_iteration(
        a.rows(),
        [&](std::span<const double> x, std::span<double> y) {
            for (std::size_t i = 0; i < a.rows(); ++i) {
                double s = 0.0;
                for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) s += vals[p] * x[cols[p]];
                y[i] = s;
            }
        },
        tol, max_iter, seed);
}

SymmetricEigen dense_eig_sym(const DenseMatrix& input) {
    const std::size_t n = input.rows();
    require(input.cols() == n, "dense_eig_sym: matrix must be square");
    require(n <= kDenseEigMaxN, "dense_eig_sym: limited to n <= 64");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) > 1e-12)
                throw ContractError("dense_eig_sym: matrix is not symmetric");

    DenseMatrix a = input;
    DenseMatrix v = DenseMatrix::identity(n);
    const double scale = std::max(frobenius_norm(a), 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= 1e-15 * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation zeroing a(p,q); t is the smaller root of t^2 + 2*theta*t - 1 = 0.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymmetricEigen out{std::vector<double>(n), DenseMatrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

}  // namespace fgrnn
