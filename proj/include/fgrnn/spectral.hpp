#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/sparse.hpp"

namespace fgrnn {

struct PowerIterationResult {
    double value = 0.0;  // Rayleigh quotient at the last iterate (signed)
    bool converged = false;
    std::size_t iterations = 0;
};

/// Largest-magnitude eigenvalue of a symmetric sparse matrix. Iterates until
/// successive Rayleigh quotients differ by less than `tol`; on exhausting
/// `max_iter` returns the last estimate with converged = false.
/// Symmetry is spot-checked on sampled stored entries.
PowerIterationResult power_iteration(const SparseMatrix& a, double tol, std::size_t max_iter,
                                     std::uint64_t seed);

/// Same iteration on an abstract symmetric operator y = op(x) of size n.
PowerIterationResult power_iteration(std::size_t n,
                                     const std::function<void(std::span<const double>, std::span<double>)>& op,
                                     double tol, std::size_t max_iter, std::uint64_t seed);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column j pairs with values[j]
};

inline constexpr std::size_t kDenseEigMaxN = 64;

/// Cyclic Jacobi eigensolver for small dense symmetric matrices (n <= 64).
SymmetricEigen dense_eig_sym(const DenseMatrix& a);

}  // namespace fgrnn
