#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fgrnn/dense.hpp"

namespace fgrnn {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix in canonical form: column indices strictly
/// increasing within each row, no duplicate entries. Immutable once built.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Validates every CSR invariant; throws ContractError on violation.
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                 std::vector<std::size_t> col_indices, std::vector<double> values);

    /// Duplicates are summed. Explicit zeros are kept.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
    static SparseMatrix identity(std::size_t n);
    static SparseMatrix from_dense(const DenseMatrix& d, double drop_below = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Stored value at (i, j), or 0 when absent. O(log row length).
    double at(std::size_t i, std::size_t j) const;

    DenseMatrix to_dense() const;

    /// scale * this + shift * I (square matrices only).
    SparseMatrix scaled_shifted(double scale, double shift) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// A * X. Rows of the output are independent, so the OpenMP version is
/// bit-identical to serial::spmm for any thread count.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);

/// y = A * x for a dense vector.
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);

namespace serial {
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);
}  // namespace serial

}  // namespace fgrnn
