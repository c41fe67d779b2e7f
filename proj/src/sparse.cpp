#include "fgrnn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fgrnn/error.hpp"

namespace fgrnn {

namespace {

constexpr std::size_t kParallelWork = 1 << 14;

inline void spmm_row(const SparseMatrix& a, const DenseMatrix& x, DenseMatrix& y, std::size_t i) {
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    auto out = y.row(i);
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
        const double v = vals[p];
        auto xrow = x.row(cols[p]);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += v * xrow[j];
    }
}

void check_spmm(const SparseMatrix& a, const DenseMatrix& x) {
    if (a.cols() != x.rows())
        throw ContractError("spmm: A has " + std::to_string(a.cols()) + " columns but X has " +
                            std::to_string(x.rows()) + " rows");
}

}  // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    require(row_offsets_.size() == rows_ + 1, "SparseMatrix: row_offsets must have n_rows+1 entries");
    require(row_offsets_.front() == 0, "SparseMatrix: row_offsets[0] must be 0");
    require(row_offsets_.back() == values_.size() && col_indices_.size() == values_.size(),
            "SparseMatrix: row_offsets[n_rows], col_indices and values disagree on nnz");
    for (std::size_t i = 0; i < rows_; ++i) {
        require(row_offsets_[i] <= row_offsets_[i + 1], "SparseMatrix: row_offsets must be non-decreasing");
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            require(col_indices_[p] < cols_, "SparseMatrix: column index out of range");
            if (p > row_offsets_[i])
                require(col_indices_[p - 1] < col_indices_[p],
                        "SparseMatrix: column indices must be strictly increasing within a row");
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    for (const auto& t : entries)
        require(t.row < rows && t.col < cols, "SparseMatrix::from_triplets: index out of range");
    std::sort(entries.begin(), entries.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> vals;
    col_idx.reserve(entries.size());
    vals.reserve(entries.size());
    std::size_t prev_row = rows;
    std::size_t prev_col = cols;
    for (const auto& t : entries) {
        if (t.row == prev_row && t.col == prev_col) {
            vals.back() += t.value;
            continue;
        }
        col_idx.push_back(t.col);
        vals.push_back(t.value);
        ++offsets[t.row + 1];
        prev_row = t.row;
        prev_col = t.col;
    }
    for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
    return SparseMatrix(rows, cols, std::move(offsets), std::move(col_idx), std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<std::size_t> offsets(n + 1);
    std::vector<std::size_t> cols(n);
    for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) cols[i] = i;
    return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d, double drop_below) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            if (std::abs(d(i, j)) > drop_below) t.push_back({i, j, d(i, j)});
    return from_triplets(d.rows(), d.cols(), std::move(t));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    require(i < rows_ && j < cols_, "SparseMatrix::at: index out of range");
    auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) d(i, col_indices_[p]) = values_[p];
    return d;
}

SparseMatrix SparseMatrix::scaled_shifted(double scale, double shift) const {
    require(rows_ == cols_, "SparseMatrix::scaled_shifted: matrix must be square");
    std::vector<Triplet> t;
    t.reserve(nnz() + rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
            t.push_back({i, col_indices_[p], scale * values_[p]});
        if (shift != 0.0) t.push_back({i, i, shift});
    }
    return from_triplets(rows_, cols_, std::move(t));
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
    check_spmm(a, x);
    DenseMatrix y(a.rows(), x.cols());
    const auto n = static_cast<long long>(a.rows());
    const bool parallel = a.nnz() * x.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (long long i = 0; i < n; ++i) spmm_row(a, x, y, static_cast<std::size_t>(i));
    return y;
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
    require(a.cols() == x.size(), "spmv: dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) s += vals[p] * x[cols[p]];
        y[i] = s;
    }
    return y;
}

namespace serial {

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
    check_spmm(a, x);
    DenseMatrix y(a.rows(), x.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) spmm_row(a, x, y, i);
    return y;
}

}  // namespace serial

}  // namespace fgrnn
