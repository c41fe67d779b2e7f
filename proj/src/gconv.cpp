#include "fgrnn/gconv.hpp"

#include <cmath>
#include <string>

#include "fgrnn/error.hpp"
#include "fgrnn/spectral.hpp"

namespace fgrnn {

namespace {

void check_cheb(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f) {
    require(f.order() >= 1, "cheb_conv: filter needs at least one coefficient");
    if (x.rows() != lap.n_nodes())
        throw ContractError("cheb_conv: X has " + std::to_string(x.rows()) + " rows, graph has " +
                            std::to_string(lap.n_nodes()) + " nodes");
}

// Calls visit(k, T_k(L~) x) for k = 0..order-1 keeping two recurrence buffers.
template <typename Visit>
void chebyshev_terms(const SparseMatrix& scaled, const DenseMatrix& x, std::size_t order, Visit&& visit) {
    DenseMatrix prev2 = x;
    visit(0, prev2);
    if (order == 1) return;
    DenseMatrix prev1 = spmm(scaled, x);
    visit(1, prev1);
    for (std::size_t k = 2; k < order; ++k) {
        DenseMatrix next = spmm(scaled, prev1);
        next *= 2.0;
        next -= prev2;
        visit(k, next);
        prev2 = std::move(prev1);
        prev1 = std::move(next);
    }
}

}  // namespace

DenseMatrix cheb_conv(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f) {
    check_cheb(lap, x, f);
    DenseMatrix out(x.rows(), x.cols());
    chebyshev_terms(lap.scaled, x, f.order(), [&](std::size_t k, const DenseMatrix& tk) {
        out.axpy(f.coeffs[k], tk);
    });
    return out;
}

ChebGrad cheb_conv_backward(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f,
                            const DenseMatrix& upstream) {
    check_cheb(lap, x, f);
    require(upstream.rows() == x.rows() && upstream.cols() == x.cols(),
            "cheb_conv_backward: upstream shape differs from output shape");
    ChebGrad g{DenseMatrix(x.rows(), x.cols()), std::vector<double>(f.order(), 0.0)};
    chebyshev_terms(lap.scaled, x, f.order(), [&](std::size_t k, const DenseMatrix& tk) {
        g.grad_coeffs[k] = frobenius_dot(tk, upstream);
    });
    chebyshev_terms(lap.scaled, upstream, f.order(), [&](std::size_t k, const DenseMatrix& tk) {
        g.grad_x.axpy(f.coeffs[k], tk);
    });
    return g;
}

DenseMatrix first_order_conv(const SparseMatrix& op, const DenseMatrix& x, const FeatureTransform& t) {
    if (x.rows() != op.cols())
        throw ContractError("first_order_conv: X has " + std::to_string(x.rows()) + " rows, operator has " +
                            std::to_string(op.cols()) + " columns");
    if (t.weights.rows() != x.cols())
        throw ContractError("first_order_conv: W has " + std::to_string(t.weights.rows()) + " rows, X has " +
                            std::to_string(x.cols()) + " columns");
    return matmul(spmm(op, x), t.weights);
}

DenseMatrix first_order_conv(const LaplacianSet& lap, const DenseMatrix& x, const FeatureTransform& t) {
    return first_order_conv(lap.first_order, x, t);
}

FirstOrderGrad first_order_conv_backward(const SparseMatrix& op, const DenseMatrix& x, const FeatureTransform& t,
                                         const DenseMatrix& upstream) {
    require(x.rows() == op.cols() && t.weights.rows() == x.cols(), "first_order_conv_backward: dimension mismatch");
    require(upstream.rows() == op.rows() && upstream.cols() == t.weights.cols(),
            "first_order_conv_backward: upstream shape differs from output shape");
    return {spmm(op, matmul_nt(upstream, t.weights)), matmul_tn(spmm(op, x), upstream)};
}

FirstOrderGrad first_order_conv_backward(const LaplacianSet& lap, const DenseMatrix& x, const FeatureTransform& t,
                                         const DenseMatrix& upstream) {
    return first_order_conv_backward(lap.first_order, x, t, upstream);
}

DenseMatrix spectral_conv_oracle(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f) {
    check_cheb(lap, x, f);
    require(lap.n_nodes() <= kDenseEigMaxN, "spectral_conv_oracle: limited to N <= 64");
    const auto eig = dense_eig_sym(lap.scaled.to_dense());
    const std::size_t n = eig.values.size();
    // Filter response g(lambda) = sum_k theta_k T_k(lambda) evaluated per eigenvalue.
    std::vector<double> response(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = eig.values[i];
        double t0 = 1.0;
        double t1 = lam;
        double acc = f.coeffs[0] * t0;
        for (std::size_t k = 1; k < f.order(); ++k) {
            if (k > 1) {
                const double t2 = 2.0 * lam * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            acc += f.coeffs[k] * t1;
        }
        response[i] = acc;
    }
    DenseMatrix spectrum = matmul_tn(eig.vectors, x);  // V^T X
    for (std::size_t i = 0; i < n; ++i)
        for (double& v : spectrum.row(i)) v *= response[i];
    return matmul(eig.vectors, spectrum);
}

}  // namespace fgrnn
