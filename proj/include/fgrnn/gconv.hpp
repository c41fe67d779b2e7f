#pragma once

#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/graph.hpp"

namespace fgrnn {

/// Scalar Chebyshev coefficients theta_0..theta_{K-1}. The filter acts on
/// every feature column identically, so it preserves the feature dimension.
struct ChebFilter {
    std::vector<double> coeffs;
    std::size_t order() const noexcept { return coeffs.size(); }
    bool operator==(const ChebFilter&) const = default;
};

/// Feature mixing matrix W (F_in x F_out) applied after node propagation.
struct FeatureTransform {
    DenseMatrix weights;
    bool operator==(const FeatureTransform&) const = default;
};

/// sum_k theta_k T_k(L~) X via the three-term recurrence; T_k(L~) is never formed.
DenseMatrix cheb_conv(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f);

struct ChebGrad {
    DenseMatrix grad_x;
    std::vector<double> grad_coeffs;
};

/// Reverse mode of cheb_conv. L~ is symmetric, so T_k(L~)^T = T_k(L~) and the
/// input gradient reuses the forward recurrence on `upstream`.
ChebGrad cheb_conv_backward(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f,
                            const DenseMatrix& upstream);

/// S X W with S the chosen propagation operator (L~1 by default).
DenseMatrix first_order_conv(const SparseMatrix& op, const DenseMatrix& x, const FeatureTransform& t);
DenseMatrix first_order_conv(const LaplacianSet& lap, const DenseMatrix& x, const FeatureTransform& t);

struct FirstOrderGrad {
    DenseMatrix grad_x;
    DenseMatrix grad_w;
};

/// grad_W = (S X)^T U, grad_X = S U W^T; S must be symmetric.
FirstOrderGrad first_order_conv_backward(const SparseMatrix& op, const DenseMatrix& x, const FeatureTransform& t,
                                         const DenseMatrix& upstream);
FirstOrderGrad first_order_conv_backward(const LaplacianSet& lap, const DenseMatrix& x, const FeatureTransform& t,
                                         const DenseMatrix& upstream);

/// Frequency-domain evaluation of the same Chebyshev filter through a dense
/// eigendecomposition of L~. Test reference only; N <= 64.
DenseMatrix spectral_conv_oracle(const LaplacianSet& lap, const DenseMatrix& x, const ChebFilter& f);

}  // namespace fgrnn
