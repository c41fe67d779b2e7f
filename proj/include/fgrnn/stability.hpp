#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fgrnn/cells.hpp"
#include "fgrnn/dense.hpp"
#include "fgrnn/graph.hpp"

namespace fgrnn {

/// Diagonal of D_t = diag(sigma'(a_t)) for the step consuming x from h_prev.
std::vector<double> activation_slopes(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev,
                                      const DenseMatrix& x);

/// dh_t/dh_{t-1} = alpha D_t u S + beta I for a first_order model with P = 1
/// (scalar recurrent weight u); S is the model's propagation operator.
DenseMatrix step_jacobian(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev,
                          const DenseMatrix& x);

inline constexpr std::size_t kStabilityMaxNodes = 2048;

struct StabilityReport {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t T = 0;
    std::vector<double> per_step_jacobian_norm;  // spectral norm of each factor
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    std::optional<double> condition_number;  // empty when sigma_min == 0
    std::optional<double> bound_M;           // empty when the bound is vacuous
    std::vector<std::vector<double>> slopes; // D_t diagonals of the factors, in order
};

/// Runs the cell over window[0..T-2] from h0 = 0 and forms the T-2 factor
/// product dh_{T-1}/dh_1 = J_{T-1} ... J_2. Extreme singular values come
/// from power iteration on P^T P and on sigma_max^2 I - P^T P.
StabilityReport jacobian_product(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                                 std::size_t T);

/// Dense product only; exposed for tests and oracles.
DenseMatrix jacobian_product_matrix(const ModelParams& p, const LaplacianSet& lap,
                                    std::span<const DenseMatrix> window, std::size_t T,
                                    std::vector<std::vector<double>>* slopes = nullptr);

struct SingularRange {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
};
SingularRange extreme_singular_values(const DenseMatrix& m);

/// ((1 + r) / (1 - r))^(T-2) with r = |alpha / beta| max_t ||D_t u S||_F^2.
/// Empty when beta == 0 or r >= 1.
std::optional<double> condition_bound(const ModelParams& p, std::span<const std::vector<double>> slopes,
                                      const LaplacianSet& lap, std::size_t T);

/// One report per (alpha, beta, T) in lexicographic order of the sorted
/// grids, all on the same seeded random window.
std::vector<StabilityReport> stability_sweep(const Graph& g, const ModelParams& base, std::vector<double> alpha_grid,
                                             std::vector<double> beta_grid, std::vector<std::size_t> T_grid,
                                             std::uint64_t seed);

/// Random input frames shared by every row of a sweep.
std::vector<DenseMatrix> stability_window(std::size_t n_nodes, std::size_t n_features, std::size_t frames,
                                          std::uint64_t seed);

/// "alpha,beta,T,sigma_max,sigma_min,cond,bound_M"; empty optionals print
/// as "inf" (cond) and "undefined" (bound_M).
void write_sweep_csv(std::ostream& os, std::span<const StabilityReport> rows);

}  // namespace fgrnn
