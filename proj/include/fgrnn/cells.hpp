#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/gconv.hpp"
#include "fgrnn/graph.hpp"

namespace fgrnn {

enum class ConvFamily { chebyshev, first_order, dense };
enum class Activation { tanh, relu, sigmoid };

/// Left-multiplying dense matrix (Y = W X) used by the regular-domain FRNN baseline.
struct DenseTransform {
    DenseMatrix weights;
    bool operator==(const DenseTransform&) const = default;
};

using Filter = std::variant<ChebFilter, FeatureTransform, DenseTransform>;

std::string_view to_string(ConvFamily f);
std::string_view to_string(Activation a);
std::string_view to_string(FirstOrderOperator op);
ConvFamily parse_conv_family(std::string_view s);
Activation parse_activation(std::string_view s);
FirstOrderOperator parse_first_order_operator(std::string_view s);

double activate(Activation a, double x);
/// Derivative with respect to the pre-activation. relu'(0) is taken as 0.
double activate_derivative(Activation a, double pre);

/// Trainable set {W, U, V, alpha, beta, b, z} plus the fixed choices that
/// shape it. Hidden states are per-node: N x P.
///   chebyshev:   W, U, V are K coefficients; P = F.
///   first_order: W is F x P, U is P x P, V is P x F.
///   dense:       W, U, V are N x N; the hidden state has N rows.
struct ModelParams {
    ConvFamily family = ConvFamily::chebyshev;
    Activation activation = Activation::tanh;
    FirstOrderOperator propagation = FirstOrderOperator::adjacency_plus_identity;
    std::size_t n_features = 0;

    Filter input;
    Filter recurrent;
    Filter readout;
    double alpha = 0.5;
    double beta = 0.5;
    std::vector<double> bias;          // b, length N
    std::vector<double> readout_bias;  // z, length N

    std::size_t n_nodes() const noexcept { return bias.size(); }
    std::size_t hidden_dim() const;

    /// Throws ContractError when filter families or shapes are inconsistent.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

/// Gradients of a loss with respect to every entry of ModelParams, stored
/// with identical shapes.
struct GradientSet {
    Filter input;
    Filter recurrent;
    Filter readout;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> bias;
    std::vector<double> readout_bias;

    static GradientSet zeros_like(const ModelParams& p);
};

struct InitOptions {
    std::size_t order = 3;        // K, chebyshev
    std::size_t hidden_dim = 3;   // P, first_order
    double filter_range = 0.1;    // filters ~ U[-range, range]
    double alpha = 0.5;
    double beta = 0.5;
    Activation activation = Activation::tanh;
    FirstOrderOperator propagation = FirstOrderOperator::adjacency_plus_identity;
};

ModelParams init_params(ConvFamily family, std::size_t n_nodes, std::size_t n_features, const InitOptions& opt,
                        std::uint64_t seed);

/// Visits the scalar blocks of a ModelParams or GradientSet in the fixed
/// order W, U, V, alpha, beta, b, z.
template <typename Params, typename Fn>
void for_each_block(Params& p, Fn&& fn) {
    auto filter_span = [](auto& f) {
        return std::visit(
            [](auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, ChebFilter>)
                    return std::span(v.coeffs);
                else
                    return v.weights.values();
            },
            f);
    };
    fn(filter_span(p.input));
    fn(filter_span(p.recurrent));
    fn(filter_span(p.readout));
    fn(std::span(&p.alpha, 1));
    fn(std::span(&p.beta, 1));
    fn(std::span(p.bias));
    fn(std::span(p.readout_bias));
}

std::size_t scalar_count(const ModelParams& p);
std::vector<double> flatten(const ModelParams& p);
std::vector<double> flatten(const GradientSet& g);
void unflatten(std::span<const double> flat, ModelParams& p);

/// Applies one family filter to a signal (input, recurrent or readout role).
DenseMatrix apply_filter(const Filter& f, const LaplacianSet& lap, FirstOrderOperator op, const DenseMatrix& x);

struct FilterGrad {
    DenseMatrix grad_x;
    Filter grad_filter;
};
FilterGrad apply_filter_backward(const Filter& f, const LaplacianSet& lap, FirstOrderOperator op,
                                 const DenseMatrix& x, const DenseMatrix& upstream);

/// Adds `src` into `dst`; both must hold the same alternative and shape.
void accumulate(Filter& dst, const Filter& src);

struct CellStep {
    DenseMatrix pre_activation;  // a = conv(x; W) + conv(h_prev; U) + b 1^T
    DenseMatrix h_tilde;         // sigma(a)
    DenseMatrix h;               // alpha h_tilde + beta h_prev
};

DenseMatrix zero_hidden(const ModelParams& p);

/// One recurrent update. `step` only labels NumericError messages.
CellStep fgrnn_step(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev, const DenseMatrix& x,
                    std::size_t step = 0);

/// Dense-family update on per-graph signals; same equations as fgrnn_step
/// with W, U acting as left-multiplying matrices.
CellStep frnn_step(const ModelParams& p, const DenseMatrix& h_prev, const DenseMatrix& x, std::size_t step = 0);

/// x_hat = conv(h; V) + z 1^T.
DenseMatrix readout(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h);

}  // namespace fgrnn
