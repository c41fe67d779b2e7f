#include "fgrnn/cells.hpp"

#include <cmath>

#include "fgrnn/error.hpp"
#include "fgrnn/rng.hpp"

namespace fgrnn {

std::string_view to_string(ConvFamily f) {
    switch (f) {
        case ConvFamily::chebyshev: return "chebyshev";
        case ConvFamily::first_order: return "first_order";
        case ConvFamily::dense: return "dense";
    }
    return "?";
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

std::string_view to_string(FirstOrderOperator op) {
    return op == FirstOrderOperator::laplacian ? "laplacian" : "adjacency_plus_identity";
}

ConvFamily parse_conv_family(std::string_view s) {
    if (s == "chebyshev") return ConvFamily::chebyshev;
    if (s == "first_order") return ConvFamily::first_order;
    if (s == "dense") return ConvFamily::dense;
    throw ConfigError("unknown family '" + std::string(s) + "' (valid: chebyshev, first_order, dense)");
}

Activation parse_activation(std::string_view s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation '" + std::string(s) + "' (valid: tanh, relu, sigmoid)");
}

FirstOrderOperator parse_first_order_operator(std::string_view s) {
    if (s == "adjacency_plus_identity") return FirstOrderOperator::adjacency_plus_identity;
    if (s == "laplacian") return FirstOrderOperator::laplacian;
    throw ConfigError("unknown propagation operator '" + std::string(s) +
                      "' (valid: adjacency_plus_identity, laplacian)");
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

double activate_derivative(Activation a, double pre) {
    switch (a) {
        case Activation::tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-pre));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

std::size_t ModelParams::hidden_dim() const {
    switch (family) {
        case ConvFamily::chebyshev:
        case ConvFamily::dense: return n_features;
        case ConvFamily::first_order: return std::get<FeatureTransform>(input).weights.cols();
    }
    return 0;
}

void ModelParams::validate() const {
    const std::size_t n = n_nodes();
    require(n >= 1, "ModelParams: bias must have one entry per node");
    require(readout_bias.size() == n, "ModelParams: readout bias length must equal the node count");
    require(n_features >= 1, "ModelParams: n_features must be positive");
    switch (family) {
        case ConvFamily::chebyshev: {
            const auto* w = std::get_if<ChebFilter>(&input);
            const auto* u = std::get_if<ChebFilter>(&recurrent);
            const auto* v = std::get_if<ChebFilter>(&readout);
            require(w && u && v, "ModelParams: chebyshev family needs three Chebyshev filters");
            require(w->order() >= 1 && w->order() == u->order() && u->order() == v->order(),
                    "ModelParams: Chebyshev filters must share one order K >= 1");
            break;
        }
        case ConvFamily::first_order: {
            const auto* w = std::get_if<FeatureTransform>(&input);
            const auto* u = std::get_if<FeatureTransform>(&recurrent);
            const auto* v = std::get_if<FeatureTransform>(&readout);
            require(w && u && v, "ModelParams: first_order family needs three feature transforms");
            const std::size_t p = w->weights.cols();
            require(w->weights.rows() == n_features && p >= 1, "ModelParams: W must be F x P");
            require(u->weights.rows() == p && u->weights.cols() == p, "ModelParams: U must be P x P");
            require(v->weights.rows() == p && v->weights.cols() == n_features, "ModelParams: V must be P x F");
            break;
        }
        case ConvFamily::dense: {
            const auto* w = std::get_if<DenseTransform>(&input);
            const auto* u = std::get_if<DenseTransform>(&recurrent);
            const auto* v = std::get_if<DenseTransform>(&readout);
            require(w && u && v, "ModelParams: dense family needs three dense transforms");
            for (const auto* m : {w, u, v})
                require(m->weights.rows() == n && m->weights.cols() == n, "ModelParams: dense filters must be N x N");
            break;
        }
    }
}

GradientSet GradientSet::zeros_like(const ModelParams& p) {
    auto zero = [](const Filter& f) -> Filter {
        return std::visit(
            [](const auto& v) -> Filter {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, ChebFilter>)
                    return ChebFilter{std::vector<double>(v.coeffs.size(), 0.0)};
                else
                    return T{DenseMatrix(v.weights.rows(), v.weights.cols())};
            },
            f);
    };
    GradientSet g;
    g.input = zero(p.input);
    g.recurrent = zero(p.recurrent);
    g.readout = zero(p.readout);
    g.bias.assign(p.bias.size(), 0.0);
    g.readout_bias.assign(p.readout_bias.size(), 0.0);
    return g;
}

ModelParams init_params(ConvFamily family, std::size_t n_nodes, std::size_t n_features, const InitOptions& opt,
                        std::uint64_t seed) {
    require(n_nodes >= 1 && n_features >= 1, "init_params: dimensions must be positive");
    SplitMix64 rng(seed);
    auto draw = [&](std::size_t count) {
        std::vector<double> v(count);
        for (double& x : v) x = rng.uniform(-opt.filter_range, opt.filter_range);
        return v;
    };
    ModelParams p;
    p.family = family;
    p.activation = opt.activation;
    p.propagation = opt.propagation;
    p.n_features = n_features;
    switch (family) {
        case ConvFamily::chebyshev:
            require(opt.order >= 1, "init_params: Chebyshev order K must be >= 1");
            p.input = ChebFilter{draw(opt.order)};
            p.recurrent = ChebFilter{draw(opt.order)};
            p.readout = ChebFilter{draw(opt.order)};
            break;
        case ConvFamily::first_order: {
            const std::size_t h = opt.hidden_dim;
            require(h >= 1, "init_params: hidden dimension P must be >= 1");
            p.input = FeatureTransform{DenseMatrix(n_features, h, draw(n_features * h))};
            p.recurrent = FeatureTransform{DenseMatrix(h, h, draw(h * h))};
            p.readout = FeatureTransform{DenseMatrix(h, n_features, draw(h * n_features))};
            break;
        }
        case ConvFamily::dense:
            p.input = DenseTransform{DenseMatrix(n_nodes, n_nodes, draw(n_nodes * n_nodes))};
            p.recurrent = DenseTransform{DenseMatrix(n_nodes, n_nodes, draw(n_nodes * n_nodes))};
            p.readout = DenseTransform{DenseMatrix(n_nodes, n_nodes, draw(n_nodes * n_nodes))};
            break;
    }
    p.alpha = opt.alpha;
    p.beta = opt.beta;
    p.bias.assign(n_nodes, 0.0);
    p.readout_bias.assign(n_nodes, 0.0);
    return p;
}

std::size_t scalar_count(const ModelParams& p) {
    std::size_t n = 0;
    for_each_block(p, [&](auto block) { n += block.size(); });
    return n;
}

namespace {

template <typename P>
std::vector<double> flatten_impl(const P& p) {
    std::vector<double> out;
    for_each_block(p, [&](auto block) { out.insert(out.end(), block.begin(), block.end()); });
    return out;
}

void add_bias(DenseMatrix& m, const std::vector<double>& b) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (double& v : m.row(i)) v += b[i];
}

void check_step_inputs(const ModelParams& p, const DenseMatrix& h_prev, const DenseMatrix& x) {
    const std::size_t n = p.n_nodes();
    if (x.rows() != n || x.cols() != p.n_features)
        throw ContractError("fgrnn_step: x must be " + std::to_string(n) + " x " + std::to_string(p.n_features) +
                            ", got " + std::to_string(x.rows()) + " x " + std::to_string(x.cols()));
    if (h_prev.rows() != n || h_prev.cols() != p.hidden_dim())
        throw ContractError("fgrnn_step: h_prev must be " + std::to_string(n) + " x " +
                            std::to_string(p.hidden_dim()));
}

CellStep finish_step(const ModelParams& p, DenseMatrix pre, const DenseMatrix& h_prev, std::size_t step) {
    add_bias(pre, p.bias);
    if (!pre.all_finite()) throw NumericError("non-finite pre-activation", step);
    CellStep s{std::move(pre), DenseMatrix(), DenseMatrix()};
    s.h_tilde = DenseMatrix(s.pre_activation.rows(), s.pre_activation.cols());
    auto a = s.pre_activation.values();
    auto ht = s.h_tilde.values();
    for (std::size_t i = 0; i < a.size(); ++i) ht[i] = activate(p.activation, a[i]);
    s.h = p.alpha * s.h_tilde;
    s.h.axpy(p.beta, h_prev);
    if (!s.h.all_finite()) throw NumericError("non-finite hidden state", step);
    return s;
}

}  // namespace

std::vector<double> flatten(const ModelParams& p) { return flatten_impl(p); }
std::vector<double> flatten(const GradientSet& g) { return flatten_impl(g); }

void unflatten(std::span<const double> flat, ModelParams& p) {
    require(flat.size() == scalar_count(p), "unflatten: length does not match the parameter count");
    std::size_t pos = 0;
    for_each_block(p, [&](auto block) {
        for (double& v : block) v = flat[pos++];
    });
}

DenseMatrix apply_filter(const Filter& f, const LaplacianSet& lap, FirstOrderOperator op, const DenseMatrix& x) {
    return std::visit(
        [&](const auto& v) -> DenseMatrix {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ChebFilter>)
                return cheb_conv(lap, x, v);
            else if constexpr (std::is_same_v<T, FeatureTransform>)
                return first_order_conv(lap.propagation(op), x, v);
            else
                return matmul(v.weights, x);
        },
        f);
}

FilterGrad apply_filter_backward(const Filter& f, const LaplacianSet& lap, FirstOrderOperator op,
                                 const DenseMatrix& x, const DenseMatrix& upstream) {
    return std::visit(
        [&](const auto& v) -> FilterGrad {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ChebFilter>) {
                auto g = cheb_conv_backward(lap, x, v, upstream);
                return {std::move(g.grad_x), ChebFilter{std::move(g.grad_coeffs)}};
            } else if constexpr (std::is_same_v<T, FeatureTransform>) {
                auto g = first_order_conv_backward(lap.propagation(op), x, v, upstream);
                return {std::move(g.grad_x), FeatureTransform{std::move(g.grad_w)}};
            } else {
                return {matmul_tn(v.weights, upstream), DenseTransform{matmul_nt(upstream, x)}};
            }
        },
        f);
}

void accumulate(Filter& dst, const Filter& src) {
    require(dst.index() == src.index(), "accumulate: filter families differ");
    std::visit(
        [&](auto& d) {
            using T = std::decay_t<decltype(d)>;
            const auto& s = std::get<T>(src);
            if constexpr (std::is_same_v<T, ChebFilter>) {
                require(d.coeffs.size() == s.coeffs.size(), "accumulate: filter orders differ");
                for (std::size_t k = 0; k < d.coeffs.size(); ++k) d.coeffs[k] += s.coeffs[k];
            } else {
                d.weights += s.weights;
            }
        },
        dst);
}

DenseMatrix zero_hidden(const ModelParams& p) { return DenseMatrix(p.n_nodes(), p.hidden_dim()); }

CellStep fgrnn_step(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h_prev, const DenseMatrix& x,
                    std::size_t step) {
    require(lap.n_nodes() == p.n_nodes(), "fgrnn_step: graph size differs from the model's node count");
    check_step_inputs(p, h_prev, x);
    DenseMatrix pre = apply_filter(p.input, lap, p.propagation, x);
    pre += apply_filter(p.recurrent, lap, p.propagation, h_prev);
    return finish_step(p, std::move(pre), h_prev, step);
}

CellStep frnn_step(const ModelParams& p, const DenseMatrix& h_prev, const DenseMatrix& x, std::size_t step) {
    require(p.family == ConvFamily::dense, "frnn_step: requires the dense family");
    check_step_inputs(p, h_prev, x);
    DenseMatrix pre = matmul(std::get<DenseTransform>(p.input).weights, x);
    pre += matmul(std::get<DenseTransform>(p.recurrent).weights, h_prev);
    return finish_step(p, std::move(pre), h_prev, step);
}

DenseMatrix readout(const ModelParams& p, const LaplacianSet& lap, const DenseMatrix& h) {
    require(h.rows() == p.n_nodes() && h.cols() == p.hidden_dim(), "readout: hidden state has the wrong shape");
    DenseMatrix out = apply_filter(p.readout, lap, p.propagation, h);
    add_bias(out, p.readout_bias);
    return out;
}

}  // namespace fgrnn
