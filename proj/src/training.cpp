#include "fgrnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fgrnn/error.hpp"

namespace fgrnn {

namespace {

void check_same_dims(const DenseMatrix& a, const DenseMatrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ContractError(std::string(who) + ": prediction and target shapes differ");
}

// d/dx_hat of the step loss.
DenseMatrix loss_gradient(const DenseMatrix& x_hat, const DenseMatrix& x, const LaplacianSet& lap,
                          const LossConfig& loss) {
    DenseMatrix g = x_hat - x;
    g *= 2.0;
    if (loss.lambda_reg != 0.0) g.axpy(2.0 * loss.lambda_reg, spmm(lap.laplacian, x_hat));
    return g;
}

double step_loss(const DenseMatrix& x_hat, const DenseMatrix& x, const LaplacianSet& lap, const LossConfig& loss) {
    return loss.lambda_reg == 0.0 ? prediction_loss(x_hat, x) : graph_regularized_loss(x_hat, x, lap, loss.lambda_reg);
}

void check_window(const ModelParams& p, std::span<const DenseMatrix> window) {
    require(window.size() >= 2, "bptt: window needs at least two frames (T_w >= 1)");
    for (const auto& f : window)
        require(f.rows() == p.n_nodes() && f.cols() == p.n_features, "bptt: window frame has the wrong shape");
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

double prediction_loss(const DenseMatrix& x_hat, const DenseMatrix& x) {
    check_same_dims(x_hat, x, "prediction_loss");
    double s = 0.0;
    auto a = x_hat.values();
    auto b = x.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double graph_regularized_loss(const DenseMatrix& x_hat, const DenseMatrix& x, const LaplacianSet& lap,
                              double lambda_reg) {
    require(lambda_reg >= 0.0, "graph_regularized_loss: lambda must be non-negative");
    const double base = prediction_loss(x_hat, x);
    if (lambda_reg == 0.0) return base;
    require(x_hat.rows() == lap.n_nodes(), "graph_regularized_loss: prediction rows differ from node count");
    return base + lambda_reg * frobenius_dot(x_hat, spmm(lap.laplacian, x_hat));
}

BpttResult bptt(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                const LossConfig& loss) {
    check_window(p, window);
    const std::size_t steps = window.size() - 1;

    std::vector<DenseMatrix> h_prev(steps);
    std::vector<CellStep> cell(steps);
    std::vector<DenseMatrix> x_hat(steps);
    BpttResult out;
    out.step_losses.resize(steps);

    DenseMatrix h = zero_hidden(p);
    for (std::size_t t = 0; t < steps; ++t) {
        h_prev[t] = h;
        cell[t] = fgrnn_step(p, lap, h, window[t], t + 1);
        h = cell[t].h;
        x_hat[t] = readout(p, lap, h);
        out.step_losses[t] = step_loss(x_hat[t], window[t + 1], lap, loss);
        if (!std::isfinite(out.step_losses[t])) throw NumericError("non-finite loss", t + 1);
        out.loss += out.step_losses[t];
    }

    out.grads = GradientSet::zeros_like(p);
    auto& g = out.grads;
    DenseMatrix dh_next(h.rows(), h.cols());
    for (std::size_t t = steps; t-- > 0;) {
        const DenseMatrix dx_hat = loss_gradient(x_hat[t], window[t + 1], lap, loss);
        add_into(g.readout_bias, row_sums(dx_hat));
        auto rv = apply_filter_backward(p.readout, lap, p.propagation, cell[t].h, dx_hat);
        accumulate(g.readout, rv.grad_filter);

        DenseMatrix dh = std::move(rv.grad_x);
        dh += dh_next;
        g.alpha += frobenius_dot(dh, cell[t].h_tilde);
        g.beta += frobenius_dot(dh, h_prev[t]);

        DenseMatrix da = p.alpha * dh;
        {
            auto dav = da.values();
            auto pre = cell[t].pre_activation.values();
            for (std::size_t i = 0; i < dav.size(); ++i) dav[i] *= activate_derivative(p.activation, pre[i]);
        }
        add_into(g.bias, row_sums(da));
        auto wv = apply_filter_backward(p.input, lap, p.propagation, window[t], da);
        accumulate(g.input, wv.grad_filter);
        auto uv = apply_filter_backward(p.recurrent, lap, p.propagation, h_prev[t], da);
        accumulate(g.recurrent, uv.grad_filter);

        dh_next = std::move(uv.grad_x);
        dh_next.axpy(p.beta, dh);
        if (!dh_next.all_finite()) throw NumericError("non-finite gradient", t + 1);
    }
    for (double v : flatten(g))
        if (!std::isfinite(v)) throw NumericError("non-finite parameter gradient", 1);
    return out;
}

double window_loss(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                   const LossConfig& loss) {
    check_window(p, window);
    DenseMatrix h = zero_hidden(p);
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < window.size(); ++t) {
        h = fgrnn_step(p, lap, h, window[t], t + 1).h;
        total += step_loss(readout(p, lap, h), window[t + 1], lap, loss);
    }
    return total;
}

double finite_difference_check(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                               double step, const LossConfig& loss) {
    require(step > 0.0, "finite_difference_check: step must be positive");
    const auto analytic = flatten(bptt(p, lap, window, loss).grads);
    const auto base = flatten(p);
    ModelParams probe = p;
    std::vector<double> flat = base;
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        flat[i] = base[i] + step;
        unflatten(flat, probe);
        const double plus = window_loss(probe, lap, window, loss);
        flat[i] = base[i] - step;
        unflatten(flat, probe);
        const double minus = window_loss(probe, lap, window, loss);
        flat[i] = base[i];
        const double numeric = (plus - minus) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

AdamState AdamState::for_params(const ModelParams& p, const AdamConfig& cfg) {
    AdamState s;
    const std::size_t n = scalar_count(p);
    s.first_moment.assign(n, 0.0);
    s.second_moment.assign(n, 0.0);
    s.beta1 = cfg.beta1;
    s.beta2 = cfg.beta2;
    s.epsilon = cfg.epsilon;
    s.learning_rate = cfg.learning_rate;
    s.lr_decay_per_epoch = cfg.lr_decay_per_epoch;
    return s;
}

void adam_step(AdamState& s, ModelParams& p, const GradientSet& grads) {
    const auto g = flatten(grads);
    auto theta = flatten(p);
    require(g.size() == theta.size() && s.first_moment.size() == theta.size() &&
                s.second_moment.size() == theta.size(),
            "adam_step: optimizer state, gradients and parameters differ in size");
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        s.first_moment[i] = s.beta1 * s.first_moment[i] + (1.0 - s.beta1) * g[i];
        s.second_moment[i] = s.beta2 * s.second_moment[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double m_hat = s.first_moment[i] / c1;
        const double v_hat = s.second_moment[i] / c2;
        theta[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
    unflatten(theta, p);
}

Rollout teacher_forced(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> frames,
                       std::size_t first_target) {
    first_target = std::max<std::size_t>(first_target, 1);
    Rollout r;
    DenseMatrix h = zero_hidden(p);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        h = fgrnn_step(p, lap, h, frames[t], t + 1).h;
        if (t + 1 < first_target) continue;
        DenseMatrix x_hat = readout(p, lap, h);
        r.losses.push_back(prediction_loss(x_hat, frames[t + 1]));
        r.predictions.push_back(std::move(x_hat));
    }
    r.final_hidden = std::move(h);
    return r;
}

std::vector<DenseMatrix> autoregressive(const ModelParams& p, const LaplacianSet& lap,
                                        std::span<const DenseMatrix> context, std::size_t horizon) {
    std::vector<DenseMatrix> out;
    if (horizon == 0) return out;
    require(!context.empty(), "autoregressive: need at least one context frame");
    DenseMatrix h = zero_hidden(p);
    for (std::size_t t = 0; t < context.size(); ++t) h = fgrnn_step(p, lap, h, context[t], t + 1).h;
    DenseMatrix x_hat = readout(p, lap, h);
    for (std::size_t k = 0; k < horizon; ++k) {
        out.push_back(x_hat);
        if (k + 1 == horizon) break;
        h = fgrnn_step(p, lap, h, x_hat, context.size() + k + 1).h;
        x_hat = readout(p, lap, h);
    }
    return out;
}

std::string_view to_string(GraphSource s) { return s == GraphSource::mean_frame ? "mean_frame" : "first_frame"; }

GraphSource parse_graph_source(std::string_view s) {
    if (s == "first_frame") return GraphSource::first_frame;
    if (s == "mean_frame") return GraphSource::mean_frame;
    throw ConfigError("unknown graph source '" + std::string(s) + "' (valid: first_frame, mean_frame)");
}

void TrainConfig::validate() const {
    if (window < 1) throw ConfigError("T_w must be at least 1");
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
    if (family == ConvFamily::chebyshev && order < 1) throw ConfigError("K must be at least 1");
    if (family == ConvFamily::first_order && hidden_dim < 1) throw ConfigError("P must be at least 1");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("lr must be positive");
    if (!(adam.lr_decay_per_epoch > 0.0)) throw ConfigError("lr_decay must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw ConfigError("Adam moment decays must lie in [0, 1)");
    if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be non-negative");
}

TrainState initial_state(const TrainConfig& cfg, std::size_t n_nodes, std::size_t n_features) {
    InitOptions opt;
    opt.order = cfg.order;
    opt.hidden_dim = cfg.hidden_dim;
    opt.filter_range = cfg.init_range;
    opt.alpha = cfg.init_alpha;
    opt.beta = cfg.init_beta;
    opt.activation = cfg.activation;
    opt.propagation = cfg.propagation;
    TrainState s;
    s.params = init_params(cfg.family, n_nodes, n_features, opt, cfg.seed);
    s.adam = AdamState::for_params(s.params, cfg.adam);
    return s;
}

std::vector<WindowSpan> training_windows(std::size_t n_frames, std::size_t window, std::size_t stride) {
    require(window >= 1 && stride >= 1, "training_windows: window and stride must be positive");
    std::vector<WindowSpan> out;
    if (n_frames < 2) return out;
    if (n_frames < window + 1) return {{0, n_frames}};
    for (std::size_t s = 0; s + window < n_frames; s += stride) out.push_back({s, window + 1});
    return out;
}

Graph graph_from_training_frames(const FrameSequence& data, double split, GraphSource source, std::size_t k) {
    require(data.n_frames() >= 1, "graph_from_training_frames: no frames");
    if (source == GraphSource::first_frame) return build_knn_graph(data[0], k);
    const std::size_t n_train = std::max<std::size_t>(1, split_index(data.n_frames(), split));
    DenseMatrix mean(data.n_nodes(), data.n_features());
    for (std::size_t t = 0; t < n_train; ++t) mean += data[t];
    mean *= 1.0 / static_cast<double>(n_train);
    return build_knn_graph(mean, k);
}

TrainRun train(const TrainConfig& cfg, const FrameSequence& data, const Graph& g, std::optional<TrainState> resume) {
    cfg.validate();
    if (g.n_nodes() != data.n_nodes())
        throw ConfigError("graph has " + std::to_string(g.n_nodes()) + " nodes but frames have " +
                          std::to_string(data.n_nodes()));
    const double min_frames = 2.0 / (1.0 - cfg.split);
    if (static_cast<double>(data.n_frames()) < min_frames)
        throw ConfigError("dataset has " + std::to_string(data.n_frames()) + " frames; need at least " +
                          std::to_string(static_cast<std::size_t>(std::ceil(min_frames))) + " for split " +
                          std::to_string(cfg.split));

    const LaplacianSet lap = build_laplacians(g);
    const std::size_t n_train = split_index(data.n_frames(), cfg.split);
    if (n_train < 2 || n_train >= data.n_frames()) throw ConfigError("split leaves a partition too small to train");
    const auto train_frames = data.slice(0, n_train);
    const auto windows = training_windows(n_train, cfg.window, cfg.effective_stride());
    const LossConfig loss{cfg.lambda_reg};

    TrainRun run;
    run.config = cfg;
    run.state = resume ? std::move(*resume) : initial_state(cfg, data.n_nodes(), data.n_features());
    run.state.params.validate();
    if (run.state.params.n_nodes() != data.n_nodes() || run.state.params.n_features != data.n_features())
        throw ConfigError("resumed model shape does not match the data");
    run.baseline_test_loss = copy_last_baseline(data, n_train);

    auto& p = run.state.params;
    auto& adam = run.state.adam;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        EpochRecord rec;
        rec.epoch = run.state.epochs_completed + 1;
        rec.lr = adam.learning_rate;
        try {
            double total = 0.0;
            std::size_t transitions = 0;
            for (const auto& w : windows) {
                const auto r = bptt(p, lap, train_frames.subspan(w.start, w.length), loss);
                adam_step(adam, p, r.grads);
                total += r.loss;
                transitions += w.length - 1;
            }
            rec.train_loss = transitions ? total / static_cast<double>(transitions) : 0.0;
            const auto test = teacher_forced(p, lap, data.frames(), n_train);
            double sum = 0.0;
            for (double l : test.losses) sum += l;
            rec.test_loss = sum / static_cast<double>(test.losses.size());
            if (!std::isfinite(rec.test_loss) || !std::isfinite(rec.train_loss))
                throw NumericError("non-finite epoch loss", rec.epoch);
        } catch (const NumericError& err) {
            run.failure = "epoch " + std::to_string(rec.epoch) + ": " + err.what();
            break;
        }
        rec.alpha = p.alpha;
        rec.beta = p.beta;
        adam.end_epoch();
        ++run.state.epochs_completed;
        run.history.push_back(rec);
    }
    return run;
}

ParamFamily parse_param_family(std::string_view s) {
    if (s == "chebyshev") return ParamFamily::chebyshev;
    if (s == "first_order") return ParamFamily::first_order;
    if (s == "dense" || s == "dense_frnn") return ParamFamily::dense_frnn;
    if (s == "lstm_dense") return ParamFamily::lstm_dense;
    if (s == "lstm_gcn") return ParamFamily::lstm_gcn;
    throw ContractError("unknown family '" + std::string(s) +
                        "' (valid: chebyshev, first_order, dense_frnn, lstm_dense, lstm_gcn)");
}

std::size_t count_params(ParamFamily family, std::size_t n, std::size_t k, std::size_t p) {
    require(n >= 1, "count_params: N must be positive");
    if (family == ParamFamily::chebyshev || family == ParamFamily::lstm_gcn)
        require(k >= 1, "count_params: K must be positive");
    if (family == ParamFamily::first_order) require(p >= 1, "count_params: P must be positive");
    switch (family) {
        case ParamFamily::chebyshev: return 3 * k + 2 * n + 2;
        case ParamFamily::first_order: return 3 * p * p + 2 * n + 2;
        case ParamFamily::dense_frnn: return 3 * n * n + 2 * n + 2;
        case ParamFamily::lstm_dense: return 8 * n * n + 4 * n;
        case ParamFamily::lstm_gcn: return 4 * n + 8 * k;
    }
    throw ContractError("count_params: unknown family");
}

}  // namespace fgrnn
