#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fgrnn/data.hpp"
#include "fgrnn/error.hpp"
#include "fgrnn/training.hpp"
#include "helpers.hpp"

using namespace fgrnn;
using testutil::random_dense;

namespace {

std::vector<DenseMatrix> random_window(std::size_t n, std::size_t f, std::size_t frames, std::uint64_t seed,
                                       double lo = -1.0) {
    std::vector<DenseMatrix> w;
    for (std::size_t t = 0; t < frames; ++t) w.push_back(random_dense(n, f, seed * 1000 + t, lo, 1.0));
    return w;
}

ModelParams model(ConvFamily fam, std::size_t n, std::size_t f, std::uint64_t seed, Activation act = Activation::tanh) {
    InitOptions opt;
    opt.order = 3;
    opt.hidden_dim = 2;
    opt.filter_range = 0.4;
    opt.activation = act;
    opt.alpha = 0.8;
    opt.beta = 0.3;
    ModelParams p = init_params(fam, n, f, opt, seed);
    SplitMix64 rng(seed ^ 0x55);
    for (double& b : p.bias) b = rng.uniform(-0.2, 0.2);
    for (double& z : p.readout_bias) z = rng.uniform(-0.2, 0.2);
    return p;
}

FrameSequence constant_sequence(std::size_t n, std::size_t frames, std::uint64_t seed) {
    const DenseMatrix x = random_dense(n, 3, seed);
    FrameSequence s(n, 3);
    for (std::size_t t = 0; t < frames; ++t) s.push_back(x);
    return s;
}

}  // namespace

TEST_CASE("prediction loss") {
    const DenseMatrix x = random_dense(4, 3, 1);
    CHECK(prediction_loss(x, x) == 0.0);
    CHECK(prediction_loss(DenseMatrix(2, 3, 1.0), DenseMatrix(2, 3)) == 6.0);
    const DenseMatrix y = random_dense(4, 3, 2);
    double ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ref += std::pow(x.values()[i] - y.values()[i], 2);
    CHECK(std::abs(prediction_loss(x, y) - ref) <= 1e-12);
    CHECK_THROWS_AS(prediction_loss(x, DenseMatrix(4, 2)), ContractError);
}

TEST_CASE("graph regularized loss") {
    const auto ring = build_laplacians(testutil::ring_graph(8));
    const DenseMatrix xh = random_dense(8, 3, 3), x = random_dense(8, 3, 4);
    CHECK(graph_regularized_loss(xh, x, ring, 0.0) == prediction_loss(xh, x));

    DenseMatrix constant(8, 3);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t c = 0; c < 3; ++c) constant(i, c) = 1.0 + static_cast<double>(c);
    CHECK(std::abs(graph_regularized_loss(constant, constant, ring, 5.0)) <= 1e-12);

    const auto lap = build_laplacians(testutil::random_knn_graph(12, 3, 5));
    const DenseMatrix a = random_dense(12, 3, 6), b = random_dense(12, 3, 7);
    const double quad = frobenius_dot(a, matmul(lap.laplacian.to_dense(), a));
    CHECK(std::abs(graph_regularized_loss(a, b, lap, 0.3) - (prediction_loss(a, b) + 0.3 * quad)) <= 1e-10);
}

TEST_CASE("bptt on self-consistent targets has zero loss and gradient") {
    for (ConvFamily fam : {ConvFamily::chebyshev, ConvFamily::first_order}) {
        const auto lap = build_laplacians(testutil::random_knn_graph(6, 2, 8));
        const ModelParams p = model(fam, 6, 3, 9);
        std::vector<DenseMatrix> w{random_dense(6, 3, 10)};
        DenseMatrix h = zero_hidden(p);
        for (std::size_t t = 0; t < 4; ++t) {
            h = fgrnn_step(p, lap, h, w.back()).h;
            w.push_back(readout(p, lap, h));
        }
        const BpttResult r = bptt(p, lap, w);
        CHECK(r.loss == 0.0);
        CHECK(r.step_losses.size() == 4);
        for (double g : flatten(r.grads)) CHECK(g == 0.0);
    }
}

TEST_CASE("bptt loss matches the forward-only objective") {
    const auto lap = build_laplacians(testutil::random_knn_graph(7, 2, 11));
    const ModelParams p = model(ConvFamily::first_order, 7, 3, 12);
    const auto w = random_window(7, 3, 6, 13);
    const LossConfig reg{0.2};
    CHECK(bptt(p, lap, w, reg).loss == doctest::Approx(window_loss(p, lap, w, reg)).epsilon(1e-14));
    CHECK_THROWS_AS(bptt(p, lap, std::span(w).first(1)), ContractError);
}

TEST_CASE("finite-difference check: linear regime is exact") {
    // relu with all-positive pre-activations: inputs, filters and bias are positive
    const auto lap = build_laplacians(testutil::random_knn_graph(6, 2, 14));
    ModelParams p = model(ConvFamily::chebyshev, 6, 3, 15, Activation::relu);
    p.input = ChebFilter{{0.5, 0.1, 0.05}};
    p.recurrent = ChebFilter{{0.3, 0.05, 0.02}};
    for (double& b : p.bias) b = 1.0;
    const auto w = random_window(6, 3, 4, 16, 0.0);
    CHECK(finite_difference_check(p, lap, w, 1e-5) < 1e-8);
}

TEST_CASE("finite-difference check on random instances") {
    for (std::uint64_t s = 0; s < 12; ++s) {
        const ConvFamily fam = s % 2 ? ConvFamily::first_order : ConvFamily::chebyshev;
        const Activation act = (s / 2) % 2 ? Activation::relu : Activation::tanh;
        const std::size_t n = s % 3 ? 12 : 4;
        const auto lap = build_laplacians(testutil::random_knn_graph(n, 2, 20 + s));
        const ModelParams p = model(fam, n, 3, 30 + s, act);
        const auto w = random_window(n, 3, 2 + (s % 3) * 3, 40 + s);  // T_w in {1, 4, 7}
        CHECK(finite_difference_check(p, lap, w, 1e-5, {s % 4 == 0 ? 0.1 : 0.0}) < 1e-6);
    }
}

TEST_CASE("finite-difference check can fail") {
    const auto lap = build_laplacians(testutil::random_knn_graph(6, 2, 50));
    const ModelParams p = model(ConvFamily::chebyshev, 6, 3, 51);
    const auto w = random_window(6, 3, 5, 52);
    const double fine = finite_difference_check(p, lap, w, 1e-5);
    const double coarse = finite_difference_check(p, lap, w, 1e-1);
    CHECK(coarse > 1e-4);
    CHECK(coarse > 100 * fine);
}

TEST_CASE("gradient descent with a small step lowers the loss") {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const ConvFamily fam = s % 2 ? ConvFamily::first_order : ConvFamily::chebyshev;
        const auto lap = build_laplacians(testutil::random_knn_graph(8, 2, 60 + s));
        ModelParams p = model(fam, 8, 3, 70 + s);
        const auto w = random_window(8, 3, 6, 80 + s);
        const double start = window_loss(p, lap, w);
        for (int it = 0; it < 50; ++it) {
            const auto g = flatten(bptt(p, lap, w).grads);
            auto flat = flatten(p);
            for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= 1e-4 * g[i];
            unflatten(flat, p);
        }
        CHECK(window_loss(p, lap, w) < start);
    }
}

TEST_CASE("adam examples") {
    ModelParams p = model(ConvFamily::chebyshev, 4, 3, 90);
    const ModelParams before = p;
    AdamState st = AdamState::for_params(p, AdamConfig{});
    adam_step(st, p, GradientSet::zeros_like(p));
    CHECK(p == before);
    CHECK(st.step == 1);

    GradientSet g = GradientSet::zeros_like(p);
    g.alpha = 3.0;
    g.beta = -250.0;
    adam_step(st = AdamState::for_params(p, AdamConfig{}), p, g);
    CHECK(p.alpha - before.alpha == doctest::Approx(-1e-2).epsilon(1e-6));
    CHECK(p.beta - before.beta == doctest::Approx(1e-2).epsilon(1e-6));

    st.end_epoch();
    CHECK(st.learning_rate == doctest::Approx(9e-3));
}

TEST_CASE("training windows") {
    CHECK(training_windows(21, 10, 10) == std::vector<WindowSpan>{{0, 11}, {10, 11}});
    CHECK(training_windows(25, 10, 5).size() == 3);
    CHECK(training_windows(5, 10, 10) == std::vector<WindowSpan>{{0, 5}});
    CHECK(training_windows(1, 10, 10).empty());
}

TEST_CASE("split sizes") {
    CHECK(split_index(573, 0.8) == 458);
    const FrameSequence s = constant_sequence(5, 573, 1);
    const auto sp = split_train_test(s, 0.8);
    CHECK(sp.train.n_frames() == 458);
    CHECK(sp.test.n_frames() == 115);
}

TEST_CASE("zero epochs returns the initialization") {
    const auto syn = generate_synthetic([] {
        SyntheticConfig c;
        c.n_nodes = 24;
        c.n_frames = 40;
        return c;
    }());
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainRun run = train(cfg, syn.frames, syn.graph);
    CHECK(run.history.empty());
    CHECK(run.state.params == initial_state(cfg, 24, 3).params);
    CHECK(run.baseline_test_loss > 0.0);
}

TEST_CASE("training is deterministic") {
    SyntheticConfig sc;
    sc.n_nodes = 32;
    sc.n_frames = 60;
    const auto syn = generate_synthetic(sc);
    for (ConvFamily fam : {ConvFamily::chebyshev, ConvFamily::first_order}) {
        TrainConfig cfg;
        cfg.family = fam;
        cfg.epochs = 3;
        const TrainRun a = train(cfg, syn.frames, syn.graph), b = train(cfg, syn.frames, syn.graph);
        REQUIRE(a.history.size() == 3);
        for (std::size_t e = 0; e < 3; ++e) {
            CHECK(a.history[e].train_loss == b.history[e].train_loss);
            CHECK(a.history[e].test_loss == b.history[e].test_loss);
            CHECK(a.history[e].lr == b.history[e].lr);
        }
        CHECK(a.state.params == b.state.params);
    }
}

TEST_CASE("resume continues exactly") {
    SyntheticConfig sc;
    sc.n_nodes = 20;
    sc.n_frames = 50;
    const auto syn = generate_synthetic(sc);
    TrainConfig cfg;
    cfg.epochs = 4;
    const TrainRun whole = train(cfg, syn.frames, syn.graph);
    cfg.epochs = 2;
    const TrainRun first = train(cfg, syn.frames, syn.graph);
    const TrainRun second = train(cfg, syn.frames, syn.graph, first.state);
    REQUIRE(second.history.size() == 2);
    CHECK(second.history[0].epoch == 3);
    CHECK(second.history[1].test_loss == whole.history[3].test_loss);
    CHECK(second.state.params == whole.state.params);
}

TEST_CASE("constant sequence is learned") {
    const FrameSequence s = constant_sequence(32, 100, 7);
    const Graph g = build_knn_graph(s[0], 6);
    TrainConfig cfg;
    const TrainRun run = train(cfg, s, g);
    REQUIRE(run.history.size() == 10);
    for (std::size_t e = 1; e < 10; ++e) CHECK(run.history[e].train_loss < run.history[e - 1].train_loss);
    CHECK(run.history.back().train_loss < run.history.front().train_loss / 5);

    // ten default epochs are only 80 Adam steps; the identity map needs more
    cfg.stride = 1;
    cfg.epochs = 80;
    cfg.adam.lr_decay_per_epoch = 1.0;
    CHECK(train(cfg, s, g).history.back().train_loss < 1e-3);
}

TEST_CASE("numeric failure is captured with partial history") {
    SyntheticConfig sc;
    sc.n_nodes = 16;
    sc.n_frames = 40;
    const auto syn = generate_synthetic(sc);
    TrainConfig cfg;
    cfg.activation = Activation::relu;
    cfg.init_range = 1e200;
    cfg.init_alpha = 1e200;
    const TrainRun run = train(cfg, syn.frames, syn.graph);
    CHECK(run.failure.has_value());
    CHECK(run.history.size() < cfg.epochs);
}

TEST_CASE("teacher forcing and autoregression agree on the context") {
    const auto lap = build_laplacians(testutil::random_knn_graph(6, 2, 100));
    const ModelParams p = model(ConvFamily::chebyshev, 6, 3, 101);
    const auto w = random_window(6, 3, 5, 102);
    const Rollout tf = teacher_forced(p, lap, w);
    CHECK(tf.predictions.size() == 4);
    const auto ar = autoregressive(p, lap, std::span(w).first(4), 2);
    REQUIRE(ar.size() == 2);
    CHECK(ar[0] == tf.predictions[3]);
    CHECK(autoregressive(p, lap, w, 0).empty());
}

TEST_CASE("parameter counts") {
    CHECK(count_params(ParamFamily::chebyshev, 1502, 3, 0) == 3015);
    CHECK(count_params(ParamFamily::first_order, 1502, 0, 3) == 3033);
    CHECK(count_params(ParamFamily::dense_frnn, 1502, 0, 0) == 6771018);
    CHECK(count_params(ParamFamily::lstm_dense, 1502, 0, 0) == 18054040);
    CHECK(count_params(ParamFamily::lstm_gcn, 1502, 3, 0) == 6032);
    CHECK_THROWS_AS(parse_param_family("gru"), ContractError);
}

TEST_CASE("parameter counts match the constructed models") {
    SplitMix64 rng(123);
    for (int i = 0; i < 20; ++i) {
        const std::size_t n = 1 + rng.below(40), k = 1 + rng.below(6), hidden = 1 + rng.below(5);
        InitOptions opt;
        opt.order = k;
        opt.hidden_dim = hidden;
        CHECK(scalar_count(init_params(ConvFamily::chebyshev, n, 3, opt, i)) ==
              count_params(ParamFamily::chebyshev, n, k, hidden));
        // with F = P the first-order filters are P x P each
        CHECK(scalar_count(init_params(ConvFamily::first_order, n, hidden, opt, i)) ==
              count_params(ParamFamily::first_order, n, k, hidden));
        CHECK(scalar_count(init_params(ConvFamily::dense, n, 3, opt, i)) ==
              count_params(ParamFamily::dense_frnn, n, k, hidden));
    }
}
