#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fgrnn/cells.hpp"
#include "fgrnn/data.hpp"
#include "fgrnn/graph.hpp"

namespace fgrnn {

/// Squared Frobenius norm of x_hat - x.
double prediction_loss(const DenseMatrix& x_hat, const DenseMatrix& x);

/// prediction_loss + lambda * tr(x_hat^T L x_hat), L the normalized Laplacian.
double graph_regularized_loss(const DenseMatrix& x_hat, const DenseMatrix& x, const LaplacianSet& lap,
                              double lambda_reg);

struct LossConfig {
    double lambda_reg = 0.0;  // 0 selects the plain prediction loss
};

struct BpttResult {
    double loss = 0.0;                 // sum over steps of J_t
    std::vector<double> step_losses;   // J_t, t = 1..T_w
    GradientSet grads;
};

/// Unrolls the cell over window[0..T_w-1] from h0 = 0, predicting
/// window[1..T_w], and returns the exact gradient of sum_t J_t.
BpttResult bptt(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                const LossConfig& loss = {});

/// Forward-only value of the same objective.
double window_loss(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                   const LossConfig& loss = {});

/// Worst relative error between bptt and central differences over every
/// scalar parameter; denominator max(|analytic|, |numeric|, 1e-8).
double finite_difference_check(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> window,
                               double step, const LossConfig& loss = {});

struct AdamConfig {
    double learning_rate = 1e-2;
    double lr_decay_per_epoch = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-2;
    double lr_decay_per_epoch = 0.9;

    static AdamState for_params(const ModelParams& p, const AdamConfig& cfg);
    void end_epoch() { learning_rate *= lr_decay_per_epoch; }
};

/// One bias-corrected Adam update of every scalar in p.
void adam_step(AdamState& state, ModelParams& p, const GradientSet& grads);

/// One-step teacher-forced pass over a sequence starting from h0 = 0.
/// Losses and predictions are kept for targets t >= first_target (t >= 1).
struct Rollout {
    std::vector<DenseMatrix> predictions;  // predictions[i] targets frame first_target + i
    std::vector<double> losses;            // prediction_loss per target
    DenseMatrix final_hidden;
};
Rollout teacher_forced(const ModelParams& p, const LaplacianSet& lap, std::span<const DenseMatrix> frames,
                       std::size_t first_target = 1);

/// Consumes `context` teacher-forced, then feeds predictions back for
/// `horizon` further frames.
std::vector<DenseMatrix> autoregressive(const ModelParams& p, const LaplacianSet& lap,
                                        std::span<const DenseMatrix> context, std::size_t horizon);

enum class GraphSource { first_frame, mean_frame };
std::string_view to_string(GraphSource s);
GraphSource parse_graph_source(std::string_view s);

struct TrainConfig {
    ConvFamily family = ConvFamily::chebyshev;
    std::size_t order = 3;        // K
    std::size_t hidden_dim = 3;   // P
    std::size_t window = 10;      // T_w
    std::size_t stride = 0;       // 0 means stride = window
    std::size_t epochs = 10;
    AdamConfig adam;
    double split = 0.8;
    Activation activation = Activation::tanh;
    FirstOrderOperator propagation = FirstOrderOperator::adjacency_plus_identity;
    double lambda_reg = 0.0;
    double init_range = 0.1;
    double init_alpha = 0.5;
    double init_beta = 0.5;
    std::uint64_t seed = 1;

    std::size_t effective_stride() const noexcept { return stride == 0 ? window : stride; }
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based, continues across resumes
    double train_loss = 0.0;
    double test_loss = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double lr = 0.0;  // learning rate used during the epoch
};

/// State carried between train() calls so a resumed run continues exactly.
struct TrainState {
    ModelParams params;
    AdamState adam;
    std::size_t epochs_completed = 0;
};

struct TrainRun {
    std::vector<EpochRecord> history;
    TrainState state;
    TrainConfig config;
    double baseline_test_loss = 0.0;  // copy-last-frame on the test transitions
    std::optional<std::string> failure;  // set when a numeric error aborted training
};

/// Initial parameters and optimizer for a config.
TrainState initial_state(const TrainConfig& cfg, std::size_t n_nodes, std::size_t n_features);

/// Chronological split, windowed BPTT + Adam for cfg.epochs epochs. Test loss
/// is the mean J_t over test targets with the hidden state warm-started by
/// running through the training frames.
TrainRun train(const TrainConfig& cfg, const FrameSequence& data, const Graph& g,
               std::optional<TrainState> resume = std::nullopt);

struct WindowSpan {
    std::size_t start = 0;
    std::size_t length = 0;  // frames, i.e. T_w + 1
    bool operator==(const WindowSpan&) const = default;
};

/// Windows of window+1 frames every `stride` frames. A partition shorter than
/// one window yields a single window covering all of it.
std::vector<WindowSpan> training_windows(std::size_t n_frames, std::size_t window, std::size_t stride);

/// kNN graph over the first training frame or the mean of all training frames.
Graph graph_from_training_frames(const FrameSequence& data, double split, GraphSource source, std::size_t k);

enum class ParamFamily { chebyshev, first_order, dense_frnn, lstm_dense, lstm_gcn };
ParamFamily parse_param_family(std::string_view s);

/// Trainable-parameter counts for the recurrent models compared in the
/// experiments. The LSTM rows are formulas only.
std::size_t count_params(ParamFamily family, std::size_t n, std::size_t k, std::size_t p);

}  // namespace fgrnn
