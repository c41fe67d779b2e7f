#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/graph.hpp"

namespace fgrnn {

/// T graph signals sharing one N x F shape.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::size_t n_nodes, std::size_t n_features) : n_nodes_(n_nodes), n_features_(n_features) {}
    FrameSequence(std::size_t n_nodes, std::size_t n_features, std::vector<DenseMatrix> frames);

    std::size_t n_nodes() const noexcept { return n_nodes_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t n_frames() const noexcept { return frames_.size(); }

    const DenseMatrix& operator[](std::size_t t) const { return frames_[t]; }
    std::span<const DenseMatrix> frames() const noexcept { return frames_; }
    std::span<const DenseMatrix> slice(std::size_t first, std::size_t count) const;

    void push_back(DenseMatrix frame);

    bool operator==(const FrameSequence&) const = default;

private:
    std::size_t n_nodes_ = 0;
    std::size_t n_features_ = 0;
    std::vector<DenseMatrix> frames_;
};

enum class BaseShape { ring, grid, cylinder };
std::string_view to_string(BaseShape s);
BaseShape parse_base_shape(std::string_view s);

struct SyntheticConfig {
    std::size_t n_nodes = 128;
    std::size_t n_frames = 200;
    BaseShape base_shape = BaseShape::cylinder;
    double rotation_rate = 0.02;          // radians per frame about z
    double deformation_amplitude = 0.2;   // length units
    double deformation_frequency = 3.0;   // cycles per sequence
    double noise_std = 0.02;              // length units
    std::size_t knn_k = 6;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticData {
    FrameSequence frames;  // F = 3
    Graph graph;           // kNN graph of frame 0
};

/// Rigid rotation about z, plus a smooth z-displacement modulated by a
/// low-frequency spatial profile, plus Gaussian noise. Deterministic in seed.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

/// Base point layout before any motion; N x 3.
DenseMatrix base_points(BaseShape shape, std::size_t n_nodes);

/// Frame file: "gfrm 1 N F T", then T blocks of N lines with F values.
/// Lines starting with '#' are comments. Values carry 17 significant digits.
void write_frames(std::ostream& os, const FrameSequence& seq);
FrameSequence read_frames(std::istream& is);
void save_frames(const FrameSequence& seq, const std::string& path);
FrameSequence load_frames(const std::string& path);

struct TrainTestSplit {
    FrameSequence train;
    FrameSequence test;
};

/// Chronological split at floor(ratio * T); train gets the prefix.
TrainTestSplit split_train_test(const FrameSequence& seq, double ratio);
std::size_t split_index(std::size_t n_frames, double ratio);

/// Mean over frames of the copy-last-frame loss ||x_t - x_{t-1}||_F^2 for
/// targets t in [first_target, T).
double copy_last_baseline(const FrameSequence& seq, std::size_t first_target = 1);

}  // namespace fgrnn
