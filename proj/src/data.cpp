#include "fgrnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fgrnn/error.hpp"
#include "fgrnn/rng.hpp"

namespace fgrnn {

FrameSequence::FrameSequence(std::size_t n_nodes, std::size_t n_features, std::vector<DenseMatrix> frames)
    : n_nodes_(n_nodes), n_features_(n_features) {
    frames_.reserve(frames.size());
    for (auto& f : frames) push_back(std::move(f));
}

std::span<const DenseMatrix> FrameSequence::slice(std::size_t first, std::size_t count) const {
    require(first + count <= frames_.size(), "FrameSequence::slice: range exceeds the sequence");
    return std::span<const DenseMatrix>(frames_).subspan(first, count);
}

void FrameSequence::push_back(DenseMatrix frame) {
    require(frame.rows() == n_nodes_ && frame.cols() == n_features_, "FrameSequence: frame shape mismatch");
    require(frame.all_finite(), "FrameSequence: frame entries must be finite");
    frames_.push_back(std::move(frame));
}

std::string_view to_string(BaseShape s) {
    switch (s) {
        case BaseShape::ring: return "ring";
        case BaseShape::grid: return "grid";
        case BaseShape::cylinder: return "cylinder";
    }
    return "?";
}

BaseShape parse_base_shape(std::string_view s) {
    if (s == "ring") return BaseShape::ring;
    if (s == "grid") return BaseShape::grid;
    if (s == "cylinder") return BaseShape::cylinder;
    throw ConfigError("unknown shape '" + std::string(s) + "' (valid: ring, grid, cylinder)");
}

void SyntheticConfig::validate() const {
    if (n_nodes < 4) throw ConfigError("n_nodes must be at least 4");
    if (n_nodes <= knn_k) throw ConfigError("n_nodes must exceed knn_k");
    if (knn_k < 1) throw ConfigError("knn_k must be at least 1");
    if (!(deformation_amplitude >= 0.0) || !(noise_std >= 0.0))
        throw ConfigError("amplitudes must be non-negative");
    if (!std::isfinite(rotation_rate) || !std::isfinite(deformation_frequency))
        throw ConfigError("rates must be finite");
}

DenseMatrix base_points(BaseShape shape, std::size_t n) {
    using std::numbers::pi;
    DenseMatrix pts(n, 3);
    switch (shape) {
        case BaseShape::ring:
            for (std::size_t i = 0; i < n; ++i) {
                const double th = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n);
                pts(i, 0) = std::cos(th);
                pts(i, 1) = std::sin(th);
            }
            break;
        case BaseShape::grid: {
            const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
            const double step = 2.0 / static_cast<double>(side > 1 ? side - 1 : 1);
            for (std::size_t i = 0; i < n; ++i) {
                pts(i, 0) = -1.0 + step * static_cast<double>(i % side);
                pts(i, 1) = -1.0 + step * static_cast<double>(i / side);
            }
            break;
        }
        case BaseShape::cylinder: {
            // Stacked rings of ~8 points each; rings are staggered by half a step.
            const std::size_t per_ring = std::max<std::size_t>(4, std::min<std::size_t>(8, n / 2));
            const std::size_t n_rings = (n + per_ring - 1) / per_ring;
            const double height = 2.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ring = i / per_ring;
                const std::size_t slot = i % per_ring;
                const double th = 2.0 * pi * (static_cast<double>(slot) + 0.5 * static_cast<double>(ring % 2)) /
                                  static_cast<double>(per_ring);
                pts(i, 0) = std::cos(th);
                pts(i, 1) = std::sin(th);
                pts(i, 2) = n_rings > 1 ? -0.5 * height + height * static_cast<double>(ring) /
                                                              static_cast<double>(n_rings - 1)
                                        : 0.0;
            }
            break;
        }
    }
    return pts;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    using std::numbers::pi;
    const std::size_t n = cfg.n_nodes;
    const DenseMatrix base = base_points(cfg.base_shape, n);

    // Spatial profile: one slow cosine along the base's longest extent, like a
    // low-order Laplacian eigenvector of the point cloud.
    std::vector<double> profile(n);
    {
        double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c) {
                lo[c] = std::min(lo[c], base(i, c));
                hi[c] = std::max(hi[c], base(i, c));
            }
        int axis = 0;
        for (int c = 1; c < 3; ++c)
            if (hi[c] - lo[c] > hi[axis] - lo[axis]) axis = c;
        const double span = std::max(hi[axis] - lo[axis], 1e-12);
        for (std::size_t i = 0; i < n; ++i) profile[i] = std::cos(pi * (base(i, axis) - lo[axis]) / span);
    }

    SplitMix64 rng(cfg.seed);
    FrameSequence seq(n, 3);
    for (std::size_t t = 0; t < cfg.n_frames; ++t) {
        const double ang = static_cast<double>(t) * cfg.rotation_rate;
        const double c = std::cos(ang), s = std::sin(ang);
        const double wave = cfg.deformation_amplitude *
                            std::sin(2.0 * pi * cfg.deformation_frequency * static_cast<double>(t) /
                                     static_cast<double>(std::max<std::size_t>(cfg.n_frames, 1)));
        DenseMatrix frame(n, 3);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = base(i, 0), y = base(i, 1);
            const double z = base(i, 2) + wave * profile[i];
            frame(i, 0) = c * x - s * y;
            frame(i, 1) = s * x + c * y;
            frame(i, 2) = z;
        }
        if (cfg.noise_std > 0.0)
            for (double& v : frame.values()) v += cfg.noise_std * rng.normal();
        seq.push_back(std::move(frame));
    }
    Graph g = cfg.n_frames > 0 ? build_knn_graph(seq[0], cfg.knn_k) : build_knn_graph(base, cfg.knn_k);
    return {std::move(seq), std::move(g)};
}

void write_frames(std::ostream& os, const FrameSequence& seq) {
    os << "gfrm 1 " << seq.n_nodes() << ' ' << seq.n_features() << ' ' << seq.n_frames() << '\n';
    char buf[32];
    for (std::size_t t = 0; t < seq.n_frames(); ++t) {
        os << "# frame " << t << '\n';
        const auto& f = seq[t];
        for (std::size_t i = 0; i < f.rows(); ++i) {
            for (std::size_t j = 0; j < f.cols(); ++j) {
                const int len = std::snprintf(buf, sizeof buf, "%.17g", f(i, j));
                if (j) os << ' ';
                os.write(buf, len);
            }
            os << '\n';
        }
    }
}

FrameSequence read_frames(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_line()) throw ParseError("missing 'gfrm 1 N F T' header", line_no + 1);
    std::istringstream header(line);
    std::string magic;
    long long version = 0, n = -1, f = -1, t = -1;
    if (!(header >> magic >> version >> n >> f >> t) || magic != "gfrm")
        throw ParseError("malformed header, expected 'gfrm 1 N F T'", line_no);
    if (version != 1) throw ParseError("unsupported frame format version " + std::to_string(version), line_no);
    if (n < 1 || f < 1 || t < 0) throw ParseError("header dimensions must be N >= 1, F >= 1, T >= 0", line_no);

    FrameSequence seq(static_cast<std::size_t>(n), static_cast<std::size_t>(f));
    const auto rows = static_cast<std::size_t>(n);
    const auto cols = static_cast<std::size_t>(f);
    for (long long k = 0; k < t; ++k) {
        DenseMatrix frame(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            if (!next_line())
                throw ParseError("expected " + std::to_string(t) + " frames of " + std::to_string(n) +
                                     " rows, file ended in frame " + std::to_string(k) + " (" + std::to_string(k) +
                                     " complete frames)",
                                 line_no + 1);
            const char* p = line.data();
            const char* end = line.data() + line.size();
            for (std::size_t j = 0; j < cols; ++j) {
                while (p < end && (*p == ' ' || *p == '\t')) ++p;
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(p, end, v);
                if (ec != std::errc() || !std::isfinite(v))
                    throw ParseError("expected " + std::to_string(f) + " finite values per row", line_no);
                frame(i, j) = v;
                p = ptr;
            }
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
            if (p != end) throw ParseError("trailing data after " + std::to_string(f) + " values", line_no);
        }
        seq.push_back(std::move(frame));
    }
    if (next_line())
        throw ParseError("header declares " + std::to_string(t) + " frames but the file has more data", line_no);
    return seq;
}

void save_frames(const FrameSequence& seq, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_frames(os, seq);
    if (!os) throw IoError("failed writing '" + path + "'");
}

FrameSequence load_frames(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_frames(is);
}

std::size_t split_index(std::size_t n_frames, double ratio) {
    require(ratio > 0.0 && ratio < 1.0, "split_train_test: ratio must lie in (0, 1)");
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n_frames)));
}

TrainTestSplit split_train_test(const FrameSequence& seq, double ratio) {
    require(seq.n_frames() >= 2, "split_train_test: need at least two frames");
    const std::size_t cut = split_index(seq.n_frames(), ratio);
    if (cut == 0 || cut >= seq.n_frames())
        throw ContractError("split_train_test: ratio " + std::to_string(ratio) + " leaves an empty partition of " +
                            std::to_string(seq.n_frames()) + " frames");
    TrainTestSplit s{FrameSequence(seq.n_nodes(), seq.n_features()), FrameSequence(seq.n_nodes(), seq.n_features())};
    for (std::size_t t = 0; t < seq.n_frames(); ++t) (t < cut ? s.train : s.test).push_back(seq[t]);
    return s;
}

double copy_last_baseline(const FrameSequence& seq, std::size_t first_target) {
    first_target = std::max<std::size_t>(first_target, 1);
    require(first_target < seq.n_frames(), "copy_last_baseline: no targets in range");
    double total = 0.0;
    for (std::size_t t = first_target; t < seq.n_frames(); ++t) {
        const DenseMatrix d = seq[t] - seq[t - 1];
        total += frobenius_dot(d, d);
    }
    return total / static_cast<double>(seq.n_frames() - first_target);
}

}  // namespace fgrnn
