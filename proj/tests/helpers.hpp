#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/graph.hpp"
#include "fgrnn/rng.hpp"
#include "fgrnn/sparse.hpp"

namespace testutil {

inline fgrnn::DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0,
                                       double hi = 1.0) {
    fgrnn::SplitMix64 rng(seed);
    fgrnn::DenseMatrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

// kNN graph over uniform points in the unit cube.
inline fgrnn::Graph random_knn_graph(std::size_t n, std::size_t k, std::uint64_t seed) {
    return fgrnn::build_knn_graph(random_dense(n, 3, seed, 0.0, 1.0), k);
}

inline fgrnn::SparseMatrix random_sparse(std::size_t r, std::size_t c, double density, std::uint64_t seed,
                                         bool symmetric = false) {
    fgrnn::SplitMix64 rng(seed);
    std::vector<fgrnn::Triplet> t;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = symmetric ? i : 0; j < c; ++j)
            if (rng.uniform() < density) {
                const double v = rng.uniform(-1.0, 1.0);
                t.push_back({i, j, v});
                if (symmetric && i != j) t.push_back({j, i, v});
            }
    return fgrnn::SparseMatrix::from_triplets(r, c, std::move(t));
}

// Cycle on n nodes with unit weights (2-regular).
inline fgrnn::Graph ring_graph(std::size_t n) {
    std::vector<fgrnn::Edge> e;
    for (std::size_t i = 0; i < n; ++i) e.push_back({i, (i + 1) % n, 1.0});
    return fgrnn::Graph(n, std::move(e));
}

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace testutil
