#include "fgrnn/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fgrnn/error.hpp"
#include "fgrnn/spectral.hpp"

namespace fgrnn {

Graph::Graph(std::size_t n_nodes, std::vector<Edge> edges) : n_nodes_(n_nodes), edges_(std::move(edges)) {
    for (auto& e : edges_) {
        if (e.i > e.j) std::swap(e.i, e.j);
        require(e.i != e.j, "Graph: self-loops are not allowed");
        require(e.j < n_nodes_, "Graph: edge endpoint out of range");
        require(std::isfinite(e.weight) && e.weight > 0.0, "Graph: edge weights must be positive and finite");
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    for (std::size_t k = 1; k < edges_.size(); ++k)
        require(edges_[k - 1].i != edges_[k].i || edges_[k - 1].j != edges_[k].j, "Graph: duplicate edge");
}

SparseMatrix Graph::adjacency() const {
    std::vector<Triplet> t;
    t.reserve(2 * edges_.size());
    for (const auto& e : edges_) {
        t.push_back({e.i, e.j, e.weight});
        t.push_back({e.j, e.i, e.weight});
    }
    return SparseMatrix::from_triplets(n_nodes_, n_nodes_, std::move(t));
}

std::vector<std::size_t> Graph::degrees() const {
    std::vector<std::size_t> d(n_nodes_, 0);
    for (const auto& e : edges_) {
        ++d[e.i];
        ++d[e.j];
    }
    return d;
}

std::uint64_t Graph::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    mix(n_nodes_);
    mix(edges_.size());
    for (const auto& e : edges_) {
        mix(e.i);
        mix(e.j);
        mix(std::bit_cast<std::uint64_t>(e.weight));
    }
    return h;
}

Graph build_knn_graph(const DenseMatrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    require(k >= 1, "build_knn_graph: k must be at least 1");
    require(n > k, "build_knn_graph: need more points than neighbours (N > k)");
    require(points.all_finite(), "build_knn_graph: point coordinates must be finite");

    std::vector<std::vector<std::size_t>> chosen(n);
    const auto nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (n >= 256)
    for (long long ii = 0; ii < nn; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < points.cols(); ++c) {
                const double diff = points(i, c) - points(j, c);
                d2 += diff * diff;
            }
            dist.emplace_back(d2, j);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        auto& out = chosen[i];
        for (std::size_t m = 0; m < k; ++m) out.push_back(dist[m].second);
    }

    std::vector<Edge> edges;
    edges.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : chosen[i]) edges.push_back({std::min(i, j), std::max(i, j), 1.0});
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }),
                edges.end());
    return Graph(n, std::move(edges));
}

LaplacianSet build_laplacians(const Graph& g, double tol, std::size_t max_iter) {
    const std::size_t n = g.n_nodes();
    require(n >= 1, "build_laplacians: graph has no nodes");
    LaplacianSet out;
    out.degree.assign(n, 0.0);
    for (const auto& e : g.edges()) {
        out.degree[e.i] += e.weight;
        out.degree[e.j] += e.weight;
    }
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (out.degree[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(out.degree[i]);

    std::vector<Triplet> lap;
    std::vector<Triplet> first;
    lap.reserve(n + 2 * g.edges().size());
    first.reserve(n + 2 * g.edges().size());
    for (std::size_t i = 0; i < n; ++i) {
        lap.push_back({i, i, 1.0});
        first.push_back({i, i, 1.0});
    }
    for (const auto& e : g.edges()) {
        const double w = e.weight * inv_sqrt[e.i] * inv_sqrt[e.j];
        lap.push_back({e.i, e.j, -w});
        lap.push_back({e.j, e.i, -w});
        first.push_back({e.i, e.j, w});
        first.push_back({e.j, e.i, w});
    }
    out.laplacian = SparseMatrix::from_triplets(n, n, std::move(lap));
    out.first_order = SparseMatrix::from_triplets(n, n, std::move(first));

    const auto pi = power_iteration(out.laplacian, tol, max_iter, 0x9e3779b97f4a7c15ULL);
    out.lambda_max = pi.value;
    out.lambda_converged = pi.converged;
    require(out.lambda_max > 0.0, "build_laplacians: non-positive largest eigenvalue");
    out.scaled = out.laplacian.scaled_shifted(2.0 / out.lambda_max, -1.0);
    return out;
}

void write_edge_list(std::ostream& os, const Graph& g) {
    os << g.n_nodes() << ' ' << g.edges().size() << '\n';
    os << std::setprecision(17);
    for (const auto& e : g.edges()) os << e.i << ' ' << e.j << ' ' << e.weight << '\n';
}

Graph read_edge_list(std::istream& is) {
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
    if (!next_line()) throw ParseError("missing 'N M' header", line_no + 1);
    std::istringstream header(line);
    long long n = -1, m = -1;
    if (!(header >> n >> m) || n < 0 || m < 0) throw ParseError("malformed 'N M' header", line_no);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(m));
    for (long long k = 0; k < m; ++k) {
        if (!next_line())
            throw ParseError("expected " + std::to_string(m) + " edges, found " + std::to_string(k), line_no + 1);
        std::istringstream ls(line);
        long long i = -1, j = -1;
        double w = 0.0;
        if (!(ls >> i >> j >> w) || i < 0 || j < 0) throw ParseError("malformed edge line", line_no);
        if (i >= n || j >= n || i == j || !(w > 0.0) || !std::isfinite(w))
            throw ParseError("invalid edge (" + std::to_string(i) + ", " + std::to_string(j) + ")", line_no);
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
    }
    try {
        return Graph(static_cast<std::size_t>(n), std::move(edges));
    } catch (const ContractError& e) {
        throw ParseError(e.what(), line_no);
    }
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    write_edge_list(os, g);
    if (!os) throw IoError("failed writing '" + path + "'");
}

Graph load_graph(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    return read_edge_list(is);
}

}  // namespace fgrnn
