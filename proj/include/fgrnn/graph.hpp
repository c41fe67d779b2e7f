#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fgrnn/dense.hpp"
#include "fgrnn/sparse.hpp"

namespace fgrnn {

struct Edge {
    std::size_t i;  // i < j
    std::size_t j;
    double weight;  // > 0
    bool operator==(const Edge&) const = default;
};

/// Undirected, positively weighted graph without self-loops. Each unordered
/// pair appears once, sorted lexicographically by (i, j).
class Graph {
public:
    Graph() = default;
    /// Canonicalizes (orders endpoints, sorts) and validates the edge list.
    Graph(std::size_t n_nodes, std::vector<Edge> edges);

    std::size_t n_nodes() const noexcept { return n_nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    SparseMatrix adjacency() const;
    std::vector<std::size_t> degrees() const;  // unweighted neighbor counts

    /// FNV-1a over the node count and the exact bits of every edge.
    std::uint64_t checksum() const;

    bool operator==(const Graph&) const = default;

private:
    std::size_t n_nodes_ = 0;
    std::vector<Edge> edges_;
};

/// Union-symmetrized k-nearest-neighbour graph with unit weights. Distance
/// ties go to the lower node index.
Graph build_knn_graph(const DenseMatrix& points, std::size_t k);

/// Propagation operator used by first-order convolutions and the stability
/// diagnostics.
enum class FirstOrderOperator { adjacency_plus_identity, laplacian };

struct LaplacianSet {
    SparseMatrix laplacian;    // L = I - D^-1/2 A D^-1/2
    SparseMatrix scaled;       // 2L/lambda_max - I
    SparseMatrix first_order;  // I + D^-1/2 A D^-1/2 = 2I - L
    double lambda_max = 0.0;
    bool lambda_converged = false;
    std::vector<double> degree;  // weighted, d = A 1

    std::size_t n_nodes() const noexcept { return laplacian.rows(); }
    const SparseMatrix& propagation(FirstOrderOperator op) const {
        return op == FirstOrderOperator::laplacian ? laplacian : first_order;
    }
};

/// Isolated nodes use D^-1/2 = 0, so their Laplacian row is the identity row.
LaplacianSet build_laplacians(const Graph& g, double tol = 1e-12, std::size_t max_iter = 100000);

/// Edge-list text format: "N M" then M lines "i j w".
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path);

}  // namespace fgrnn
