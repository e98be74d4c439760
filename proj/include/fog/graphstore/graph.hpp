#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fog/tensorcore/ops.hpp"
#include "fog/tensorcore/random.hpp"
#include "fog/tensorcore/tensor.hpp"

namespace fog {

/// A graph violates one of its structural invariants.
class GraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Graphs handed to batch_graphs do not share one feature layout.
class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FeatureKind { none, categorical, continuous };

/// Sparse graph in CSR form. Row v of the CSR lists the neighbors u of v, and
/// position e in `neighbors` is the directed edge u -> v along which v
/// receives a message. Edge features and edge labels are aligned with
/// `neighbors`.
struct Graph {
    std::size_t n_nodes = 0;
    IndexVector offsets{0};
    IndexVector neighbors;
    bool undirected = true;

    FeatureKind node_kind = FeatureKind::none;
    IndexVector node_codes;       // categorical: one code per node
    Tensor<double> node_feat;     // continuous: [n_nodes x width]

    FeatureKind edge_kind = FeatureKind::none;
    IndexVector edge_codes;
    Tensor<double> edge_feat;     // continuous: [E x width]

    std::vector<std::int32_t> node_labels;
    std::vector<std::int32_t> edge_labels;
    std::int32_t graph_label = -1;
    double graph_target = 0.0;

    std::size_t n_edges() const noexcept { return neighbors.size(); }
    std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }

    /// Receiving node of every CSR edge (the row that owns it).
    IndexVector edge_dst() const;
    std::vector<std::size_t> degrees() const;

    std::size_t node_width() const;
    std::size_t edge_width() const;
};

/// Disjoint union of several graphs. Graph g owns nodes
/// [node_offsets[g], node_offsets[g+1]) and edges [edge_offsets[g], edge_offsets[g+1]).
struct GraphBatch {
    Graph graph;
    IndexVector node_segment;
    IndexVector edge_src;   // == graph.neighbors
    IndexVector edge_dst;
    std::vector<std::size_t> node_offsets{0};
    std::vector<std::size_t> edge_offsets{0};
    std::size_t graph_count = 0;

    std::size_t n_nodes() const noexcept { return graph.n_nodes; }
    std::size_t n_edges() const noexcept { return graph.n_edges(); }
};

struct CsrResult {
    Graph graph;
    /// For every CSR edge, the index of the input pair it came from.
    std::vector<std::size_t> origin;
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
};

/// Build a CSR graph with ascending neighbor lists. With `undirected` every
/// pair is mirrored. Self loops are dropped and counted, as are repeated pairs.
CsrResult build_csr(std::size_t n_nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                    bool undirected);

/// Check every structural invariant; throws GraphError naming the first violation.
void validate(const Graph& g);

GraphBatch batch_graphs(const std::vector<const Graph*>& graphs);
GraphBatch batch_graphs(const std::vector<Graph>& graphs);

/// Relabel nodes: old node i becomes node perm[i]. Neighbor lists are re-sorted.
Graph permute_nodes(const Graph& g, const IndexVector& perm);

/// Shuffle the order of every neighbor list, carrying edge data along.
Graph shuffle_neighbors(const Graph& g, Rng& rng);

}  // namespace fog
