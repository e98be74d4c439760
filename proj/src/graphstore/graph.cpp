#include "fog/graphstore/graph.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace fog {

IndexVector Graph::edge_dst() const {
    IndexVector dst(n_edges());
    for (std::size_t v = 0; v < n_nodes; ++v)
        for (std::size_t e = offsets[v]; e < offsets[v + 1]; ++e) dst[e] = static_cast<std::uint32_t>(v);
    return dst;
}

std::vector<std::size_t> Graph::degrees() const {
    std::vector<std::size_t> d(n_nodes);
    for (std::size_t v = 0; v < n_nodes; ++v) d[v] = degree(v);
    return d;
}

std::size_t Graph::node_width() const {
    if (node_kind == FeatureKind::continuous) return node_feat.rank() == 2 ? node_feat.shape()[1] : 0;
    return node_kind == FeatureKind::categorical ? 1 : 0;
}

std::size_t Graph::edge_width() const {
    if (edge_kind == FeatureKind::continuous) return edge_feat.rank() == 2 ? edge_feat.shape()[1] : 0;
    return edge_kind == FeatureKind::categorical ? 1 : 0;
}

CsrResult build_csr(std::size_t n_nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                    bool undirected) {
    CsrResult out;
    // (receiver, sender, origin)
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> directed;
    directed.reserve(edges.size() * (undirected ? 2 : 1));
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto [u, v] = edges[i];
        if (u >= n_nodes || v >= n_nodes) {
            throw IndexError("build_csr: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                             ") out of range for " + std::to_string(n_nodes) + " nodes");
        }
        if (u == v) {
            ++out.dropped_self_loops;
            continue;
        }
        directed.emplace_back(u, v, i);
        if (undirected) directed.emplace_back(v, u, i);
    }
    std::stable_sort(directed.begin(), directed.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });

    Graph& g = out.graph;
    g.n_nodes = n_nodes;
    g.undirected = undirected;
    g.offsets.assign(n_nodes + 1, 0);
    for (std::size_t i = 0; i < directed.size(); ++i) {
        const auto& [r, s, o] = directed[i];
        if (i > 0 && std::get<0>(directed[i - 1]) == r && std::get<1>(directed[i - 1]) == s) {
            ++out.dropped_duplicates;
            continue;
        }
        g.neighbors.push_back(s);
        out.origin.push_back(o);
        ++g.offsets[r + 1];
    }
    if (undirected) out.dropped_duplicates /= 2;
    std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
    return out;
}

namespace {

bool has_edge(const Graph& g, std::uint32_t row, std::uint32_t col) {
    for (std::size_t e = g.offsets[row]; e < g.offsets[row + 1]; ++e)
        if (g.neighbors[e] == col) return true;
    return false;
}

}  // namespace

void validate(const Graph& g) {
    const std::size_t n = g.n_nodes, E = g.neighbors.size();
    if (g.offsets.size() != n + 1) {
        throw GraphError("offsets has " + std::to_string(g.offsets.size()) + " entries for " + std::to_string(n) +
                         " nodes");
    }
    if (g.offsets.front() != 0) throw GraphError("offsets must start at 0");
    for (std::size_t v = 0; v < n; ++v)
        if (g.offsets[v + 1] < g.offsets[v]) throw GraphError("offsets decrease at node " + std::to_string(v));
    if (g.offsets.back() != E) throw GraphError("last offset " + std::to_string(g.offsets.back()) + " != E = " +
                                                std::to_string(E));
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            if (g.neighbors[e] >= n) throw GraphError("neighbor index " + std::to_string(g.neighbors[e]) +
                                                      " out of range at edge " + std::to_string(e));
            if (g.neighbors[e] == v) throw GraphError("self loop at node " + std::to_string(v));
        }
    if (g.undirected) {
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
                if (!has_edge(g, g.neighbors[e], static_cast<std::uint32_t>(v))) {
                    throw GraphError("edge " + std::to_string(g.neighbors[e]) + " -> " + std::to_string(v) +
                                     " has no mirror");
                }
    }
    switch (g.node_kind) {
        case FeatureKind::none: break;
        case FeatureKind::categorical:
            if (g.node_codes.size() != n) throw GraphError("node_codes length != n_nodes");
            break;
        case FeatureKind::continuous:
            if (g.node_feat.rank() != 2 || g.node_feat.shape()[0] != n) {
                throw GraphError("node_feat shape " + shape_to_string(g.node_feat.shape()) + " for " +
                                 std::to_string(n) + " nodes");
            }
            break;
    }
    switch (g.edge_kind) {
        case FeatureKind::none: break;
        case FeatureKind::categorical:
            if (g.edge_codes.size() != E) throw GraphError("edge_codes length != E");
            break;
        case FeatureKind::continuous:
            if (g.edge_feat.rank() != 2 || g.edge_feat.shape()[0] != E) {
                throw GraphError("edge_feat shape " + shape_to_string(g.edge_feat.shape()) + " for " +
                                 std::to_string(E) + " edges");
            }
            break;
    }
    if (!g.node_labels.empty() && g.node_labels.size() != n) throw GraphError("node_labels length != n_nodes");
    if (!g.edge_labels.empty() && g.edge_labels.size() != E) throw GraphError("edge_labels length != E");
}

namespace {

void append_rows(Tensor<double>& dst, const Tensor<double>& src, std::size_t width) {
    std::vector<double>& d = dst.storage();
    d.insert(d.end(), src.storage().begin(), src.storage().end());
    const std::size_t rows = width == 0 ? 0 : d.size() / width;
    dst = Tensor<double>({rows, width}, std::move(d));
}

}  // namespace

GraphBatch batch_graphs(const std::vector<const Graph*>& graphs) {
    GraphBatch b;
    Graph& m = b.graph;
    if (graphs.empty()) return b;
    const Graph& first = *graphs.front();
    m.undirected = first.undirected;
    m.node_kind = first.node_kind;
    m.edge_kind = first.edge_kind;
    const std::size_t nw = first.node_width(), ew = first.edge_width();
    m.node_feat = Tensor<double>({0, first.node_kind == FeatureKind::continuous ? nw : 0});
    m.edge_feat = Tensor<double>({0, first.edge_kind == FeatureKind::continuous ? ew : 0});
    const bool node_labels = !first.node_labels.empty() || first.n_nodes == 0;
    const bool edge_labels = !first.edge_labels.empty() || first.n_edges() == 0;

    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = *graphs[gi];
        if (g.node_kind != first.node_kind || g.edge_kind != first.edge_kind || g.node_width() != nw ||
            g.edge_width() != ew) {
            throw SchemaError("batch_graphs: graph " + std::to_string(gi) + " has a different feature layout");
        }
        const auto base = static_cast<std::uint32_t>(m.n_nodes);
        const std::size_t ebase = m.neighbors.size();
        for (std::size_t v = 0; v < g.n_nodes; ++v) {
            m.offsets.push_back(static_cast<std::uint32_t>(ebase + g.offsets[v + 1]));
            b.node_segment.push_back(static_cast<std::uint32_t>(gi));
        }
        for (std::uint32_t u : g.neighbors) m.neighbors.push_back(base + u);
        m.n_nodes += g.n_nodes;
        if (g.node_kind == FeatureKind::categorical)
            m.node_codes.insert(m.node_codes.end(), g.node_codes.begin(), g.node_codes.end());
        if (g.node_kind == FeatureKind::continuous) append_rows(m.node_feat, g.node_feat, nw);
        if (g.edge_kind == FeatureKind::categorical)
            m.edge_codes.insert(m.edge_codes.end(), g.edge_codes.begin(), g.edge_codes.end());
        if (g.edge_kind == FeatureKind::continuous) append_rows(m.edge_feat, g.edge_feat, ew);
        if (node_labels) m.node_labels.insert(m.node_labels.end(), g.node_labels.begin(), g.node_labels.end());
        if (edge_labels) m.edge_labels.insert(m.edge_labels.end(), g.edge_labels.begin(), g.edge_labels.end());
        b.node_offsets.push_back(m.n_nodes);
        b.edge_offsets.push_back(m.neighbors.size());
    }
    if (m.node_labels.size() != m.n_nodes) m.node_labels.clear();
    if (m.edge_labels.size() != m.neighbors.size()) m.edge_labels.clear();
    b.graph_count = graphs.size();
    b.edge_src = m.neighbors;
    b.edge_dst = m.edge_dst();
    return b;
}

GraphBatch batch_graphs(const std::vector<Graph>& graphs) {
    std::vector<const Graph*> ptrs;
    ptrs.reserve(graphs.size());
    for (const Graph& g : graphs) ptrs.push_back(&g);
    return batch_graphs(ptrs);
}

namespace {

/// Rebuild `g` with edge e placed at position order[e] semantics: `edges` lists
/// (receiver, sender, old edge id) in the desired final order.
Graph rebuild(const Graph& g, std::size_t n, const std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>>& edges) {
    Graph out;
    out.n_nodes = n;
    out.undirected = g.undirected;
    out.node_kind = g.node_kind;
    out.edge_kind = g.edge_kind;
    out.graph_label = g.graph_label;
    out.graph_target = g.graph_target;
    out.offsets.assign(n + 1, 0);
    const std::size_t ew = g.edge_width();
    if (g.edge_kind == FeatureKind::continuous) out.edge_feat = Tensor<double>({edges.size(), ew});
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& [r, s, old] = edges[i];
        ++out.offsets[r + 1];
        out.neighbors.push_back(s);
        if (g.edge_kind == FeatureKind::categorical) out.edge_codes.push_back(g.edge_codes[old]);
        if (g.edge_kind == FeatureKind::continuous)
            for (std::size_t j = 0; j < ew; ++j) out.edge_feat(i, j) = g.edge_feat(old, j);
        if (!g.edge_labels.empty()) out.edge_labels.push_back(g.edge_labels[old]);
    }
    std::partial_sum(out.offsets.begin(), out.offsets.end(), out.offsets.begin());
    return out;
}

}  // namespace

Graph permute_nodes(const Graph& g, const IndexVector& perm) {
    if (perm.size() != g.n_nodes) throw DimensionError("permute_nodes: permutation length != n_nodes");
    std::vector<bool> seen(g.n_nodes, false);
    for (std::uint32_t p : perm) {
        if (p >= g.n_nodes || seen[p]) throw IndexError("permute_nodes: not a permutation");
        seen[p] = true;
    }
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> edges;
    for (std::size_t v = 0; v < g.n_nodes; ++v)
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) edges.emplace_back(perm[v], perm[g.neighbors[e]], e);
    std::sort(edges.begin(), edges.end());
    Graph out = rebuild(g, g.n_nodes, edges);

    if (g.node_kind == FeatureKind::categorical) {
        out.node_codes.resize(g.n_nodes);
        for (std::size_t v = 0; v < g.n_nodes; ++v) out.node_codes[perm[v]] = g.node_codes[v];
    }
    if (g.node_kind == FeatureKind::continuous) {
        const std::size_t w = g.node_width();
        out.node_feat = Tensor<double>({g.n_nodes, w});
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            for (std::size_t j = 0; j < w; ++j) out.node_feat(perm[v], j) = g.node_feat(v, j);
    }
    if (!g.node_labels.empty()) {
        out.node_labels.resize(g.n_nodes);
        for (std::size_t v = 0; v < g.n_nodes; ++v) out.node_labels[perm[v]] = g.node_labels[v];
    }
    return out;
}

Graph shuffle_neighbors(const Graph& g, Rng& rng) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> edges;
    for (std::size_t v = 0; v < g.n_nodes; ++v) {
        std::vector<std::size_t> row(g.degree(v));
        std::iota(row.begin(), row.end(), std::size_t{g.offsets[v]});
        rng.shuffle(row.begin(), row.end());
        for (std::size_t e : row) edges.emplace_back(static_cast<std::uint32_t>(v), g.neighbors[e], e);
    }
    Graph out = rebuild(g, g.n_nodes, edges);
    out.node_codes = g.node_codes;
    out.node_feat = g.node_feat;
    out.node_labels = g.node_labels;
    return out;
}

}  // namespace fog
