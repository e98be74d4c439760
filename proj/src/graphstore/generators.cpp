#include "fog/graphstore/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fog {

namespace {

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

void check_probability(const char* name, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

void check_sizes(const SplitSizes& s) {
    if (s.total() == 0) throw std::invalid_argument("dataset must contain at least one graph");
}

/// Attach every isolated node to a uniformly chosen other node.
void connect_isolated(std::size_t n, EdgeList& edges, Rng& rng) {
    if (n < 2) return;
    std::vector<std::size_t> deg(n, 0);
    for (const auto& [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (deg[v] > 0) continue;
        std::size_t u = rng.index(n - 1);
        if (u >= v) ++u;
        edges.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(u));
        ++deg[v];
        ++deg[u];
    }
}

template <typename Fn>
void fill_splits(DatasetSplit& d, const SplitSizes& sizes, Fn&& make) {
    for (std::size_t i = 0; i < sizes.train; ++i) d.train.push_back(make());
    for (std::size_t i = 0; i < sizes.val; ++i) d.val.push_back(make());
    for (std::size_t i = 0; i < sizes.test; ++i) d.test.push_back(make());
}

nlohmann::ordered_json sizes_json(const SplitSizes& s) {
    return {{"train", s.train}, {"val", s.val}, {"test", s.test}};
}

}  // namespace

DatasetSplit gen_sbm_pattern(const PatternConfig& cfg) {
    check_sizes(cfg.sizes);
    check_probability("p_intra", cfg.p_intra);
    check_probability("p_inter", cfg.p_inter);
    check_probability("p_pattern", cfg.p_pattern);
    const double p_link = cfg.p_pattern_link < 0 ? cfg.p_inter : cfg.p_pattern_link;
    check_probability("p_pattern_link", p_link);
    if (cfg.block_sizes.empty()) throw std::invalid_argument("block_sizes must not be empty");
    const std::size_t background = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), std::size_t{0});
    const std::size_t n = background + cfg.pattern_size;
    if (cfg.nodes_per_graph != 0 && cfg.nodes_per_graph != n) {
        throw std::invalid_argument("nodes_per_graph must equal sum(block_sizes) + pattern_size = " + std::to_string(n));
    }
    if (cfg.pattern_size == 0 || cfg.pattern_size >= n) {
        throw std::invalid_argument("pattern_size must be positive and smaller than nodes_per_graph");
    }

    std::vector<std::size_t> block(n);
    {
        std::size_t v = 0;
        for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b)
            for (std::size_t i = 0; i < cfg.block_sizes[b]; ++i) block[v++] = b;
        for (; v < n; ++v) block[v] = cfg.block_sizes.size();  // pattern
    }
    const std::size_t pattern_block = cfg.block_sizes.size();

    Rng rng(cfg.seed);
    DatasetSplit d;
    d.generator = "sbm-pattern";
    d.seed = cfg.seed;
    d.task = TaskKind::node_class;
    d.node_features = {FeatureKind::categorical, 3, 0};
    d.n_classes = 2;
    d.params = {{"sizes", sizes_json(cfg.sizes)}, {"block_sizes", cfg.block_sizes}, {"p_intra", cfg.p_intra},
                {"p_inter", cfg.p_inter}, {"pattern_size", cfg.pattern_size}, {"p_pattern", cfg.p_pattern},
                {"p_pattern_link", p_link}, {"ensure_min_degree", cfg.ensure_min_degree}};

    fill_splits(d, cfg.sizes, [&] {
        EdgeList edges;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v) {
                const bool pu = block[u] == pattern_block, pv = block[v] == pattern_block;
                double p;
                if (pu && pv) p = cfg.p_pattern;
                else if (pu || pv) p = p_link;
                else p = block[u] == block[v] ? cfg.p_intra : cfg.p_inter;
                if (rng.bernoulli(p)) edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
            }
        if (cfg.ensure_min_degree) connect_isolated(n, edges, rng);
        Graph g = build_csr(n, edges, true).graph;
        g.node_kind = FeatureKind::categorical;
        g.node_codes.resize(n);
        for (auto& c : g.node_codes) c = static_cast<std::uint32_t>(rng.index(3));
        g.node_labels.resize(n);
        for (std::size_t v = 0; v < n; ++v) g.node_labels[v] = block[v] == pattern_block ? 1 : 0;
        return g;
    });
    return d;
}

DatasetSplit gen_sbm_cluster(const ClusterConfig& cfg) {
    check_sizes(cfg.sizes);
    check_probability("p_intra", cfg.p_intra);
    check_probability("p_inter", cfg.p_inter);
    if (cfg.n_communities < 2) throw std::invalid_argument("n_communities must be at least 2");
    if (cfg.n_communities > cfg.nodes_per_graph) {
        throw std::invalid_argument("n_communities exceeds nodes_per_graph; a community would be empty");
    }
    const std::size_t n = cfg.nodes_per_graph, k = cfg.n_communities;
    std::vector<std::size_t> community(n);
    for (std::size_t v = 0, c = 0; c < k; ++c) {
        const std::size_t size = n / k + (c < n % k ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) community[v++] = c;
    }

    Rng rng(cfg.seed);
    DatasetSplit d;
    d.generator = "sbm-cluster";
    d.seed = cfg.seed;
    d.task = TaskKind::node_class;
    d.node_features = {FeatureKind::categorical, k + 1, 0};
    d.n_classes = k;
    d.params = {{"sizes", sizes_json(cfg.sizes)}, {"n_communities", k}, {"nodes_per_graph", n},
                {"p_intra", cfg.p_intra}, {"p_inter", cfg.p_inter}, {"ensure_min_degree", cfg.ensure_min_degree}};

    fill_splits(d, cfg.sizes, [&] {
        EdgeList edges;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v)
                if (rng.bernoulli(community[u] == community[v] ? cfg.p_intra : cfg.p_inter))
                    edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
        if (cfg.ensure_min_degree) connect_isolated(n, edges, rng);
        Graph g = build_csr(n, edges, true).graph;
        g.node_kind = FeatureKind::categorical;
        g.node_codes.assign(n, 0);
        g.node_labels.resize(n);
        for (std::size_t v = 0; v < n; ++v) g.node_labels[v] = static_cast<std::int32_t>(community[v]);
        std::size_t first = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t size = n / k + (c < n % k ? 1 : 0);
            g.node_codes[first + rng.index(size)] = static_cast<std::uint32_t>(c + 1);
            first += size;
        }
        return g;
    });
    return d;
}

std::int32_t second_order_label(const Graph& g, std::size_t v) {
    const std::size_t w = g.node_width();
    double dot = 0;
    for (std::size_t j = 0; j < w; ++j) {
        double s = 0;
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) s += g.node_feat(g.neighbors[e], j);
        dot += g.node_feat(v, j) * s;
    }
    return dot > 0 ? 1 : 0;
}

DatasetSplit gen_second_order_task(const SecondOrderConfig& cfg) {
    check_sizes(cfg.sizes);
    check_probability("p_extra", cfg.p_extra);
    if (cfg.nodes < 4) throw std::invalid_argument("second-order graphs need at least 4 nodes");
    const std::size_t n = cfg.nodes;

    Rng rng(cfg.seed);
    DatasetSplit d;
    d.generator = "second-order";
    d.seed = cfg.seed;
    d.task = TaskKind::node_class;
    d.node_features = {FeatureKind::continuous, 0, 2};
    d.n_classes = 2;
    d.params = {{"sizes", sizes_json(cfg.sizes)}, {"nodes", n}, {"p_extra", cfg.p_extra}};

    fill_splits(d, cfg.sizes, [&] {
        // Node 0 is the hub. Leaves 1 and 2 only touch the hub, so they share
        // a neighbor sum; leaf 2 is reflected if needed to disagree with leaf 1.
        EdgeList edges;
        for (std::size_t v = 1; v < n; ++v) edges.emplace_back(0, static_cast<std::uint32_t>(v));
        for (std::size_t u = 3; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v)
                if (rng.bernoulli(cfg.p_extra)) edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
        Graph g = build_csr(n, edges, true).graph;
        g.node_kind = FeatureKind::continuous;
        g.node_feat = rng.normal_tensor<double>({n, 2});
        if (second_order_label(g, 1) == second_order_label(g, 2)) {
            g.node_feat(2, 0) = -g.node_feat(2, 0);
            g.node_feat(2, 1) = -g.node_feat(2, 1);
        }
        g.node_labels.resize(n);
        for (std::size_t v = 0; v < n; ++v) g.node_labels[v] = second_order_label(g, v);
        return g;
    });
    if (find_discordant_pair(d.train.empty() ? (d.val.empty() ? d.test : d.val) : d.train).graph < 0) {
        throw std::logic_error("second-order generator produced no discordant pair");
    }
    return d;
}

DiscordantPair find_discordant_pair(const std::vector<Graph>& graphs) {
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = graphs[gi];
        const std::size_t w = g.node_width();
        std::vector<std::vector<double>> sums(g.n_nodes, std::vector<double>(w, 0.0));
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
                for (std::size_t j = 0; j < w; ++j) sums[v][j] += g.node_feat(g.neighbors[e], j);
        for (std::size_t a = 0; a < g.n_nodes; ++a)
            for (std::size_t b = a + 1; b < g.n_nodes; ++b)
                if (sums[a] == sums[b] && g.node_labels[a] != g.node_labels[b])
                    return {static_cast<std::ptrdiff_t>(gi), static_cast<std::ptrdiff_t>(a), static_cast<std::ptrdiff_t>(b)};
    }
    return {};
}

DatasetSplit gen_molecules(const MoleculeConfig& cfg) {
    check_sizes(cfg.sizes);
    if (cfg.min_nodes < 2 || cfg.max_nodes < cfg.min_nodes) throw std::invalid_argument("invalid molecule size range");
    if (cfg.atom_types == 0 || cfg.bond_types == 0) throw std::invalid_argument("atom and bond vocabularies must be nonempty");

    Rng rng(cfg.seed);
    // Fixed per-type contributions drawn once, so the target is a deterministic
    // function of structure shared by every split.
    std::vector<double> atom_weight(cfg.atom_types), bond_weight(cfg.bond_types);
    for (auto& w : atom_weight) w = rng.normal();
    for (auto& w : bond_weight) w = rng.normal(0.0, 0.5);

    DatasetSplit d;
    d.generator = cfg.node_features ? "molecules" : "molecules-nofeat";
    d.seed = cfg.seed;
    d.task = TaskKind::graph_regress;
    d.node_features = {FeatureKind::categorical, cfg.node_features ? cfg.atom_types : 1, 0};
    d.edge_features = {FeatureKind::categorical, cfg.bond_types, 0};
    d.n_classes = 0;
    d.params = {{"sizes", sizes_json(cfg.sizes)}, {"min_nodes", cfg.min_nodes}, {"max_nodes", cfg.max_nodes},
                {"atom_types", cfg.atom_types}, {"bond_types", cfg.bond_types}, {"ring_edges", cfg.ring_edges},
                {"node_features", cfg.node_features}};

    fill_splits(d, cfg.sizes, [&] {
        const std::size_t n = cfg.min_nodes + rng.index(cfg.max_nodes - cfg.min_nodes + 1);
        EdgeList edges;
        for (std::size_t v = 1; v < n; ++v) edges.emplace_back(static_cast<std::uint32_t>(rng.index(v)), static_cast<std::uint32_t>(v));
        const double p_ring = std::min(1.0, cfg.ring_edges / static_cast<double>(n));
        for (std::size_t v = 0; v < n; ++v)
            if (rng.bernoulli(p_ring)) {
                const std::size_t u = rng.index(n);
                if (u != v) edges.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(u));
            }
        std::vector<std::uint32_t> bond(edges.size());
        for (auto& b : bond) b = static_cast<std::uint32_t>(rng.index(cfg.bond_types));
        std::vector<std::uint32_t> atom(n);
        for (auto& a : atom) a = static_cast<std::uint32_t>(rng.index(cfg.atom_types));

        CsrResult csr = build_csr(n, edges, true);
        Graph g = std::move(csr.graph);
        g.node_kind = FeatureKind::categorical;
        g.node_codes = cfg.node_features ? IndexVector(atom.begin(), atom.end()) : IndexVector(n, 0);
        g.edge_kind = FeatureKind::categorical;
        for (std::size_t o : csr.origin) g.edge_codes.push_back(bond[o]);

        double target = 0;
        for (std::size_t v = 0; v < n; ++v) target += atom_weight[atom[v]] * std::sqrt(static_cast<double>(g.degree(v)));
        for (std::size_t e = 0; e < g.n_edges(); ++e) target += 0.5 * bond_weight[g.edge_codes[e]];
        g.graph_target = target / std::sqrt(static_cast<double>(n));
        return g;
    });
    return d;
}

DatasetSplit gen_tours(const TourConfig& cfg) {
    check_sizes(cfg.sizes);
    if (cfg.min_nodes < 3 || cfg.max_nodes < cfg.min_nodes) throw std::invalid_argument("invalid tour size range");
    if (cfg.k == 0) throw std::invalid_argument("k must be positive");

    Rng rng(cfg.seed);
    DatasetSplit d;
    d.generator = "tours";
    d.seed = cfg.seed;
    d.task = TaskKind::edge_class;
    d.node_features = {FeatureKind::continuous, 0, 2};
    d.edge_features = {FeatureKind::continuous, 0, 1};
    d.n_classes = 2;
    d.params = {{"sizes", sizes_json(cfg.sizes)}, {"min_nodes", cfg.min_nodes}, {"max_nodes", cfg.max_nodes}, {"k", cfg.k}};

    fill_splits(d, cfg.sizes, [&] {
        const std::size_t n = cfg.min_nodes + rng.index(cfg.max_nodes - cfg.min_nodes + 1);
        Tensor<double> xy = rng.uniform_tensor<double>({n, 2}, 0.0, 1.0);
        auto dist = [&](std::size_t a, std::size_t b) { return std::hypot(xy(a, 0) - xy(b, 0), xy(a, 1) - xy(b, 1)); };

        EdgeList edges;
        const std::size_t k = std::min(cfg.k, n - 1);
        for (std::size_t v = 0; v < n; ++v) {
            std::vector<std::size_t> others;
            for (std::size_t u = 0; u < n; ++u)
                if (u != v) others.push_back(u);
            std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(),
                              [&](std::size_t a, std::size_t b) { return dist(v, a) < dist(v, b); });
            for (std::size_t i = 0; i < k; ++i) edges.emplace_back(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(others[i]));
        }

        // Nearest-neighbor tour from node 0.
        std::vector<bool> visited(n, false);
        std::vector<std::vector<bool>> on_tour(n, std::vector<bool>(n, false));
        std::size_t cur = 0;
        visited[0] = true;
        for (std::size_t step = 1; step < n; ++step) {
            std::size_t best = n;
            for (std::size_t u = 0; u < n; ++u)
                if (!visited[u] && (best == n || dist(cur, u) < dist(cur, best))) best = u;
            on_tour[cur][best] = on_tour[best][cur] = true;
            visited[best] = true;
            cur = best;
        }
        on_tour[cur][0] = on_tour[0][cur] = true;

        Graph g = build_csr(n, edges, true).graph;
        g.node_kind = FeatureKind::continuous;
        g.node_feat = xy;
        g.edge_kind = FeatureKind::continuous;
        g.edge_feat = Tensor<double>({g.n_edges(), 1});
        g.edge_labels.resize(g.n_edges());
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                g.edge_feat(e, 0) = dist(v, g.neighbors[e]);
                g.edge_labels[e] = on_tour[v][g.neighbors[e]] ? 1 : 0;
            }
        return g;
    });
    return d;
}

}  // namespace fog
