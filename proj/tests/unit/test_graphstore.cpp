#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fog/graphstore.hpp"

using namespace fog;

namespace {

std::vector<std::vector<int>> dense(const Graph& g) {
    std::vector<std::vector<int>> a(g.n_nodes, std::vector<int>(g.n_nodes, 0));
    for (std::size_t v = 0; v < g.n_nodes; ++v)
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) a[v][g.neighbors[e]] = 1;
    return a;
}

std::size_t find_root(std::vector<std::size_t>& p, std::size_t x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
}

}  // namespace

TEST_CASE("build_csr examples") {
    auto r = build_csr(3, {{0, 1}, {1, 2}}, true);
    CHECK(r.graph.offsets == IndexVector{0, 1, 3, 4});
    CHECK(r.graph.neighbors == IndexVector{1, 0, 2, 1});

    auto s = build_csr(2, {{0, 0}}, true);
    CHECK(s.graph.offsets == IndexVector{0, 0, 0});
    CHECK(s.dropped_self_loops == 1);

    CHECK_THROWS_AS(build_csr(2, {{0, 2}}, true), IndexError);
}

TEST_CASE("build_csr matches a dense adjacency oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t n = 2 + rng.index(12);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        std::vector<std::vector<int>> oracle(n, std::vector<int>(n, 0));
        for (int i = 0; i < 30; ++i) {
            auto u = static_cast<std::uint32_t>(rng.index(n)), v = static_cast<std::uint32_t>(rng.index(n));
            edges.emplace_back(u, v);
            if (u != v) oracle[u][v] = oracle[v][u] = 1;
        }
        Graph g = build_csr(n, edges, true).graph;
        CHECK_NOTHROW(validate(g));
        CHECK(dense(g) == oracle);
        for (std::size_t v = 0; v < n; ++v)
            CHECK(std::is_sorted(g.neighbors.begin() + g.offsets[v], g.neighbors.begin() + g.offsets[v + 1]));
    }
}

TEST_CASE("validate rejects broken graphs") {
    Graph g = build_csr(3, {{0, 1}, {1, 2}}, true).graph;
    Graph bad = g;
    bad.neighbors[0] = 7;
    CHECK_THROWS_AS(validate(bad), GraphError);
    bad = g;
    bad.neighbors[0] = 0;
    CHECK_THROWS_AS(validate(bad), GraphError);
    bad = build_csr(3, {{0, 1}}, false).graph;
    bad.undirected = true;
    CHECK_THROWS_AS(validate(bad), GraphError);
    bad = g;
    bad.offsets = {0, 2, 1, 4};
    CHECK_THROWS_AS(validate(bad), GraphError);
}

TEST_CASE("batch_graphs offsets and segments") {
    Graph a = build_csr(3, {{0, 1}, {1, 2}}, true).graph;
    Graph b = build_csr(4, {{0, 3}, {2, 1}}, true).graph;
    for (Graph* g : {&a, &b}) {
        g->node_kind = FeatureKind::categorical;
        g->node_codes.assign(g->n_nodes, 1);
    }
    GraphBatch batch = batch_graphs(std::vector<Graph>{a, b});
    CHECK(batch.n_nodes() == 7);
    CHECK(batch.node_segment[3] == 1);
    CHECK(batch.node_offsets[1] == 3);
    CHECK(batch.n_edges() == a.n_edges() + b.n_edges());
    CHECK_NOTHROW(validate(batch.graph));
    for (std::size_t e = batch.edge_offsets[1]; e < batch.edge_offsets[2]; ++e) CHECK(batch.edge_src[e] >= 3);

    GraphBatch one = batch_graphs(std::vector<Graph>{a});
    CHECK(one.graph.offsets == a.offsets);
    CHECK(one.graph.neighbors == a.neighbors);
    CHECK(one.node_segment == IndexVector(3, 0));

    Graph c = b;
    c.node_kind = FeatureKind::none;
    c.node_codes.clear();
    CHECK_THROWS_AS(batch_graphs(std::vector<Graph>{a, c}), SchemaError);
}

TEST_CASE("relabeling and neighbor shuffles keep graphs valid") {
    PatternConfig cfg;
    cfg.sizes = {3, 0, 0};
    DatasetSplit d = gen_sbm_pattern(cfg);
    Rng rng(4);
    for (const Graph& g : d.train) {
        IndexVector perm(g.n_nodes);
        std::iota(perm.begin(), perm.end(), 0u);
        rng.shuffle(perm.begin(), perm.end());
        Graph p = permute_nodes(g, perm);
        CHECK_NOTHROW(validate(p));
        for (std::size_t v = 0; v < g.n_nodes; ++v) {
            CHECK(p.node_codes[perm[v]] == g.node_codes[v]);
            CHECK(p.degree(perm[v]) == g.degree(v));
        }
        Graph s = shuffle_neighbors(g, rng);
        CHECK_NOTHROW(validate(s));
        CHECK(dense(s) == dense(g));
    }
}

TEST_CASE("pattern generator degenerate probabilities give cliques") {
    PatternConfig cfg;
    cfg.sizes = {2, 0, 0};
    cfg.block_sizes = {4, 5};
    cfg.p_intra = 1.0;
    cfg.p_inter = 0.0;
    cfg.p_pattern_link = 0.0;
    cfg.p_pattern = 1.0;
    cfg.pattern_size = 3;
    DatasetSplit d = gen_sbm_pattern(cfg);
    for (const Graph& g : d.train) {
        auto a = dense(g);
        for (std::size_t u = 0; u < 12; ++u)
            for (std::size_t v = 0; v < 12; ++v) {
                auto blk = [](std::size_t x) { return x < 4 ? 0 : (x < 9 ? 1 : 2); };
                CHECK(a[u][v] == (u != v && blk(u) == blk(v) ? 1 : 0));
            }
        for (std::size_t v = 0; v < 12; ++v) CHECK(g.node_labels[v] == (v >= 9 ? 1 : 0));
        for (auto c : g.node_codes) CHECK(c < 3);
    }
}

TEST_CASE("pattern generator validation") {
    PatternConfig cfg;
    cfg.p_intra = 1.5;
    CHECK_THROWS_AS(gen_sbm_pattern(cfg), std::invalid_argument);
    cfg = {};
    cfg.nodes_per_graph = 10;
    CHECK_THROWS_AS(gen_sbm_pattern(cfg), std::invalid_argument);
    cfg = {};
    cfg.pattern_size = 0;
    CHECK_THROWS_AS(gen_sbm_pattern(cfg), std::invalid_argument);
}

TEST_CASE("generators are deterministic in their seed") {
    PatternConfig p;
    p.sizes = {5, 2, 2};
    p.seed = 17;
    CHECK(dataset_to_string(gen_sbm_pattern(p)) == dataset_to_string(gen_sbm_pattern(p)));
    PatternConfig q = p;
    q.seed = 18;
    CHECK(dataset_to_string(gen_sbm_pattern(p)) != dataset_to_string(gen_sbm_pattern(q)));
    ClusterConfig c;
    c.sizes = {3, 1, 1};
    CHECK(dataset_to_string(gen_sbm_cluster(c)) == dataset_to_string(gen_sbm_cluster(c)));
}

TEST_CASE("cluster generator conventions") {
    ClusterConfig cfg;
    cfg.sizes = {10, 0, 0};
    DatasetSplit d = gen_sbm_cluster(cfg);
    CHECK(d.n_classes == 6);
    CHECK(d.node_features.vocab == 7);
    for (const Graph& g : d.train) {
        std::set<std::uint32_t> revealed;
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            if (g.node_codes[v] != 0) {
                revealed.insert(g.node_codes[v]);
                CHECK(g.node_codes[v] == static_cast<std::uint32_t>(g.node_labels[v] + 1));
            }
        CHECK(revealed.size() == 6);
        CHECK(std::count_if(g.node_codes.begin(), g.node_codes.end(), [](auto c) { return c != 0; }) == 6);
    }

    cfg.p_inter = 0.0;
    cfg.ensure_min_degree = false;
    cfg.n_communities = 3;
    cfg.nodes_per_graph = 30;
    for (const Graph& g : gen_sbm_cluster(cfg).train) {
        std::vector<std::size_t> parent(g.n_nodes);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
                parent[find_root(parent, v)] = find_root(parent, g.neighbors[e]);
        for (std::size_t u = 0; u < g.n_nodes; ++u)
            for (std::size_t v = 0; v < g.n_nodes; ++v)
                if (find_root(parent, u) == find_root(parent, v)) CHECK(g.node_labels[u] == g.node_labels[v]);
    }

    ClusterConfig big;
    big.n_communities = 50;
    big.nodes_per_graph = 20;
    CHECK_THROWS_AS(gen_sbm_cluster(big), std::invalid_argument);
}

TEST_CASE("second-order label rule") {
    Graph g = build_csr(3, {{0, 1}}, true).graph;
    g.node_kind = FeatureKind::continuous;
    g.node_feat = Tensor<double>::matrix({{1, 0}, {1, 0}, {0, 0}});
    CHECK(second_order_label(g, 0) == 1);
    g.node_feat(0, 0) = -1;
    CHECK(second_order_label(g, 0) == 0);
}

TEST_CASE("second-order generator guarantees and balance") {
    SecondOrderConfig cfg;
    cfg.sizes = {1250, 0, 0};
    cfg.seed = 3;
    DatasetSplit d = gen_second_order_task(cfg);
    CHECK(find_discordant_pair(d.train).graph >= 0);
    std::size_t ones = 0, total = 0;
    for (const Graph& g : d.train) {
        for (std::size_t v = 0; v < g.n_nodes; ++v) {
            CHECK(g.node_labels[v] == second_order_label(g, v));
            ones += static_cast<std::size_t>(g.node_labels[v]);
            ++total;
        }
    }
    CHECK(total == 10000);
    const double frac = static_cast<double>(ones) / static_cast<double>(total);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);

    cfg.nodes = 3;
    CHECK_THROWS_AS(gen_second_order_task(cfg), std::invalid_argument);
}

TEST_CASE("molecule and tour generators produce valid graphs") {
    MoleculeConfig m;
    m.sizes = {5, 1, 1};
    DatasetSplit md = gen_molecules(m);
    for (const Graph& g : md.train) {
        CHECK_NOTHROW(validate(g));
        CHECK(g.edge_codes.size() == g.n_edges());
        CHECK(g.n_nodes >= 9);
    }
    TourConfig t;
    t.sizes = {5, 1, 1};
    DatasetSplit td = gen_tours(t);
    for (const Graph& g : td.train) {
        CHECK_NOTHROW(validate(g));
        const auto ones = std::count(g.edge_labels.begin(), g.edge_labels.end(), 1);
        CHECK(ones > 0);
        CHECK(ones <= static_cast<long>(2 * g.n_nodes));
    }
}

TEST_CASE("dataset files round-trip byte for byte") {
    const auto dir = std::filesystem::temp_directory_path() / "fog_graphstore_test";
    std::filesystem::create_directories(dir);
    std::vector<DatasetSplit> sets;
    PatternConfig p;
    p.sizes = {3, 1, 1};
    sets.push_back(gen_sbm_pattern(p));
    SecondOrderConfig s;
    s.sizes = {3, 1, 1};
    sets.push_back(gen_second_order_task(s));
    MoleculeConfig m;
    m.sizes = {3, 1, 1};
    sets.push_back(gen_molecules(m));
    TourConfig t;
    t.sizes = {3, 1, 1};
    sets.push_back(gen_tours(t));
    for (const DatasetSplit& d : sets) {
        const auto path = dir / (d.generator + ".jsonl");
        save_dataset(d, path);
        DatasetSplit loaded = load_dataset(path);
        CHECK(dataset_to_string(loaded) == dataset_to_string(d));
        for (const Graph& g : loaded.train) CHECK_NOTHROW(validate(g));
        CHECK(loaded.train.size() == 3);
    }

    const std::string text = dataset_to_string(sets[0]);
    const std::string truncated = text.substr(0, text.size() - 40);
    try {
        dataset_from_string(truncated);
        FAIL("expected DatasetFormatError");
    } catch (const DatasetFormatError& e) {
        CHECK(e.line() == 6);
    }
    // Dropping a whole line is caught by the header counts.
    const std::string short_file = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_AS(dataset_from_string(short_file), DatasetFormatError);
    CHECK_THROWS_AS(dataset_from_string("{\"schema_version\": 2}\n"), DatasetFormatError);
    std::filesystem::remove_all(dir);
}
