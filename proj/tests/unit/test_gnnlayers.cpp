#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"

using namespace fog;
using namespace fog::testing;
using TD = Tensor<double>;

namespace {

/// Scalar-width layer whose matrices are all set to `w` and BN is identity.
LayerParams<double> unit_layer(Family f, double w = 1.0) {
    Rng rng(0);
    LayerDims d{1, 1, 1, 1, 1, 1};
    LayerParams<double> p = make_layer<double>(f, d, false, rng, "l");
    std::vector<Parameter<double>*> ps;
    p.collect(ps);
    for (auto* q : ps)
        if (q->name.find("weight") != std::string::npos) q->value.fill(w);
    p.set_bn_mode(BnMode::identity);
    return p;
}

GraphBatch star(std::size_t leaves) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
    return batch_graphs(std::vector<Graph>{build_csr(leaves + 1, edges, true).graph});
}

GraphBatch with_isolated(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
    return batch_graphs(std::vector<Graph>{build_csr(n, edges, true).graph});
}

TD column(std::initializer_list<double> v) {
    TD t({v.size(), 1});
    std::size_t i = 0;
    for (double x : v) t[i++] = x;
    return t;
}

}  // namespace

TEST_CASE("fog scalar example") {
    auto p = unit_layer(Family::fog);
    GraphBatch b = star(2);
    Tape<double> t;
    TD out = fog_forward(b, t.constant(column({2, 1, 3})), *p.fog).value();
    CHECK(out(0, 0) == doctest::Approx(8.0));
    CHECK(fog_plain_forward(b, t.constant(column({2, 1, 3})), *p.fog).value()(0, 0) == doctest::Approx(8.0));

    p.fog->w_vu.weight.value.fill(-1.0);
    t.clear();
    TD flipped = fog_forward(b, t.constant(column({1, 1, 2})), *p.fog).value();
    CHECK(flipped(0, 0) == doctest::Approx(-3.0));
    CHECK(fog_plain_forward(b, t.constant(column({1, 1, 2})), *p.fog).value()(0, 0) == 0.0);

    GraphBatch iso = with_isolated(3, {{0, 1}});
    auto q = unit_layer(Family::fog);
    CHECK(fog_forward(iso, t.constant(column({1, 2, 3})), *q.fog).value()(2, 0) == 0.0);
}

TEST_CASE("fog equals the per-edge kron oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Graph g = random_graph(8, 0.35, rng);
        LayerCase c(Family::fog, g, seed);
        c.layer.set_bn_mode(BnMode::eval);
        for (auto* bn : {&c.layer.fog->bn1, &c.layer.fog->bn2}) {
            bn->running_mean = rng.normal_tensor<double>({bn->channels()});
            bn->running_var = rng.uniform_tensor<double>({bn->channels()}, 0.5, 2.0);
        }
        Tape<double> t;
        Var<double> h = t.constant(c.h.value);
        TD fast = fog_forward(c.batch, h, *c.layer.fog).value();

        // Literal form: for every edge, kron(center_v, neighbor_u), summed, then W_vu.
        auto& f = *c.layer.fog;
        Var<double> center = batchnorm(relu(apply(f.w1, h)), f.bn1);
        Var<double> neighbor = batchnorm(relu(apply(f.w2, center)), f.bn2);
        const std::size_t k = center.shape()[1] * neighbor.shape()[1];
        TD agg({g.n_nodes, k});
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                Var<double> cv = t.constant(TD({center.shape()[1]}, std::vector<double>(center.value().row(v).begin(), center.value().row(v).end())));
                const auto nrow = neighbor.value().row(g.neighbors[e]);
                Var<double> nu = t.constant(TD({neighbor.shape()[1]}, std::vector<double>(nrow.begin(), nrow.end())));
                TD kv = kron(cv, nu).value();
                for (std::size_t j = 0; j < k; ++j) agg(v, j) += kv[j];
            }
        TD slow = apply(f.w_vu, t.constant(agg)).value();
        CHECK(max_abs_diff(fast, slow) < 1e-12);
    }
}

TEST_CASE("gcn examples") {
    auto p = unit_layer(Family::gcn);
    GraphBatch path = with_isolated(3, {{0, 1}, {1, 2}});
    Tape<double> t;
    TD q = gcn_preactivation(path, t.constant(column({1, 1, 1})), *p.gcn).value();
    CHECK(std::abs(q(1, 0) - std::sqrt(2.0)) < 1e-6);

    GraphBatch iso = with_isolated(3, {{0, 1}});
    CHECK(gcn_preactivation(iso, t.constant(column({1, 2, 3})), *p.gcn).value()(2, 0) == 0.0);

    TD a = gcn_preactivation(path, t.constant(column({1, 5, 1})), *p.gcn).value();
    TD b = gcn_preactivation(path, t.constant(column({1, -7, 1})), *p.gcn).value();
    CHECK(a(1, 0) == b(1, 0));
}

TEST_CASE("gat examples") {
    Rng rng(1);
    Graph g = random_graph(5, 0.5, rng);
    GraphBatch b = batch_graphs(std::vector<Graph>{g});
    LayerDims d{3, 0, 0, 0, 4, 2};
    auto p = make_layer<double>(Family::gat, d, false, rng, "gat");
    TD h = rng.normal_tensor<double>({5, 3});

    SUBCASE("zero attention gives the neighbor mean") {
        p.gat->attn_center.value.fill(0);
        p.gat->attn_neighbor.value.fill(0);
        Tape<double> t;
        TD q = gat_preactivation(b, t.constant(h), *p.gat).value();
        TD uh = apply(p.gat->u, t.constant(h)).value();
        for (std::size_t v = 0; v < 5; ++v)
            for (std::size_t j = 0; j < 4; ++j) {
                double m = 0;
                for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) m += uh(g.neighbors[e], j);
                m /= static_cast<double>(g.degree(v));
                CHECK(std::abs(q(v, j) - m) < 1e-12);
            }
        p.set_bn_mode(BnMode::identity);
        TD out = gat_forward(b, t.constant(h), p).value();
        CHECK(std::abs(out(0, 0) - (q(0, 0) > 0 ? q(0, 0) : std::expm1(q(0, 0)))) < 1e-12);
    }

    SUBCASE("single neighbor takes all the weight") {
        GraphBatch pair = with_isolated(2, {{0, 1}});
        Tape<double> t;
        TD hp = rng.normal_tensor<double>({2, 3});
        TD q = gat_preactivation(pair, t.constant(hp), *p.gat).value();
        TD uh = apply(p.gat->u, t.constant(hp)).value();
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(q(0, j) - uh(1, j)) < 1e-12);
    }

    SUBCASE("per-head loop oracle") {
        Tape<double> t;
        TD q = gat_preactivation(b, t.constant(h), *p.gat).value();
        TD uh = apply(p.gat->u, t.constant(h)).value();
        const TD& ac = p.gat->attn_center.value;
        const TD& an = p.gat->attn_neighbor.value;
        for (std::size_t v = 0; v < 5; ++v)
            for (std::size_t k = 0; k < 2; ++k) {
                std::vector<double> logits;
                for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                    double s = 0;
                    for (std::size_t j = 0; j < 2; ++j)
                        s += ac(k, j) * uh(v, k * 2 + j) + an(k, j) * uh(g.neighbors[e], k * 2 + j);
                    logits.push_back(s > 0 ? s : 0.2 * s);
                }
                double z = 0;
                for (double l : logits) z += std::exp(l);
                for (std::size_t j = 0; j < 2; ++j) {
                    double acc = 0;
                    for (std::size_t i = 0; i < logits.size(); ++i)
                        acc += std::exp(logits[i]) / z * uh(g.neighbors[g.offsets[v] + i], k * 2 + j);
                    CHECK(std::abs(q(v, k * 2 + j) - acc) < 1e-6);
                }
            }
    }

    SUBCASE("isolated node is rejected") {
        GraphBatch iso = with_isolated(3, {{0, 1}});
        Tape<double> t;
        CHECK_THROWS_AS(gat_preactivation(iso, t.constant(rng.normal_tensor<double>({3, 3})), *p.gat), EmptyNeighborhoodError);
    }

    CHECK_THROWS_AS(make_layer<double>(Family::gat, LayerDims{3, 0, 0, 0, 5, 2}, false, rng, "bad"), DimensionError);
}

TEST_CASE("gatedgcn examples") {
    Rng rng(2);
    LayerDims d{3, 0, 0, 0, 3, 1};
    auto p = make_layer<double>(Family::gatedgcn, d, false, rng, "g");
    GraphBatch b = with_isolated(4, {{0, 1}, {0, 2}});
    TD h = rng.normal_tensor<double>({4, 3});
    TD e = rng.normal_tensor<double>({4, 3});

    SUBCASE("zero edge activations give uniform gates") {
        for (auto* l : {&p.gated->a, &p.gated->b, &p.gated->c}) l->weight.value.fill(0);
        p.gated->bn_edge.mode = BnMode::identity;
        Tape<double> t;
        GatedParts<double> parts = gatedgcn_parts(b, t.constant(h), t.constant(e), *p.gated);
        for (double v : parts.edge.value().data()) CHECK(v == 0.0);
        // Node 0 has two neighbors: gate = 0.5 / (1.0 + 1e-6).
        for (std::size_t e0 = 0; e0 < 2; ++e0)
            for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(parts.gate.value()(e0, j) - 0.5 / (1.0 + 1e-6)) < 1e-12);
        CHECK(std::abs(parts.gate.value()(0, 0) - 0.4999995) < 1e-9);
    }

    SUBCASE("isolated node keeps only U h_v") {
        Tape<double> t;
        GatedParts<double> parts = gatedgcn_parts(b, t.constant(h), t.constant(e), *p.gated);
        TD uh = apply(p.gated->u, t.constant(h)).value();
        for (std::size_t j = 0; j < 3; ++j) CHECK(parts.node.value()(3, j) == uh(3, j));
        p.set_bn_mode(BnMode::identity);
        TD out = gatedgcn_forward(b, t.constant(h), t.constant(e), p).h.value();
        for (std::size_t j = 0; j < 3; ++j) CHECK(out(3, j) == std::max(0.0, uh(3, j)));
    }

    SUBCASE("gates lie in (0,1) and sum to at most 1 per node") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng r(seed);
            Graph g = random_graph(9, 0.4, r);
            LayerCase c(Family::gatedgcn, g, seed);
            Tape<double> t;
            GatedParts<double> parts = gatedgcn_parts(c.batch, t.param(c.h), t.param(c.e), *c.layer.gated);
            const TD& gate = parts.gate.value();
            for (double v : gate.data()) CHECK((v > 0 && v < 1));
            for (std::size_t v = 0; v < g.n_nodes; ++v)
                for (std::size_t j = 0; j < gate.shape()[1]; ++j) {
                    double s = 0;
                    for (std::size_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k) s += gate(k, j);
                    CHECK(s <= 1.0);
                }
        }
    }
}

TEST_CASE("gin examples") {
    auto p = unit_layer(Family::gin);
    GraphBatch b = star(2);
    TD h = column({1, 2, 3});
    Tape<double> t;
    CHECK(gin_preactivation(b, t.constant(h), *p.gin).value()(0, 0) == doctest::Approx(6.0));
    p.gin->eps.value[0] = 1.0;
    t.clear();
    CHECK(gin_preactivation(b, t.constant(h), *p.gin).value()(0, 0) == doctest::Approx(7.0));

    Rng rng(3);
    Graph g = random_graph(7, 0.4, rng);
    LayerCase c(Family::gin, g, 3);
    c.layer.gin->eps.value[0] = 0.3;
    auto report = grad_check([&](Tape<double>& tape) { return c.loss(tape); }, {&c.layer.gin->eps});
    CHECK(report.max_rel_error() < 1e-4);
    CHECK(std::abs(c.layer.gin->eps.grad[0]) > 1e-8);
}

TEST_CASE("sage examples") {
    Rng rng(0);
    auto p = make_layer<double>(Family::sage, LayerDims{1, 0, 0, 0, 1, 1}, false, rng, "s");
    p.sage->u.weight.value = TD::matrix({{1, 1}});
    GraphBatch b = star(2);
    Tape<double> t;
    CHECK(sage_preactivation(b, t.constant(column({2, 1, 3})), *p.sage).value()(0, 0) == doctest::Approx(4.0));
    GraphBatch iso = with_isolated(3, {{0, 1}});
    CHECK(sage_preactivation(iso, t.constant(column({1, 2, 5})), *p.sage).value()(2, 0) == doctest::Approx(5.0));
}

TEST_CASE("hybrid output width and additivity") {
    for (Family f : {Family::gcn_fog, Family::gat_fog, Family::gatedgcn_fog, Family::gin_fog, Family::sage_fog}) {
        Rng rng(5);
        Graph g = random_graph(7, 0.4, rng);
        LayerCase c(f, g, 5);
        const LayerDims d = small_dims(f);
        Tape<double> t;
        CHECK(c.forward(t).h.shape()[1] == d.c_p + d.c_q);

        c.layer.set_bn_mode(BnMode::identity);
        c.layer.fog->w_vu.weight.value.fill(0);
        t.clear();
        Var<double> h = t.param(c.h);
        TD out = c.forward(t).h.value();
        Var<double> q;
        switch (base_of(f)) {
            case BaseKind::gcn: q = gcn_preactivation(c.batch, h, *c.layer.gcn); break;
            case BaseKind::gat: q = gat_preactivation(c.batch, h, *c.layer.gat); break;
            case BaseKind::gin: q = gin_preactivation(c.batch, h, *c.layer.gin); break;
            case BaseKind::sage: q = sage_preactivation(c.batch, h, *c.layer.sage); break;
            case BaseKind::gatedgcn:
                q = apply(*c.layer.gated->w, gatedgcn_parts(c.batch, h, t.param(c.e), *c.layer.gated).node);
                break;
            default: break;
        }
        const bool is_elu = base_of(f) == BaseKind::gat;
        for (std::size_t v = 0; v < g.n_nodes; ++v) {
            for (std::size_t j = 0; j < d.c_p; ++j) CHECK(out(v, j) == 0.0);
            for (std::size_t j = 0; j < d.c_q; ++j) {
                const double x = q.value()(v, j);
                CHECK(out(v, d.c_p + j) == (x > 0 ? x : (is_elu ? std::expm1(x) : 0.0)));
            }
        }
    }
}

TEST_CASE("central node sensitivity") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Graph g = random_graph(8, 0.4, rng);
        LayerCase c(Family::gcn_fog, g, seed);
        // Wide enough that the neighbor path is not entirely dead.
        c.layer = make_layer<double>(Family::gcn_fog, LayerDims{4, 8, 8, 6, 4, 1}, false, rng, "wide");
        c.layer.set_bn_mode(BnMode::eval);
        Tape<double> t;
        TD q1 = gcn_preactivation(c.batch, t.constant(c.h.value), *c.layer.gcn).value();
        TD p1 = fog_forward(c.batch, t.constant(c.h.value), *c.layer.fog).value();
        // A single draw can land every unit of node 0 in the dead relu region.
        double diff = 0;
        for (int attempt = 0; attempt < 5 && diff <= 1e-6; ++attempt) {
            TD h2 = c.h.value;
            for (std::size_t j = 0; j < h2.shape()[1]; ++j) h2(0, j) += 2.0 * rng.normal();
            Tape<double> t2;
            TD q2 = gcn_preactivation(c.batch, t2.constant(h2), *c.layer.gcn).value();
            for (std::size_t j = 0; j < q1.shape()[1]; ++j) CHECK(q1(0, j) == q2(0, j));
            TD p2 = fog_forward(c.batch, t2.constant(h2), *c.layer.fog).value();
            diff = 0;
            for (std::size_t j = 0; j < p1.shape()[1]; ++j) diff += std::abs(p1(0, j) - p2(0, j));
        }
        CHECK(diff > 1e-6);
    }
}

TEST_CASE("every family passes finite-difference checks") {
    for (Family f : all_families()) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Rng rng(seed + 100);
            Graph g = random_graph(6 + rng.index(5), 0.4, rng);
            LayerCase c(f, g, seed);
            if (c.layer.gin) c.layer.gin->eps.value[0] = 0.1;
            auto report = grad_check([&](Tape<double>& t) { return c.loss(t); }, c.all_params());
            INFO(to_string(f) << " seed " << seed);
            for (const auto& e : report.entries) INFO(e.name << " " << e.max_rel_error);
            CHECK(report.max_rel_error() < 1e-4);
        }
    }
}

TEST_CASE("neighbor order and node labels do not matter") {
    for (Family f : all_families()) {
        Rng rng(42);
        Graph g = random_graph(9, 0.35, rng);
        LayerCase c(f, g, 7);
        Tape<double> t;
        LayerOutput<double> base = c.forward(t);

        Graph shuffled = shuffle_neighbors(g, rng);
        // Edge inputs follow their edges.
        std::vector<std::size_t> edge_map(g.n_edges());
        for (std::size_t v = 0; v < g.n_nodes; ++v)
            for (std::size_t e = shuffled.offsets[v]; e < shuffled.offsets[v + 1]; ++e)
                for (std::size_t k = g.offsets[v]; k < g.offsets[v + 1]; ++k)
                    if (g.neighbors[k] == shuffled.neighbors[e]) edge_map[e] = k;
        GraphBatch sb = batch_graphs(std::vector<Graph>{shuffled});
        TD e2({g.n_edges(), c.e.value.shape()[1]});
        for (std::size_t e = 0; e < g.n_edges(); ++e)
            for (std::size_t j = 0; j < e2.shape()[1]; ++j) e2(e, j) = c.e.value(edge_map[e], j);
        Var<double> ev = c.layer.edge_channels() > 0 ? t.constant(e2) : Var<double>{};
        LayerOutput<double> out = layer_forward(sb, t.constant(c.h.value), ev, c.layer);
        INFO(to_string(f));
        CHECK(max_abs_diff(out.h.value(), base.h.value()) < 1e-12);
    }
}
