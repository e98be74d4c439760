#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fog/gnnlayers.hpp"
#include "fog/graphstore.hpp"
#include "fog/tensorcore.hpp"

namespace fog::testing {

/// Erdos-Renyi graph where every node has at least one neighbor.
inline Graph random_graph(std::size_t n, double p, Rng& rng) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t u = 0; u < n; ++u)
        for (std::uint32_t v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) edges.emplace_back(u, v);
    std::vector<int> deg(n, 0);
    for (auto [u, v] : edges) ++deg[u], ++deg[v];
    for (std::uint32_t v = 0; v < n; ++v)
        if (deg[v] == 0) {
            auto u = static_cast<std::uint32_t>((v + 1 + rng.index(n - 1)) % n);
            edges.emplace_back(v, u);
            ++deg[v], ++deg[u];
        }
    return build_csr(n, edges, true).graph;
}

/// Small layer dims that exercise every matrix with distinct extents.
inline LayerDims small_dims(Family f) {
    LayerDims d;
    d.c_in = 4;
    d.c_h1 = 3;
    d.c_h2 = 2;
    d.c_p = 3;
    d.c_q = has_fog(f) ? 4 : 5;
    if (f == Family::fog) d.c_p = 5;
    d.heads = 2;
    if (base_of(f) == BaseKind::gat && !has_fog(f)) d.c_q = 6;
    return d;
}

inline std::size_t edge_width(Family f, const LayerDims& d) {
    return base_of(f) == BaseKind::gatedgcn ? d.c_in : 0;
}

/// Everything needed to run one layer on one graph at 64-bit.
struct LayerCase {
    Family family;
    GraphBatch batch;
    LayerParams<double> layer;
    Parameter<double> h;
    Parameter<double> e;
    Tensor<double> w_h;  // projection weights for the scalar loss
    Tensor<double> w_e;

    LayerCase(Family f, const Graph& g, std::uint64_t seed, bool bias = false) : family(f), batch(batch_graphs(std::vector<Graph>{g})) {
        Rng rng(seed);
        const LayerDims d = small_dims(f);
        layer = make_layer<double>(f, d, bias, rng, "layer");
        h = Parameter<double>("h", rng.normal_tensor<double>({g.n_nodes, d.c_in}));
        e = Parameter<double>("e", rng.normal_tensor<double>({g.n_edges(), edge_width(f, d)}));
        w_h = rng.normal_tensor<double>({g.n_nodes, layer.out_channels()});
        w_e = rng.normal_tensor<double>({g.n_edges(), layer.edge_channels()});
    }

    LayerOutput<double> forward(Tape<double>& t) {
        Var<double> ev = layer.edge_channels() > 0 ? t.param(e) : Var<double>{};
        return layer_forward(batch, t.param(h), ev, layer);
    }

    Var<double> loss(Tape<double>& t) {
        LayerOutput<double> out = forward(t);
        Var<double> l = sum(mul(out.h, t.constant(w_h)));
        if (out.e.valid()) l = add(l, sum(mul(out.e, t.constant(w_e))));
        return l;
    }

    std::vector<Parameter<double>*> all_params() {
        std::vector<Parameter<double>*> ps;
        layer.collect(ps);
        ps.push_back(&h);
        if (layer.edge_channels() > 0) ps.push_back(&e);
        return ps;
    }
};

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    if (a.shape() != b.shape()) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace fog::testing
