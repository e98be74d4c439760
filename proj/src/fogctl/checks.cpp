#include "fog/fogctl/checks.hpp"

#include <utility>
#include <vector>

namespace fog::cli {

Graph random_graph(std::size_t n, double p, Rng& rng) {
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

LayerDims gradcheck_dims(Family f) {
    LayerDims d;
    d.c_in = 4;
    d.c_h1 = 3;
    d.c_h2 = 2;
    d.c_p = f == Family::fog ? 5 : 3;
    d.c_q = has_fog(f) ? 4 : 5;
    d.heads = 2;
    if (base_of(f) == BaseKind::gat && !has_fog(f)) d.c_q = 6;
    return d;
}

GradCheckReport gradcheck_layer(Family f, std::uint64_t seed, double h) {
    Rng rng(seed + 100);
    const Graph g = random_graph(6 + rng.index(5), 0.4, rng);
    const GraphBatch batch = batch_graphs(std::vector<Graph>{g});
    const LayerDims d = gradcheck_dims(f);
    LayerParams<double> layer = make_layer<double>(f, d, false, rng, "layer");
    if (layer.gin) layer.gin->eps.value[0] = 0.1;
    const std::size_t ew = base_of(f) == BaseKind::gatedgcn ? d.c_in : 0;
    Parameter<double> x("input.h", rng.normal_tensor<double>({g.n_nodes, d.c_in}));
    Parameter<double> e("input.e", rng.normal_tensor<double>({g.n_edges(), ew}));
    const Tensor<double> w_h = rng.normal_tensor<double>({g.n_nodes, layer.out_channels()});
    const Tensor<double> w_e = rng.normal_tensor<double>({g.n_edges(), layer.edge_channels()});

    std::vector<Parameter<double>*> params;
    layer.collect(params);
    params.push_back(&x);
    if (layer.edge_channels() > 0) params.push_back(&e);

    auto loss = [&](Tape<double>& t) {
        Var<double> ev = layer.edge_channels() > 0 ? t.param(e) : Var<double>{};
        LayerOutput<double> out = layer_forward(batch, t.param(x), ev, layer);
        Var<double> l = sum(mul(out.h, t.constant(w_h)));
        if (out.e.valid()) l = add(l, sum(mul(out.e, t.constant(w_e))));
        return l;
    };
    return grad_check(loss, params, h);
}

}  // namespace fog::cli
