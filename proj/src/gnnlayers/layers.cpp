#include "fog/gnnlayers/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace fog {

std::string to_string(Family f) {
    switch (f) {
        case Family::fog: return "fog";
        case Family::gcn: return "gcn";
        case Family::gat: return "gat";
        case Family::gatedgcn: return "gatedgcn";
        case Family::gin: return "gin";
        case Family::sage: return "sage";
        case Family::gcn_fog: return "gcn+fog";
        case Family::gat_fog: return "gat+fog";
        case Family::gatedgcn_fog: return "gatedgcn+fog";
        case Family::gin_fog: return "gin+fog";
        case Family::sage_fog: return "sage+fog";
    }
    return "?";
}

const std::vector<Family>& all_families() {
    static const std::vector<Family> families{Family::fog,     Family::gcn,          Family::gat,     Family::gatedgcn,
                                              Family::gin,     Family::sage,         Family::gcn_fog, Family::gat_fog,
                                              Family::gatedgcn_fog, Family::gin_fog, Family::sage_fog};
    return families;
}

Family family_from_string(const std::string& name) {
    for (Family f : all_families())
        if (to_string(f) == name) return f;
    throw std::invalid_argument("unknown layer family '" + name + "'");
}

BaseKind base_of(Family f) {
    switch (f) {
        case Family::fog: return BaseKind::none;
        case Family::gcn:
        case Family::gcn_fog: return BaseKind::gcn;
        case Family::gat:
        case Family::gat_fog: return BaseKind::gat;
        case Family::gatedgcn:
        case Family::gatedgcn_fog: return BaseKind::gatedgcn;
        case Family::gin:
        case Family::gin_fog: return BaseKind::gin;
        case Family::sage:
        case Family::sage_fog: return BaseKind::sage;
    }
    return BaseKind::none;
}

bool has_fog(Family f) {
    return f == Family::fog || f == Family::gcn_fog || f == Family::gat_fog || f == Family::gatedgcn_fog ||
           f == Family::gin_fog || f == Family::sage_fog;
}

template <typename T>
Linear<T>::Linear(const std::string& name, std::size_t in, std::size_t out, bool with_bias, Rng& rng) {
    const double bound = in == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(in));
    weight = Parameter<T>(name + ".weight", rng.uniform_tensor<T>({out, in}, -bound, bound));
    if (with_bias) bias = Parameter<T>(name + ".bias", Tensor<T>({out}));
}

template <typename T>
void Linear<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight);
    if (bias) out.push_back(&*bias);
}

template <typename T>
Var<T> apply_weight(Linear<T>& lin, Var<T> x) {
    return matmul_transposed(x, x.tape()->param(lin.weight));
}

template <typename T>
Var<T> apply_bias(Linear<T>& lin, Var<T> x) {
    return lin.bias ? add_bias(x, x.tape()->param(*lin.bias)) : x;
}

template <typename T>
Var<T> apply(Linear<T>& lin, Var<T> x) {
    return apply_bias(lin, apply_weight(lin, x));
}

namespace {

template <typename T>
void collect_linear(std::optional<Linear<T>>& l, std::vector<Parameter<T>*>& out) {
    if (l) l->collect(out);
}

template <typename T>
void collect_bn_params(BatchNormState<T>& bn, std::vector<Parameter<T>*>& out) {
    out.push_back(&bn.gamma);
    out.push_back(&bn.beta);
}

/// Activation applied after bn_out.
Activation output_activation(Family f) {
    return base_of(f) == BaseKind::gat ? Activation::elu() : Activation::relu();
}

}  // namespace

template <typename T>
std::size_t LayerParams<T>::out_channels() const {
    if (family == Family::fog) return dims.c_p;
    if (!has_fog(family)) return dims.c_q;
    return dims.c_p + dims.c_q;
}

template <typename T>
std::size_t LayerParams<T>::edge_channels() const {
    if (!gated) return 0;
    return family == Family::gatedgcn ? dims.c_q : dims.c_in;
}

template <typename T>
void LayerParams<T>::collect(std::vector<Parameter<T>*>& out) {
    if (fog) {
        fog->w1.collect(out);
        collect_bn_params(fog->bn1, out);
        fog->w2.collect(out);
        collect_bn_params(fog->bn2, out);
        fog->w_vu.collect(out);
    }
    if (gcn) gcn->u.collect(out);
    if (gat) {
        gat->u.collect(out);
        out.push_back(&gat->attn_center);
        out.push_back(&gat->attn_neighbor);
    }
    if (gated) {
        gated->a.collect(out);
        gated->b.collect(out);
        gated->c.collect(out);
        collect_bn_params(gated->bn_edge, out);
        gated->u.collect(out);
        gated->v.collect(out);
        collect_linear(gated->w, out);
    }
    if (gin) {
        out.push_back(&gin->eps);
        gin->v.collect(out);
        collect_bn_params(gin->bn_inner, out);
        gin->u.collect(out);
    }
    if (sage) sage->u.collect(out);
    collect_bn_params(bn_out, out);
}

template <typename T>
void LayerParams<T>::collect_bn(std::vector<BatchNormState<T>*>& out) {
    if (fog) {
        out.push_back(&fog->bn1);
        out.push_back(&fog->bn2);
    }
    if (gated) out.push_back(&gated->bn_edge);
    if (gin) out.push_back(&gin->bn_inner);
    out.push_back(&bn_out);
}

template <typename T>
void LayerParams<T>::set_bn_mode(BnMode mode) {
    std::vector<BatchNormState<T>*> states;
    collect_bn(states);
    for (auto* s : states) s->mode = mode;
}

void check_dims(Family family, const LayerDims& d) {
    auto fail = [&](const std::string& what) {
        throw DimensionError(to_string(family) + " layer: " + what);
    };
    if (d.c_in == 0) fail("c_in must be positive");
    if (has_fog(family) && (d.c_h1 == 0 || d.c_h2 == 0 || d.c_p == 0)) fail("c_h1, c_h2 and c_p must be positive");
    if (family != Family::fog && d.c_q == 0) fail("c_q must be positive");
    if (base_of(family) == BaseKind::gat) {
        if (d.heads == 0) fail("heads must be positive");
        if (d.c_q % d.heads != 0) {
            fail("c_q = " + std::to_string(d.c_q) + " is not divisible by heads = " + std::to_string(d.heads));
        }
    }
}

template <typename T>
LayerParams<T> make_layer(Family family, const LayerDims& d, bool bias, Rng& rng, const std::string& name) {
    check_dims(family, d);
    LayerParams<T> p;
    p.family = family;
    p.dims = d;
    if (has_fog(family)) {
        FogParams<T> f;
        f.w1 = Linear<T>(name + ".fog.w1", d.c_in, d.c_h1, bias, rng);
        f.bn1 = BatchNormState<T>(name + ".fog.bn1", d.c_h1);
        f.w2 = Linear<T>(name + ".fog.w2", d.c_h1, d.c_h2, bias, rng);
        f.bn2 = BatchNormState<T>(name + ".fog.bn2", d.c_h2);
        f.w_vu = Linear<T>(name + ".fog.w_vu", d.c_h1 * d.c_h2, d.c_p, bias, rng);
        p.fog = std::move(f);
    }
    switch (base_of(family)) {
        case BaseKind::none: break;
        case BaseKind::gcn: p.gcn = GcnParams<T>{Linear<T>(name + ".gcn.u", d.c_in, d.c_q, bias, rng)}; break;
        case BaseKind::gat: {
            GatParams<T> g;
            g.heads = d.heads;
            g.u = Linear<T>(name + ".gat.u", d.c_in, d.c_q, false, rng);
            const std::size_t per_head = d.c_q / d.heads;
            const double bound = 1.0 / std::sqrt(static_cast<double>(2 * per_head));
            g.attn_center = Parameter<T>(name + ".gat.attn_center", rng.uniform_tensor<T>({d.heads, per_head}, -bound, bound));
            g.attn_neighbor = Parameter<T>(name + ".gat.attn_neighbor", rng.uniform_tensor<T>({d.heads, per_head}, -bound, bound));
            p.gat = std::move(g);
            break;
        }
        case BaseKind::gatedgcn: {
            GatedGcnParams<T> g;
            const std::size_t width = family == Family::gatedgcn ? d.c_q : d.c_in;
            g.a = Linear<T>(name + ".gated.a", d.c_in, width, bias, rng);
            g.b = Linear<T>(name + ".gated.b", d.c_in, width, bias, rng);
            g.c = Linear<T>(name + ".gated.c", d.c_in, width, bias, rng);
            g.bn_edge = BatchNormState<T>(name + ".gated.bn_edge", width);
            g.u = Linear<T>(name + ".gated.u", d.c_in, width, bias, rng);
            g.v = Linear<T>(name + ".gated.v", d.c_in, width, bias, rng);
            if (family == Family::gatedgcn_fog) g.w = Linear<T>(name + ".gated.w", width, d.c_q, bias, rng);
            p.gated = std::move(g);
            break;
        }
        case BaseKind::gin: {
            GinParams<T> g;
            g.eps = Parameter<T>(name + ".gin.eps", Tensor<T>({1}));
            g.v = Linear<T>(name + ".gin.v", d.c_in, d.c_q, bias, rng);
            g.bn_inner = BatchNormState<T>(name + ".gin.bn_inner", d.c_q);
            g.u = Linear<T>(name + ".gin.u", d.c_q, d.c_q, bias, rng);
            p.gin = std::move(g);
            break;
        }
        case BaseKind::sage: p.sage = SageParams<T>{Linear<T>(name + ".sage.u", 2 * d.c_in, d.c_q, bias, rng)}; break;
    }
    p.bn_out = BatchNormState<T>(name + ".bn_out", p.out_channels());
    return p;
}

std::vector<double> gcn_edge_norm(const GraphBatch& batch) {
    const Graph& g = batch.graph;
    std::vector<double> norm(g.n_edges());
    for (std::size_t e = 0; e < norm.size(); ++e) {
        const double du = static_cast<double>(g.degree(batch.edge_src[e]));
        const double dv = static_cast<double>(g.degree(batch.edge_dst[e]));
        norm[e] = 1.0 / (std::sqrt(du) * std::sqrt(dv));
    }
    return norm;
}

namespace {

template <typename T>
void check_nodes(const char* layer, const GraphBatch& batch, Var<T> h, std::size_t c_in) {
    const Shape& s = h.shape();
    if (s.size() != 2 || s[0] != batch.n_nodes() || s[1] != c_in) {
        throw DimensionError(std::string(layer) + ": node features " + shape_to_string(s) + " but expected [" +
                             std::to_string(batch.n_nodes()) + " x " + std::to_string(c_in) + "]");
    }
}

}  // namespace

template <typename T>
Var<T> fog_forward(const GraphBatch& batch, Var<T> h, FogParams<T>& p) {
    check_nodes("fog", batch, h, p.w1.in());
    Var<T> center = batchnorm(relu(apply(p.w1, h)), p.bn1);
    Var<T> neighbor = batchnorm(relu(apply(p.w2, center)), p.bn2);
    // sum_u (c_v kron n_u) = c_v kron (sum_u n_u)
    Var<T> summed = segment_sum(gather_rows(neighbor, batch.edge_src), batch.edge_dst, batch.n_nodes());
    return apply(p.w_vu, rowwise_kron(center, summed));
}

template <typename T>
Var<T> fog_plain_forward(const GraphBatch& batch, Var<T> h, FogParams<T>& p) {
    return relu(fog_forward(batch, h, p));
}

template <typename T>
Var<T> gcn_preactivation(const GraphBatch& batch, Var<T> h, GcnParams<T>& p) {
    check_nodes("gcn", batch, h, p.u.in());
    std::vector<double> norm = gcn_edge_norm(batch);
    Var<T> uh = apply_weight(p.u, h);
    Var<T> msg = scale_rows(gather_rows(uh, batch.edge_src), std::vector<T>(norm.begin(), norm.end()));
    return apply_bias(p.u, segment_sum(msg, batch.edge_dst, batch.n_nodes()));
}

template <typename T>
Var<T> gat_preactivation(const GraphBatch& batch, Var<T> h, GatParams<T>& p) {
    check_nodes("gat", batch, h, p.u.in());
    Tape<T>& tape = *h.tape();
    const std::size_t n = batch.n_nodes();
    Var<T> uh = apply(p.u, h);
    Var<T> s_center = head_dot(uh, tape.param(p.attn_center));
    Var<T> s_neighbor = head_dot(uh, tape.param(p.attn_neighbor));
    Var<T> logits = leaky_relu(add(gather_rows(s_center, batch.edge_dst), gather_rows(s_neighbor, batch.edge_src)));
    // Only nodes that receive messages consume a softmax; an isolated node is an error.
    Var<T> alpha = segment_softmax(logits, batch.edge_dst, n, true);
    return segment_sum(mul_heads(alpha, gather_rows(uh, batch.edge_src)), batch.edge_dst, n);
}

template <typename T>
Var<T> gin_preactivation(const GraphBatch& batch, Var<T> h, GinParams<T>& p) {
    check_nodes("gin", batch, h, p.v.in());
    Tape<T>& tape = *h.tape();
    Var<T> summed = segment_sum(gather_rows(h, batch.edge_src), batch.edge_dst, batch.n_nodes());
    // (1 + eps) h_v + sum_u h_u
    Var<T> hat = add(add(h, scale_by(h, tape.param(p.eps))), summed);
    return apply(p.u, relu(batchnorm(apply(p.v, hat), p.bn_inner)));
}

template <typename T>
Var<T> sage_preactivation(const GraphBatch& batch, Var<T> h, SageParams<T>& p) {
    check_nodes("sage", batch, h, p.u.in() / 2);
    const Graph& g = batch.graph;
    std::vector<T> inv_deg(g.n_nodes);
    for (std::size_t v = 0; v < g.n_nodes; ++v) inv_deg[v] = g.degree(v) == 0 ? T{0} : T{1} / static_cast<T>(g.degree(v));
    Var<T> mean = scale_rows(segment_sum(gather_rows(h, batch.edge_src), batch.edge_dst, g.n_nodes), std::move(inv_deg));
    return apply(p.u, concat(h, mean));
}

template <typename T>
GatedParts<T> gatedgcn_parts(const GraphBatch& batch, Var<T> h, Var<T> e, GatedGcnParams<T>& p) {
    check_nodes("gatedgcn", batch, h, p.a.in());
    const Shape& es = e.shape();
    if (es.size() != 2 || es[0] != batch.n_edges() || es[1] != p.c.in()) {
        throw DimensionError("gatedgcn: edge features " + shape_to_string(es) + " but expected [" +
                             std::to_string(batch.n_edges()) + " x " + std::to_string(p.c.in()) + "]");
    }
    const std::size_t n = batch.n_nodes();
    Var<T> ah = apply(p.a, h);
    Var<T> bh = apply(p.b, h);
    Var<T> pre = add(add(gather_rows(ah, batch.edge_dst), gather_rows(bh, batch.edge_src)), apply(p.c, e));
    Var<T> edge = relu(batchnorm(pre, p.bn_edge));
    Var<T> sig = sigmoid(edge);
    Var<T> denom = add_scalar(gather_rows(segment_sum(sig, batch.edge_dst, n), batch.edge_dst), p.gate_eps);
    Var<T> gate = div(sig, denom);
    Var<T> vh = apply(p.v, h);
    Var<T> node = add(apply(p.u, h), segment_sum(mul(gate, gather_rows(vh, batch.edge_src)), batch.edge_dst, n));
    return {node, edge, gate};
}

template <typename T>
Var<T> gcn_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p) {
    return relu(batchnorm(gcn_preactivation(batch, h, *p.gcn), p.bn_out));
}

template <typename T>
Var<T> gat_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p) {
    return elu(batchnorm(gat_preactivation(batch, h, *p.gat), p.bn_out));
}

template <typename T>
LayerOutput<T> gatedgcn_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p) {
    GatedParts<T> parts = gatedgcn_parts(batch, h, e, *p.gated);
    return {relu(batchnorm(parts.node, p.bn_out)), parts.edge};
}

template <typename T>
Var<T> gin_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p) {
    return relu(batchnorm(gin_preactivation(batch, h, *p.gin), p.bn_out));
}

template <typename T>
Var<T> sage_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p) {
    return relu(batchnorm(sage_preactivation(batch, h, *p.sage), p.bn_out));
}

template <typename T>
LayerOutput<T> hybrid_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p) {
    if (!has_fog(p.family) || p.family == Family::fog) {
        throw std::invalid_argument("hybrid_forward: " + to_string(p.family) + " is not a hybrid family");
    }
    Var<T> fog_out = fog_forward(batch, h, *p.fog);
    Var<T> q;
    Var<T> edge_out;
    switch (base_of(p.family)) {
        case BaseKind::gcn: q = gcn_preactivation(batch, h, *p.gcn); break;
        case BaseKind::gat: q = gat_preactivation(batch, h, *p.gat); break;
        case BaseKind::gin: q = gin_preactivation(batch, h, *p.gin); break;
        case BaseKind::sage: q = sage_preactivation(batch, h, *p.sage); break;
        case BaseKind::gatedgcn: {
            GatedParts<T> parts = gatedgcn_parts(batch, h, e, *p.gated);
            q = apply(*p.gated->w, parts.node);
            edge_out = parts.edge;
            break;
        }
        case BaseKind::none: break;
    }
    const std::size_t width = fog_out.shape()[1] + q.shape()[1];
    if (width != p.out_channels()) {
        throw DimensionError("hybrid_forward: C_p + C_q = " + std::to_string(width) + " but the layer declares " +
                             std::to_string(p.out_channels()));
    }
    Var<T> out = activation(batchnorm(concat(fog_out, q), p.bn_out), output_activation(p.family));
    return {out, edge_out};
}

template <typename T>
LayerOutput<T> layer_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p) {
    switch (p.family) {
        case Family::fog: return {relu(batchnorm(fog_forward(batch, h, *p.fog), p.bn_out)), {}};
        case Family::gcn: return {gcn_forward(batch, h, p), {}};
        case Family::gat: return {gat_forward(batch, h, p), {}};
        case Family::gatedgcn: return gatedgcn_forward(batch, h, e, p);
        case Family::gin: return {gin_forward(batch, h, p), {}};
        case Family::sage: return {sage_forward(batch, h, p), {}};
        default: return hybrid_forward(batch, h, e, p);
    }
}

#define FOG_INSTANTIATE_LAYERS(T)                                                                          \
    template struct Linear<T>;                                                                             \
    template struct LayerParams<T>;                                                                        \
    template Var<T> apply_weight(Linear<T>&, Var<T>);                                                      \
    template Var<T> apply_bias(Linear<T>&, Var<T>);                                                        \
    template Var<T> apply(Linear<T>&, Var<T>);                                                             \
    template LayerParams<T> make_layer(Family, const LayerDims&, bool, Rng&, const std::string&);          \
    template Var<T> fog_forward(const GraphBatch&, Var<T>, FogParams<T>&);                                 \
    template Var<T> fog_plain_forward(const GraphBatch&, Var<T>, FogParams<T>&);                           \
    template Var<T> gcn_preactivation(const GraphBatch&, Var<T>, GcnParams<T>&);                           \
    template Var<T> gat_preactivation(const GraphBatch&, Var<T>, GatParams<T>&);                           \
    template Var<T> gin_preactivation(const GraphBatch&, Var<T>, GinParams<T>&);                           \
    template Var<T> sage_preactivation(const GraphBatch&, Var<T>, SageParams<T>&);                         \
    template GatedParts<T> gatedgcn_parts(const GraphBatch&, Var<T>, Var<T>, GatedGcnParams<T>&);          \
    template Var<T> gcn_forward(const GraphBatch&, Var<T>, LayerParams<T>&);                               \
    template Var<T> gat_forward(const GraphBatch&, Var<T>, LayerParams<T>&);                               \
    template LayerOutput<T> gatedgcn_forward(const GraphBatch&, Var<T>, Var<T>, LayerParams<T>&);          \
    template Var<T> gin_forward(const GraphBatch&, Var<T>, LayerParams<T>&);                               \
    template Var<T> sage_forward(const GraphBatch&, Var<T>, LayerParams<T>&);                              \
    template LayerOutput<T> hybrid_forward(const GraphBatch&, Var<T>, Var<T>, LayerParams<T>&);            \
    template LayerOutput<T> layer_forward(const GraphBatch&, Var<T>, Var<T>, LayerParams<T>&);

FOG_INSTANTIATE_LAYERS(float)
FOG_INSTANTIATE_LAYERS(double)

}  // namespace fog
