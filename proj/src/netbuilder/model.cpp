#include "fog/netbuilder/model.hpp"

#include <map>

namespace fog {

template <typename T>
InputEmbedding<T>::InputEmbedding(const std::string& name, const FeatureSpec& spec, std::size_t width, Rng& rng)
    : kind(spec.kind) {
    switch (spec.kind) {
        case FeatureKind::categorical:
            table = Parameter<T>(name + ".table", rng.normal_tensor<T>({spec.vocab, width}, 1.0));
            break;
        case FeatureKind::continuous: linear = Linear<T>(name, spec.width, width, true, rng); break;
        case FeatureKind::none: linear = Linear<T>(name, 1, width, true, rng); break;
    }
}

template <typename T>
Var<T> InputEmbedding<T>::apply(Tape<T>& tape, const IndexVector& codes, const Tensor<double>& feat,
                                std::size_t rows) {
    switch (kind) {
        case FeatureKind::categorical: {
            if (codes.size() != rows) {
                throw SchemaError("expected " + std::to_string(rows) + " categorical codes, got " +
                                  std::to_string(codes.size()));
            }
            return gather_rows(tape.param(*table), codes);
        }
        case FeatureKind::continuous: {
            if (feat.rank() != 2 || feat.shape()[0] != rows || feat.shape()[1] != linear->in()) {
                throw SchemaError("expected continuous input [" + std::to_string(rows) + " x " +
                                  std::to_string(linear->in()) + "], got " + shape_to_string(feat.shape()));
            }
            return fog::apply(*linear, tape.constant(feat.cast<T>()));
        }
        case FeatureKind::none: break;
    }
    return fog::apply(*linear, tape.constant(Tensor<T>({rows, 1}, T{1})));
}

template <typename T>
void InputEmbedding<T>::collect(std::vector<Parameter<T>*>& out) {
    if (table) out.push_back(&*table);
    if (linear) linear->collect(out);
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    validate(cfg_);
    Rng rng(seed);
    embed_h_ = InputEmbedding<T>("embed_h", cfg_.node_input, cfg_.hidden, rng);
    if (base_of(cfg_.family) == BaseKind::gatedgcn) {
        const FeatureSpec spec = cfg_.use_edge_features ? cfg_.edge_input : FeatureSpec{};
        embed_e_ = InputEmbedding<T>("embed_e", spec, cfg_.hidden, rng);
    }
    layers_.reserve(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        layers_.push_back(make_layer<T>(cfg_.family, cfg_.layer_dims(l), cfg_.layer_bias, rng,
                                        "layer" + std::to_string(l + 1)));
    }
    const std::size_t pair = cfg_.task == TaskKind::edge_class ? 2 : 1;
    if (cfg_.head == HeadKind::mlp) {
        const std::size_t c = cfg_.width_out(cfg_.layers - 1) * pair;
        head_.emplace_back("head.fc1", c, cfg_.c_fc1, true, rng);
        head_.emplace_back("head.fc2", cfg_.c_fc1, cfg_.c_fc2, true, rng);
        head_.emplace_back("head.fc3", cfg_.c_fc2, cfg_.n_out, true, rng);
    } else {
        // Edge tasks score the concatenated pair through a hidden layer of width C.
        for (std::size_t l = 0; l <= cfg_.layers; ++l) {
            const std::size_t c = l == 0 ? cfg_.hidden : cfg_.width_out(l - 1);
            const std::string name = "head.pred" + std::to_string(l);
            if (pair == 2) {
                head_.emplace_back(name + ".fc1", 2 * c, c, true, rng);
                head_.emplace_back(name + ".fc2", c, cfg_.n_out, true, rng);
            } else {
                head_.emplace_back(name, c, cfg_.n_out, true, rng);
            }
        }
    }
}

template <typename T>
Var<T> Model<T>::encode(Tape<T>& tape, const GraphBatch& batch, std::vector<Var<T>>* hidden) {
    const Graph& g = batch.graph;
    Var<T> h = embed_h_.apply(tape, g.node_codes, g.node_feat, g.n_nodes);
    Var<T> e;
    if (embed_e_) e = embed_e_->apply(tape, g.edge_codes, g.edge_feat, g.n_edges());
    if (hidden) hidden->push_back(h);
    for (LayerParams<T>& layer : layers_) {
        LayerOutput<T> out = layer_forward(batch, h, e, layer);
        if (cfg_.residual && out.h.shape() == h.shape()) {
            h = add(h, out.h);
        } else {
            h = out.h;
        }
        if (out.e.valid()) e = cfg_.residual && out.e.shape() == e.shape() ? add(e, out.e) : out.e;
        if (hidden) hidden->push_back(h);
    }
    return h;
}

template <typename T>
Var<T> graph_readout(const GraphBatch& batch, Var<T> h, Readout readout) {
    std::vector<T> scale(batch.n_nodes(), T{1});
    for (std::size_t gi = 0; gi < batch.graph_count; ++gi) {
        const std::size_t n = batch.node_offsets[gi + 1] - batch.node_offsets[gi];
        if (n == 0) throw GraphError("readout: graph " + std::to_string(gi) + " of the batch has no nodes");
        if (readout == Readout::mean) {
            for (std::size_t v = batch.node_offsets[gi]; v < batch.node_offsets[gi + 1]; ++v) {
                scale[v] = T{1} / static_cast<T>(n);
            }
        }
    }
    if (readout == Readout::mean) h = scale_rows(h, std::move(scale));
    return segment_sum(h, batch.node_segment, batch.graph_count);
}

template <typename T>
Var<T> Model<T>::head_input(const GraphBatch& batch, Var<T> h) {
    switch (cfg_.task) {
        case TaskKind::node_class: return h;
        case TaskKind::graph_class:
        case TaskKind::graph_regress: return graph_readout(batch, h, cfg_.readout);
        case TaskKind::edge_class: return concat(gather_rows(h, batch.edge_src), gather_rows(h, batch.edge_dst));
    }
    return h;
}

template <typename T>
Var<T> Model<T>::forward(Tape<T>& tape, const GraphBatch& batch) {
    if (cfg_.head == HeadKind::mlp) {
        Var<T> x = head_input(batch, encode(tape, batch));
        x = relu(apply(head_[0], x));
        x = relu(apply(head_[1], x));
        return apply(head_[2], x);
    }
    std::vector<Var<T>> hidden;
    encode(tape, batch, &hidden);
    Var<T> out;
    const bool edge = cfg_.task == TaskKind::edge_class;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        Var<T> x = head_input(batch, hidden[l]);
        Var<T> score = edge ? apply(head_[2 * l + 1], relu(apply(head_[2 * l], x))) : apply(head_[l], x);
        out = l == 0 ? score : add(out, score);
    }
    return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
    std::vector<Parameter<T>*> out;
    embed_h_.collect(out);
    if (embed_e_) embed_e_->collect(out);
    for (auto& l : layers_) l.collect(out);
    for (auto& lin : head_) lin.collect(out);
    return out;
}

template <typename T>
std::vector<BatchNormState<T>*> Model<T>::batchnorms() {
    std::vector<BatchNormState<T>*> out;
    for (auto& l : layers_) l.collect_bn(out);
    return out;
}

template <typename T>
void Model<T>::set_bn_mode(BnMode mode) {
    for (auto& l : layers_) l.set_bn_mode(mode);
}

template <typename T>
std::size_t Model<T>::count_params() {
    std::size_t n = 0;
    for (Parameter<T>* p : parameters()) n += p->size();
    return n;
}

template <typename T>
std::vector<ParamComponent> Model<T>::breakdown() {
    std::vector<ParamComponent> out;
    for (Parameter<T>* p : parameters()) {
        const std::string component = p->name.substr(0, p->name.find('.'));
        if (out.empty() || out.back().name != component) out.push_back({component, 0});
        out.back().count += p->size();
    }
    return out;
}

template <typename T>
ModelSnapshot<T> Model<T>::snapshot() {
    ModelSnapshot<T> s;
    for (Parameter<T>* p : parameters()) s.params.push_back(p->value);
    for (BatchNormState<T>* bn : batchnorms()) {
        s.running.push_back(bn->running_mean);
        s.running.push_back(bn->running_var);
    }
    return s;
}

template <typename T>
void Model<T>::restore(const ModelSnapshot<T>& s) {
    auto ps = parameters();
    auto bns = batchnorms();
    if (s.params.size() != ps.size() || s.running.size() != 2 * bns.size()) {
        throw DimensionError("snapshot does not match the model layout");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (s.params[i].shape() != ps[i]->value.shape()) {
            throw DimensionError("snapshot shape mismatch for " + ps[i]->name);
        }
        ps[i]->value = s.params[i];
    }
    for (std::size_t i = 0; i < bns.size(); ++i) {
        bns[i]->running_mean = s.running[2 * i];
        bns[i]->running_var = s.running[2 * i + 1];
    }
}

template <typename T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
    return Model<T>(cfg, seed);
}

template struct InputEmbedding<float>;
template struct InputEmbedding<double>;
template class Model<float>;
template class Model<double>;
template Model<float> build_model(const ModelConfig&, std::uint64_t);
template Model<double> build_model(const ModelConfig&, std::uint64_t);
template Var<float> graph_readout(const GraphBatch&, Var<float>, Readout);
template Var<double> graph_readout(const GraphBatch&, Var<double>, Readout);

}  // namespace fog
