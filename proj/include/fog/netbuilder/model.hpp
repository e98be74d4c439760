#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fog/netbuilder/config.hpp"

namespace fog {

/// Categorical codes go through a vocab x C table, continuous inputs through
/// a Linear, and missing inputs feed a constant 1 through Linear(1, C).
template <typename T>
struct InputEmbedding {
    FeatureKind kind = FeatureKind::none;
    std::optional<Parameter<T>> table;
    std::optional<Linear<T>> linear;

    InputEmbedding() = default;
    InputEmbedding(const std::string& name, const FeatureSpec& spec, std::size_t width, Rng& rng);

    Var<T> apply(Tape<T>& tape, const IndexVector& codes, const Tensor<double>& feat, std::size_t rows);
    void collect(std::vector<Parameter<T>*>& out);
};

struct ParamComponent {
    std::string name;
    std::size_t count = 0;
};

/// Values of every parameter and BN running statistic, in registry order.
template <typename T>
struct ModelSnapshot {
    std::vector<Tensor<T>> params;
    std::vector<Tensor<T>> running;
};

template <typename T>
class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t seed);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    /// Node tasks: [N x n_out]; graph tasks: [G x n_out]; edge tasks: [E x n_out]
    /// with one row per CSR edge in batch order.
    Var<T> forward(Tape<T>& tape, const GraphBatch& batch);

    /// Final node representations before the head.
    Var<T> encode(Tape<T>& tape, const GraphBatch& batch, std::vector<Var<T>>* hidden = nullptr);

    const ModelConfig& config() const noexcept { return cfg_; }
    std::vector<LayerParams<T>>& layers() noexcept { return layers_; }

    std::vector<Parameter<T>*> parameters();
    std::vector<BatchNormState<T>*> batchnorms();
    void set_bn_mode(BnMode mode);

    std::size_t count_params();
    /// Parameter counts grouped by top-level component (embed_h, layer1, ..., head).
    std::vector<ParamComponent> breakdown();

    ModelSnapshot<T> snapshot();
    void restore(const ModelSnapshot<T>& snap);

private:
    Var<T> readout(const GraphBatch& batch, Var<T> h);
    Var<T> head_input(const GraphBatch& batch, Var<T> h);

    ModelConfig cfg_;
    InputEmbedding<T> embed_h_;
    std::optional<InputEmbedding<T>> embed_e_;
    std::vector<LayerParams<T>> layers_;
    std::vector<Linear<T>> head_;
};

/// Validates `cfg` first.
template <typename T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed);

/// Segment mean or sum of node rows per graph. Throws GraphError on a graph
/// with no nodes.
template <typename T>
Var<T> graph_readout(const GraphBatch& batch, Var<T> h, Readout readout);

}  // namespace fog
