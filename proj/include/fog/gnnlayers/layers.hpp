#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fog/graphstore/graph.hpp"
#include "fog/tensorcore/batchnorm.hpp"
#include "fog/tensorcore/ops.hpp"
#include "fog/tensorcore/random.hpp"

namespace fog {

/// The eleven layer families: five bases, their FOG hybrids, and plain FOG.
enum class Family { fog, gcn, gat, gatedgcn, gin, sage, gcn_fog, gat_fog, gatedgcn_fog, gin_fog, sage_fog };

enum class BaseKind { none, gcn, gat, gatedgcn, gin, sage };

std::string to_string(Family f);
/// Accepts "fog", "gcn", "gcn+fog", ...
Family family_from_string(const std::string& name);
const std::vector<Family>& all_families();
BaseKind base_of(Family f);
bool has_fog(Family f);

inline constexpr double kGateEps = 1e-6;

/// Dense map y = x W^T (+ b), W stored as [out x in].
template <typename T>
struct Linear {
    Parameter<T> weight;
    std::optional<Parameter<T>> bias;

    Linear() = default;
    Linear(const std::string& name, std::size_t in, std::size_t out, bool with_bias, Rng& rng);

    std::size_t in() const { return weight.value.shape()[1]; }
    std::size_t out() const { return weight.value.shape()[0]; }
    void collect(std::vector<Parameter<T>*>& out);
};

/// x W^T without the bias.
template <typename T>
Var<T> apply_weight(Linear<T>& lin, Var<T> x);
/// Adds the bias (if any) to every row.
template <typename T>
Var<T> apply_bias(Linear<T>& lin, Var<T> x);
template <typename T>
Var<T> apply(Linear<T>& lin, Var<T> x);

template <typename T>
struct FogParams {
    Linear<T> w1;    // C_h1 x C_in, shared by the central and neighbor paths
    Linear<T> w2;    // C_h2 x C_h1
    Linear<T> w_vu;  // C_p x (C_h1 * C_h2)
    BatchNormState<T> bn1;
    BatchNormState<T> bn2;
};

template <typename T>
struct GcnParams {
    Linear<T> u;
};

template <typename T>
struct GatParams {
    Linear<T> u;               // C_q x C_in, heads stacked row-wise
    Parameter<T> attn_center;  // K x C_q/K
    Parameter<T> attn_neighbor;
    std::size_t heads = 1;
};

template <typename T>
struct GatedGcnParams {
    Linear<T> a, b, c, u, v;  // width x C_in
    BatchNormState<T> bn_edge;
    std::optional<Linear<T>> w;  // hybrid only: C_q x width
    double gate_eps = kGateEps;
};

template <typename T>
struct GinParams {
    Linear<T> v;  // width x C_in
    Linear<T> u;  // width x width
    BatchNormState<T> bn_inner;
    Parameter<T> eps;  // one learnable scalar, starts at 0
};

template <typename T>
struct SageParams {
    Linear<T> u;  // C_q x 2 C_in
};

struct LayerDims {
    std::size_t c_in = 0;
    std::size_t c_h1 = 0;
    std::size_t c_h2 = 0;
    std::size_t c_p = 0;   // FOG output width (plain FOG: the layer width)
    std::size_t c_q = 0;   // base output width (standalone base: the layer width)
    std::size_t heads = 1;
};

/// Learnable state of one layer. Output width is c_p for plain FOG, c_q for a
/// standalone base and c_p + c_q for a hybrid; bn_out normalizes that output.
template <typename T>
struct LayerParams {
    Family family = Family::fog;
    LayerDims dims;
    std::optional<FogParams<T>> fog;
    std::optional<GcnParams<T>> gcn;
    std::optional<GatParams<T>> gat;
    std::optional<GatedGcnParams<T>> gated;
    std::optional<GinParams<T>> gin;
    std::optional<SageParams<T>> sage;
    BatchNormState<T> bn_out;

    std::size_t out_channels() const;
    /// Width of the edge stream this layer consumes and emits (0 if none).
    std::size_t edge_channels() const;
    void collect(std::vector<Parameter<T>*>& out);
    void collect_bn(std::vector<BatchNormState<T>*>& out);
    void set_bn_mode(BnMode mode);
};

/// Throws DimensionError for inconsistent dims (e.g. GAT with c_q % heads != 0).
void check_dims(Family family, const LayerDims& dims);

/// Weights uniform in +-1/sqrt(fan_in), biases 0, BN gamma 1 / beta 0, GIN eps 0.
template <typename T>
LayerParams<T> make_layer(Family family, const LayerDims& dims, bool bias, Rng& rng, const std::string& name);

/// Per-edge GCN weights 1 / (sqrt|N(u)| sqrt|N(v)|).
std::vector<double> gcn_edge_norm(const GraphBatch& batch);

template <typename T>
Var<T> fog_forward(const GraphBatch& batch, Var<T> h, FogParams<T>& p);
template <typename T>
Var<T> fog_plain_forward(const GraphBatch& batch, Var<T> h, FogParams<T>& p);

template <typename T>
Var<T> gcn_preactivation(const GraphBatch& batch, Var<T> h, GcnParams<T>& p);
template <typename T>
Var<T> gat_preactivation(const GraphBatch& batch, Var<T> h, GatParams<T>& p);
template <typename T>
Var<T> gin_preactivation(const GraphBatch& batch, Var<T> h, GinParams<T>& p);
template <typename T>
Var<T> sage_preactivation(const GraphBatch& batch, Var<T> h, SageParams<T>& p);

template <typename T>
struct GatedParts {
    Var<T> node;  // U h_v + sum gate * V h_u
    Var<T> edge;  // updated edge features
    Var<T> gate;
};
template <typename T>
GatedParts<T> gatedgcn_parts(const GraphBatch& batch, Var<T> h, Var<T> e, GatedGcnParams<T>& p);

template <typename T>
struct LayerOutput {
    Var<T> h;
    Var<T> e;  // only set by GatedGCN families
};

/// Standalone base layers with their output BN and activation.
template <typename T>
Var<T> gcn_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p);
template <typename T>
Var<T> gat_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p);
template <typename T>
LayerOutput<T> gatedgcn_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p);
template <typename T>
Var<T> gin_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p);
template <typename T>
Var<T> sage_forward(const GraphBatch& batch, Var<T> h, LayerParams<T>& p);

/// phi(bn_out(concat(p, q))) for a hybrid family.
template <typename T>
LayerOutput<T> hybrid_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p);

/// Dispatch on p.family. `e` is only read by GatedGCN families.
template <typename T>
LayerOutput<T> layer_forward(const GraphBatch& batch, Var<T> h, Var<T> e, LayerParams<T>& p);

}  // namespace fog
