#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fog/gnnlayers/layers.hpp"
#include "fog/graphstore/dataset.hpp"
#include "json.hpp"

namespace fog {

/// A model or run configuration is inconsistent. Layer problems name the
/// 1-based layer index.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Readout { mean, sum };

/// mlp: FC(C, C_FC1) relu FC(C_FC1, C_FC2) relu FC(C_FC2, out).
/// per_layer: one prediction per hidden representation (the embedding and
/// every layer output), summed. Linear for node and graph tasks; for edge
/// tasks FC(2C, C) relu FC(C, out) on the concatenated pair. Used by the GIN
/// presets.
enum class HeadKind { mlp, per_layer };

std::string to_string(Readout r);
std::string to_string(HeadKind h);

struct ModelConfig {
    TaskKind task = TaskKind::node_class;
    Family family = Family::fog;
    std::size_t layers = 4;
    std::size_t hidden = 16;          // width of the embedding and of every layer
    std::vector<std::size_t> widths;  // optional per-layer output widths; empty means `hidden`
    std::size_t c_h1 = 0;
    std::size_t c_h2 = 0;
    std::size_t c_p = 0;              // hybrids: C_q = width - C_p
    std::size_t c_fc1 = 0;
    std::size_t c_fc2 = 0;
    std::vector<std::size_t> heads;   // GAT heads per layer; missing entries are 1
    FeatureSpec node_input;
    FeatureSpec edge_input;
    bool use_edge_features = false;   // GatedGCN only; otherwise a constant 1 goes through embed_e
    std::size_t n_out = 2;            // classes, or 1 for regression
    Readout readout = Readout::mean;
    HeadKind head = HeadKind::mlp;
    bool residual = true;
    bool layer_bias = false;          // biases on the layer matrices (W1, W2, W_vu, U, V, A, B, C)

    std::size_t width_in(std::size_t layer) const;
    std::size_t width_out(std::size_t layer) const;
    std::size_t heads_at(std::size_t layer) const;
    LayerDims layer_dims(std::size_t layer) const;
};

/// Throws ConfigError. Layer-level problems are reported as "layer i: ...".
void validate(const ModelConfig& cfg);

nlohmann::ordered_json to_json(const ModelConfig& cfg);
/// Unknown keys are rejected. Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Copy of `cfg` whose inputs, output count and task follow the dataset.
ModelConfig fit_to_dataset(ModelConfig cfg, const DatasetSplit& split);

nlohmann::ordered_json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

}  // namespace fog
