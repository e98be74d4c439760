#include "fog/netbuilder/config.hpp"

#include <set>

namespace fog {

namespace {

std::string layer_prefix(std::size_t l) { return "layer " + std::to_string(l + 1) + ": "; }

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename V>
void read(const nlohmann::json& j, const char* key, V& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

std::string to_string(Readout r) { return r == Readout::mean ? "mean" : "sum"; }
std::string to_string(HeadKind h) { return h == HeadKind::mlp ? "mlp" : "per-layer"; }

std::size_t ModelConfig::width_in(std::size_t layer) const { return layer == 0 ? hidden : width_out(layer - 1); }

std::size_t ModelConfig::width_out(std::size_t layer) const {
    return layer < widths.size() ? widths[layer] : hidden;
}

std::size_t ModelConfig::heads_at(std::size_t layer) const { return layer < heads.size() ? heads[layer] : 1; }

LayerDims ModelConfig::layer_dims(std::size_t layer) const {
    LayerDims d;
    d.c_in = width_in(layer);
    d.heads = heads_at(layer);
    const std::size_t out = width_out(layer);
    if (family == Family::fog) {
        d.c_h1 = c_h1;
        d.c_h2 = c_h2;
        d.c_p = out;
    } else if (has_fog(family)) {
        d.c_h1 = c_h1;
        d.c_h2 = c_h2;
        d.c_p = c_p;
        d.c_q = out > c_p ? out - c_p : 0;
    } else {
        d.c_q = out;
    }
    return d;
}

void validate(const ModelConfig& cfg) {
    if (cfg.layers == 0) throw ConfigError("at least one layer is required");
    if (cfg.hidden == 0) throw ConfigError("hidden width must be positive");
    if (cfg.widths.size() > cfg.layers) throw ConfigError("more widths than layers");
    if (cfg.heads.size() > cfg.layers) throw ConfigError("more head counts than layers");
    if (cfg.n_out == 0) throw ConfigError("n_out must be positive");
    if (cfg.task == TaskKind::graph_regress && cfg.n_out != 1) throw ConfigError("regression needs n_out = 1");
    if (cfg.head == HeadKind::mlp && (cfg.c_fc1 == 0 || cfg.c_fc2 == 0)) {
        throw ConfigError("mlp head needs c_fc1 and c_fc2");
    }
    if (cfg.node_input.kind == FeatureKind::categorical && cfg.node_input.vocab == 0) {
        throw ConfigError("categorical node input needs a vocab size");
    }
    if (cfg.node_input.kind == FeatureKind::continuous && cfg.node_input.width == 0) {
        throw ConfigError("continuous node input needs a width");
    }
    if (cfg.use_edge_features) {
        if (base_of(cfg.family) != BaseKind::gatedgcn) throw ConfigError("only GatedGCN families read edge features");
        if (cfg.edge_input.kind == FeatureKind::none) throw ConfigError("use_edge_features needs an edge input");
    }
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const LayerDims d = cfg.layer_dims(l);
        if (has_fog(cfg.family) && cfg.family != Family::fog && cfg.width_out(l) <= cfg.c_p) {
            throw ConfigError(layer_prefix(l) + "width " + std::to_string(cfg.width_out(l)) +
                              " leaves no room for C_q after C_p = " + std::to_string(cfg.c_p));
        }
        if (base_of(cfg.family) == BaseKind::gatedgcn && d.c_in != cfg.width_out(l)) {
            throw ConfigError(layer_prefix(l) + "GatedGCN layers need equal input and output widths");
        }
        try {
            check_dims(cfg.family, d);
        } catch (const DimensionError& e) {
            throw ConfigError(layer_prefix(l) + e.what());
        }
    }
}

nlohmann::ordered_json to_json(const FeatureSpec& spec) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(spec.kind);
    if (spec.kind == FeatureKind::categorical) j["vocab"] = spec.vocab;
    if (spec.kind == FeatureKind::continuous) j["width"] = spec.width;
    return j;
}

FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"kind", "vocab", "width"}, "feature spec");
    FeatureSpec s;
    std::string kind = "none";
    read(j, "kind", kind);
    try {
        s.kind = feature_kind_from_string(kind);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    read(j, "vocab", s.vocab);
    read(j, "width", s.width);
    return s;
}

nlohmann::ordered_json to_json(const ModelConfig& cfg) {
    nlohmann::ordered_json j;
    j["task"] = to_string(cfg.task);
    j["family"] = to_string(cfg.family);
    j["layers"] = cfg.layers;
    j["hidden"] = cfg.hidden;
    if (!cfg.widths.empty()) j["widths"] = cfg.widths;
    j["c_h1"] = cfg.c_h1;
    j["c_h2"] = cfg.c_h2;
    j["c_p"] = cfg.c_p;
    j["c_fc1"] = cfg.c_fc1;
    j["c_fc2"] = cfg.c_fc2;
    j["heads"] = cfg.heads;
    j["node_input"] = to_json(cfg.node_input);
    j["edge_input"] = to_json(cfg.edge_input);
    j["use_edge_features"] = cfg.use_edge_features;
    j["n_out"] = cfg.n_out;
    j["readout"] = to_string(cfg.readout);
    j["head"] = to_string(cfg.head);
    j["residual"] = cfg.residual;
    j["layer_bias"] = cfg.layer_bias;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    reject_unknown(j,
                   {"task", "family", "layers", "hidden", "widths", "c_h1", "c_h2", "c_p", "c_fc1", "c_fc2", "heads",
                    "node_input", "edge_input", "use_edge_features", "n_out", "readout", "head", "residual",
                    "layer_bias"},
                   "model config");
    ModelConfig cfg;
    try {
        std::string s;
        if (j.contains("task")) cfg.task = task_from_string(j.at("task").get<std::string>());
        if (j.contains("family")) cfg.family = family_from_string(j.at("family").get<std::string>());
        if (j.contains("readout")) {
            s = j.at("readout").get<std::string>();
            if (s != "mean" && s != "sum") throw ConfigError("readout must be mean or sum, got '" + s + "'");
            cfg.readout = s == "mean" ? Readout::mean : Readout::sum;
        }
        if (j.contains("head")) {
            s = j.at("head").get<std::string>();
            if (s != "mlp" && s != "per-layer") throw ConfigError("head must be mlp or per-layer, got '" + s + "'");
            cfg.head = s == "mlp" ? HeadKind::mlp : HeadKind::per_layer;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    read(j, "layers", cfg.layers);
    read(j, "hidden", cfg.hidden);
    read(j, "widths", cfg.widths);
    read(j, "c_h1", cfg.c_h1);
    read(j, "c_h2", cfg.c_h2);
    read(j, "c_p", cfg.c_p);
    read(j, "c_fc1", cfg.c_fc1);
    read(j, "c_fc2", cfg.c_fc2);
    read(j, "heads", cfg.heads);
    if (j.contains("node_input")) cfg.node_input = feature_spec_from_json(j.at("node_input"));
    if (j.contains("edge_input")) cfg.edge_input = feature_spec_from_json(j.at("edge_input"));
    read(j, "use_edge_features", cfg.use_edge_features);
    read(j, "n_out", cfg.n_out);
    read(j, "residual", cfg.residual);
    read(j, "layer_bias", cfg.layer_bias);
    return cfg;
}

ModelConfig fit_to_dataset(ModelConfig cfg, const DatasetSplit& split) {
    cfg.task = split.task;
    cfg.n_out = split.task == TaskKind::graph_regress ? 1 : split.n_classes;
    // Keep a larger vocabulary from the preset so the parameter count is unchanged.
    if (split.node_features.kind == FeatureKind::categorical && cfg.node_input.kind == FeatureKind::categorical) {
        cfg.node_input.vocab = std::max(cfg.node_input.vocab, split.node_features.vocab);
    } else {
        cfg.node_input = split.node_features;
    }
    if (split.edge_features.kind == FeatureKind::categorical && cfg.edge_input.kind == FeatureKind::categorical) {
        cfg.edge_input.vocab = std::max(cfg.edge_input.vocab, split.edge_features.vocab);
    } else {
        cfg.edge_input = split.edge_features;
    }
    if (cfg.edge_input.kind == FeatureKind::none) cfg.use_edge_features = false;
    validate(cfg);
    return cfg;
}

}  // namespace fog
