#include "fog/netbuilder/presets.hpp"

#include <map>

namespace fog {

namespace {

struct Row {
    const char* family;
    std::size_t target;
    std::size_t hidden, c_h1, c_h2, c_p, c_fc1, c_fc2;
    double lr, wd;
};

struct DatasetInfo {
    const char* name;
    const char* generator;
    TaskKind task;
    FeatureSpec node_input;
    FeatureSpec edge_input;
    std::size_t n_out;
    std::size_t patience;
    std::size_t batch_size;
};

// target, hidden, C_h1, C_h2, C_p, C_FC1, C_FC2, lr, wd
const std::vector<Row> kPattern = {
    {"fog", 99046, 144, 16, 8, 0, 72, 36, 5e-3, 1e-3},
    {"gcn", 100923, 146, 0, 0, 0, 73, 36, 1e-3, 0},
    {"gcn+fog", 101026, 160, 12, 6, 80, 80, 40, 5e-3, 1e-3},
    {"gat", 109936, 152, 0, 0, 0, 76, 38, 1e-3, 0},
    {"gat+fog", 101346, 160, 12, 6, 80, 80, 40, 5e-3, 1e-3},
    {"gatedgcn", 104003, 70, 0, 0, 0, 35, 17, 1e-3, 0},
    {"gatedgcn+fog", 102050, 64, 8, 4, 32, 32, 16, 1e-2, 1e-3},
    {"gin", 100884, 110, 0, 0, 0, 0, 0, 1e-3, 0},
    {"gin+fog", 99234, 148, 12, 6, 74, 0, 0, 5e-3, 1e-3},
    {"sage", 101739, 89, 0, 0, 0, 44, 22, 1e-3, 0},
    {"sage+fog", 95679, 98, 9, 4, 49, 49, 24, 5e-3, 1e-3},
};

const std::vector<Row> kCluster = {
    {"fog", 99770, 144, 16, 8, 0, 72, 36, 5e-3, 0},
    {"gcn", 101655, 146, 0, 0, 0, 73, 36, 1e-3, 1e-5},
    {"gcn+fog", 101830, 160, 12, 6, 80, 80, 40, 1e-2, 0},
    {"gat", 110700, 152, 0, 0, 0, 76, 38, 1e-3, 0},
    {"gat+fog", 102150, 160, 12, 6, 80, 80, 40, 1e-2, 0},
    {"gatedgcn", 104355, 70, 0, 0, 0, 35, 17, 1e-3, 0},
    {"gatedgcn+fog", 102374, 64, 8, 4, 32, 32, 16, 5e-3, 1e-6},
    {"gin", 100884, 110, 0, 0, 0, 0, 0, 1e-3, 0},
    {"gin+fog", 102806, 148, 12, 6, 74, 0, 0, 1e-2, 1e-6},
    {"sage", 102187, 89, 0, 0, 0, 44, 22, 1e-3, 0},
    {"sage+fog", 96171, 98, 9, 4, 49, 49, 24, 1e-2, 1e-6},
};

const std::vector<Row> kZinc = {
    {"fog", 101668, 143, 16, 8, 0, 71, 35, 1e-3, 0},
    {"gcn", 103077, 145, 0, 0, 0, 72, 36, 1e-3, 0},
    {"gcn+fog", 102809, 158, 12, 6, 79, 79, 39, 1e-2, 0},
    {"gat", 102385, 144, 0, 0, 0, 72, 36, 1e-3, 0},
    {"gat+fog", 105305, 160, 12, 6, 80, 80, 40, 1e-2, 1e-6},
    {"gatedgcn", 105735, 70, 0, 0, 0, 35, 17, 1e-3, 0},
    {"gatedgcn+fog", 103633, 64, 8, 4, 32, 32, 16, 1e-2, 1e-6},
    {"gatedgcn-e", 105875, 70, 0, 0, 0, 35, 17, 1e-3, 0},
    {"gatedgcn-e+fog", 103761, 64, 8, 4, 32, 32, 16, 5e-3, 0},
    {"gin", 103079, 110, 0, 0, 0, 0, 0, 1e-3, 0},
    {"gin+fog", 102189, 148, 12, 6, 74, 0, 0, 5e-3, 1e-3},
    {"sage", 94977, 90, 0, 0, 0, 45, 22, 1e-3, 0},
    {"sage+fog", 94477, 96, 9, 4, 48, 48, 24, 1e-2, 1e-6},
};

const std::vector<Row> kZincNoFeat = {
    {"fog", 101668, 143, 16, 8, 0, 71, 35, 5e-4, 1e-3},
    {"gatedgcn", 105735, 70, 0, 0, 0, 35, 17, 1e-3, 0},
    {"gatedgcn+fog", 103633, 64, 8, 4, 32, 32, 16, 1e-3, 1e-6},
    {"gin", 103079, 110, 0, 0, 0, 0, 0, 1e-3, 0},
    {"gin+fog", 102189, 148, 12, 6, 74, 0, 0, 1e-2, 0},
};

const std::vector<Row> kTsp = {
    {"fog", 96386, 120, 15, 7, 0, 120, 60, 1e-2, 1e-6},
    {"gcn", 95702, 120, 0, 0, 0, 120, 60, 1e-3, 0},
    {"gcn+fog", 93465, 126, 11, 5, 63, 126, 63, 1e-2, 1e-6},
    {"gat", 96182, 120, 0, 0, 0, 120, 60, 1e-3, 0},
    {"gat+fog", 96350, 128, 11, 5, 64, 128, 64, 1e-2, 1e-6},
    {"gatedgcn", 97858, 65, 0, 0, 0, 65, 32, 1e-3, 0},
    {"gatedgcn+fog", 95456, 60, 7, 3, 30, 60, 30, 1e-2, 1e-6},
    {"gatedgcn-e", 97858, 65, 0, 0, 0, 65, 32, 1e-3, 0},
    {"gatedgcn-e+fog", 95456, 60, 7, 3, 30, 60, 30, 1e-2, 1e-6},
    {"gin", 99002, 73, 0, 0, 0, 0, 0, 1e-3, 0},
    {"gin+fog", 94046, 80, 8, 4, 40, 0, 0, 1e-2, 1e-6},
    {"sage", 99263, 82, 0, 0, 0, 82, 41, 1e-3, 0},
    {"sage+fog", 97007, 90, 9, 4, 45, 90, 45, 5e-3, 1e-6},
};

FeatureSpec categorical(std::size_t vocab) { return {FeatureKind::categorical, vocab, 0}; }
FeatureSpec continuous(std::size_t width) { return {FeatureKind::continuous, 0, width}; }

Preset make_preset(const DatasetInfo& info, const Row& row) {
    Preset p;
    std::string fam = row.family;
    const bool edge_variant = fam.find("-e") != std::string::npos;
    if (edge_variant) fam.erase(fam.find("-e"), 2);
    p.name = std::string(info.name) + "/" + row.family;
    p.dataset = info.name;
    p.generator = info.generator;
    p.target_params = row.target;

    ModelConfig& m = p.model;
    m.task = info.task;
    m.family = family_from_string(fam);
    m.layers = 4;
    m.hidden = row.hidden;
    m.c_h1 = row.c_h1;
    m.c_h2 = row.c_h2;
    m.c_p = row.c_p;
    m.c_fc1 = row.c_fc1;
    m.c_fc2 = row.c_fc2;
    if (base_of(m.family) == BaseKind::gat) m.heads = {8, 8, 8, 1};
    m.node_input = info.node_input;
    m.edge_input = info.edge_input;
    m.use_edge_features = edge_variant;
    m.n_out = info.n_out;
    const bool gin = base_of(m.family) == BaseKind::gin;
    m.readout = gin ? Readout::sum : Readout::mean;
    m.head = gin ? HeadKind::per_layer : HeadKind::mlp;
    m.residual = true;
    m.layer_bias = true;

    p.training.init_lr = row.lr;
    p.training.weight_decay = row.wd;
    p.training.patience = info.patience;
    p.training.batch_size = info.batch_size;
    return p;
}

std::vector<Preset> build_presets() {
    const std::vector<std::pair<DatasetInfo, const std::vector<Row>*>> datasets = {
        {{"pattern", "sbm-pattern", TaskKind::node_class, categorical(3), {}, 2, 5, 128}, &kPattern},
        {{"cluster", "sbm-cluster", TaskKind::node_class, categorical(7), {}, 6, 5, 128}, &kCluster},
        {{"zinc", "molecules", TaskKind::graph_regress, categorical(28), categorical(4), 1, 10, 128}, &kZinc},
        {{"zinc-nofeat", "molecules-nofeat", TaskKind::graph_regress, categorical(28), categorical(4), 1, 10, 128},
         &kZincNoFeat},
        {{"tsp", "tours", TaskKind::edge_class, continuous(2), continuous(1), 2, 10, 32}, &kTsp},
    };
    std::vector<Preset> out;
    for (const auto& [info, rows] : datasets) {
        for (const Row& r : *rows) out.push_back(make_preset(info, r));
    }
    return out;
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = build_presets();
    return all;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const Preset& p : presets()) names.push_back(p.name);
    return names;
}

const Preset& find_preset(const std::string& name) {
    for (const Preset& p : presets()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const Preset& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + name + "'; known presets: " + known);
}

}  // namespace fog
