#include "fog/graphstore/dataset.hpp"

#include <fstream>
#include <sstream>

namespace fog {

using ojson = nlohmann::ordered_json;

std::string to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::node_class: return "node-class";
        case TaskKind::graph_class: return "graph-class";
        case TaskKind::graph_regress: return "graph-regress";
        case TaskKind::edge_class: return "edge-class";
    }
    return "?";
}

TaskKind task_from_string(const std::string& name) {
    if (name == "node-class") return TaskKind::node_class;
    if (name == "graph-class") return TaskKind::graph_class;
    if (name == "graph-regress") return TaskKind::graph_regress;
    if (name == "edge-class") return TaskKind::edge_class;
    throw std::invalid_argument("unknown task kind '" + name + "'");
}

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::none: return "none";
        case FeatureKind::categorical: return "categorical";
        case FeatureKind::continuous: return "continuous";
    }
    return "?";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "none") return FeatureKind::none;
    if (name == "categorical") return FeatureKind::categorical;
    if (name == "continuous") return FeatureKind::continuous;
    throw std::invalid_argument("unknown feature kind '" + name + "'");
}

namespace {

const char* short_task(TaskKind kind) {
    switch (kind) {
        case TaskKind::node_class: return "node";
        case TaskKind::graph_class:
        case TaskKind::graph_regress: return "graph";
        case TaskKind::edge_class: return "edge";
    }
    return "?";
}

ojson feature_json(const FeatureSpec& f) {
    ojson j;
    j["kind"] = to_string(f.kind);
    if (f.kind == FeatureKind::categorical) j["vocab"] = f.vocab;
    if (f.kind == FeatureKind::continuous) j["width"] = f.width;
    return j;
}

FeatureSpec feature_from_json(const ojson& j) {
    FeatureSpec f;
    f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    if (f.kind == FeatureKind::categorical) f.vocab = j.at("vocab").get<std::size_t>();
    if (f.kind == FeatureKind::continuous) f.width = j.at("width").get<std::size_t>();
    return f;
}

ojson rows_json(const Tensor<double>& t) {
    ojson rows = ojson::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        ojson row = ojson::array();
        for (double v : t.row(r)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

Tensor<double> rows_from_json(const ojson& j, std::size_t n, std::size_t width) {
    if (!j.is_array() || j.size() != n) throw std::invalid_argument("expected " + std::to_string(n) + " feature rows");
    Tensor<double> t({n, width});
    for (std::size_t r = 0; r < n; ++r) {
        const ojson& row = j[r];
        if (!row.is_array() || row.size() != width) {
            throw std::invalid_argument("feature row " + std::to_string(r) + " does not have width " +
                                        std::to_string(width));
        }
        for (std::size_t c = 0; c < width; ++c) t(r, c) = row[c].get<double>();
    }
    return t;
}

ojson graph_json(const Graph& g, const DatasetSplit& d, const char* split) {
    ojson j;
    j["split"] = split;
    j["n"] = g.n_nodes;
    j["undirected"] = g.undirected;
    ojson edges = ojson::array();
    for (std::size_t v = 0; v < g.n_nodes; ++v)
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) edges.push_back(ojson::array({g.neighbors[e], v}));
    j["edges"] = std::move(edges);
    if (g.node_kind == FeatureKind::categorical) j["x"] = g.node_codes;
    if (g.node_kind == FeatureKind::continuous) j["x"] = rows_json(g.node_feat);
    if (g.edge_kind == FeatureKind::categorical) j["e"] = g.edge_codes;
    if (g.edge_kind == FeatureKind::continuous) j["e"] = rows_json(g.edge_feat);
    switch (d.task) {
        case TaskKind::node_class: j["y"] = g.node_labels; break;
        case TaskKind::graph_class: j["y"] = g.graph_label; break;
        case TaskKind::graph_regress: j["y"] = g.graph_target; break;
        case TaskKind::edge_class: j["y"] = g.edge_labels; break;
    }
    j["task"] = short_task(d.task);
    return j;
}

Graph graph_from_json(const ojson& j, const DatasetSplit& d) {
    const std::size_t n = j.at("n").get<std::size_t>();
    const bool undirected = j.at("undirected").get<bool>();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    for (const ojson& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edge entries must be [u, v] pairs");
        pairs.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
    }
    // Edges are stored as (sender, receiver) in CSR order; rebuild rows directly.
    Graph g;
    g.n_nodes = n;
    g.undirected = undirected;
    g.offsets.assign(n + 1, 0);
    std::uint32_t prev = 0;
    for (const auto& [u, v] : pairs) {
        if (v >= n || u >= n) throw std::invalid_argument("edge endpoint out of range");
        if (v < prev) throw std::invalid_argument("edges are not grouped by receiver");
        prev = v;
        g.neighbors.push_back(u);
        ++g.offsets[v + 1];
    }
    for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];

    const std::size_t E = g.neighbors.size();
    g.node_kind = d.node_features.kind;
    g.edge_kind = d.edge_features.kind;
    if (g.node_kind == FeatureKind::categorical) g.node_codes = j.at("x").get<IndexVector>();
    if (g.node_kind == FeatureKind::continuous) g.node_feat = rows_from_json(j.at("x"), n, d.node_features.width);
    if (g.edge_kind == FeatureKind::categorical) g.edge_codes = j.at("e").get<IndexVector>();
    if (g.edge_kind == FeatureKind::continuous) g.edge_feat = rows_from_json(j.at("e"), E, d.edge_features.width);
    switch (d.task) {
        case TaskKind::node_class: g.node_labels = j.at("y").get<std::vector<std::int32_t>>(); break;
        case TaskKind::graph_class: g.graph_label = j.at("y").get<std::int32_t>(); break;
        case TaskKind::graph_regress: g.graph_target = j.at("y").get<double>(); break;
        case TaskKind::edge_class: g.edge_labels = j.at("y").get<std::vector<std::int32_t>>(); break;
    }
    if (j.at("task").get<std::string>() != short_task(d.task)) throw std::invalid_argument("task does not match header");
    validate(g);
    if (g.node_kind == FeatureKind::categorical)
        for (auto c : g.node_codes)
            if (c >= d.node_features.vocab) throw std::invalid_argument("node code outside vocabulary");
    if (g.edge_kind == FeatureKind::categorical)
        for (auto c : g.edge_codes)
            if (c >= d.edge_features.vocab) throw std::invalid_argument("edge code outside vocabulary");
    return g;
}

}  // namespace

std::string dataset_to_string(const DatasetSplit& d) {
    ojson header;
    header["schema_version"] = 1;
    header["generator"] = d.generator;
    header["seed"] = d.seed;
    header["task"] = to_string(d.task);
    header["node_features"] = feature_json(d.node_features);
    header["edge_features"] = feature_json(d.edge_features);
    header["n_classes"] = d.n_classes;
    header["counts"] = {{"train", d.train.size()}, {"val", d.val.size()}, {"test", d.test.size()}};
    header["params"] = d.params;
    std::string out = header.dump() + "\n";
    for (const Graph& g : d.train) out += graph_json(g, d, "train").dump() + "\n";
    for (const Graph& g : d.val) out += graph_json(g, d, "val").dump() + "\n";
    for (const Graph& g : d.test) out += graph_json(g, d, "test").dump() + "\n";
    return out;
}

void save_dataset(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << dataset_to_string(split);
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

DatasetSplit dataset_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    DatasetSplit d;
    std::size_t want_train = 0, want_val = 0, want_test = 0;

    if (!std::getline(in, line)) throw DatasetFormatError(1, "missing header");
    ++line_no;
    try {
        const ojson h = ojson::parse(line);
        if (h.at("schema_version").get<int>() != 1) throw std::invalid_argument("unsupported schema_version");
        d.generator = h.at("generator").get<std::string>();
        d.seed = h.at("seed").get<std::uint64_t>();
        d.task = task_from_string(h.at("task").get<std::string>());
        d.node_features = feature_from_json(h.at("node_features"));
        d.edge_features = feature_from_json(h.at("edge_features"));
        d.n_classes = h.at("n_classes").get<std::size_t>();
        want_train = h.at("counts").at("train").get<std::size_t>();
        want_val = h.at("counts").at("val").get<std::size_t>();
        want_test = h.at("counts").at("test").get<std::size_t>();
        d.params = h.at("params");
    } catch (const std::exception& e) {
        throw DatasetFormatError(line_no, std::string("bad header: ") + e.what());
    }

    while (std::getline(in, line)) {
        ++line_no;
        try {
            const ojson j = ojson::parse(line);
            const std::string split = j.at("split").get<std::string>();
            Graph g = graph_from_json(j, d);
            if (split == "train") d.train.push_back(std::move(g));
            else if (split == "val") d.val.push_back(std::move(g));
            else if (split == "test") d.test.push_back(std::move(g));
            else throw std::invalid_argument("unknown split '" + split + "'");
        } catch (const std::exception& e) {
            throw DatasetFormatError(line_no, e.what());
        }
    }
    if (d.train.size() != want_train || d.val.size() != want_val || d.test.size() != want_test) {
        throw DatasetFormatError(line_no + 1, "file ends after " + std::to_string(d.size()) + " graphs, header announces " +
                                                  std::to_string(want_train + want_val + want_test));
    }
    return d;
}

DatasetSplit load_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open dataset " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return dataset_from_string(ss.str());
}

}  // namespace fog
