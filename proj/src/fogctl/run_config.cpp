#include "fog/fogctl/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace fog::cli {
namespace {

/// Reads optional keys from one object and rejects anything it was not asked for.
class Fields {
public:
    Fields(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

    void skip(const std::string& key) { seen_.insert(key); }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }

private:
    const nlohmann::json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_sizes(Fields& f, const nlohmann::json& params, SplitSizes& s) {
    f.skip("sizes");
    if (!params.contains("sizes")) return;
    Fields sz(params.at("sizes"), "data.sizes");
    sz.read("train", s.train);
    sz.read("val", s.val);
    sz.read("test", s.test);
    sz.finish();
}

// Generators report bad values as std::invalid_argument; surface them as config errors.
template <typename Fn>
DatasetSplit checked(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("data: ") + e.what());
    }
}

}  // namespace

std::vector<std::string> generator_names() {
    return {"sbm-pattern", "sbm-cluster", "second-order", "molecules", "molecules-nofeat", "tours"};
}

namespace {

// With `run` false only the parameter schema is checked.
DatasetSplit dispatch(const std::string& generator, const nlohmann::json& params, std::uint64_t seed, bool run) {
    Fields f(params, "data");
    if (generator == "sbm-pattern") {
        PatternConfig c;
        read_sizes(f, params, c.sizes);
        f.read("nodes_per_graph", c.nodes_per_graph);
        f.read("block_sizes", c.block_sizes);
        f.read("p_intra", c.p_intra);
        f.read("p_inter", c.p_inter);
        f.read("pattern_size", c.pattern_size);
        f.read("p_pattern", c.p_pattern);
        f.read("p_pattern_link", c.p_pattern_link);
        f.read("ensure_min_degree", c.ensure_min_degree);
        f.finish();
        c.seed = seed;
        return run ? checked([&] { return gen_sbm_pattern(c); }) : DatasetSplit{};
    }
    if (generator == "sbm-cluster") {
        ClusterConfig c;
        read_sizes(f, params, c.sizes);
        f.read("n_communities", c.n_communities);
        f.read("nodes_per_graph", c.nodes_per_graph);
        f.read("p_intra", c.p_intra);
        f.read("p_inter", c.p_inter);
        f.read("ensure_min_degree", c.ensure_min_degree);
        f.finish();
        c.seed = seed;
        return run ? checked([&] { return gen_sbm_cluster(c); }) : DatasetSplit{};
    }
    if (generator == "second-order") {
        SecondOrderConfig c;
        read_sizes(f, params, c.sizes);
        f.read("nodes", c.nodes);
        f.read("p_extra", c.p_extra);
        f.finish();
        c.seed = seed;
        return run ? checked([&] { return gen_second_order_task(c); }) : DatasetSplit{};
    }
    if (generator == "molecules" || generator == "molecules-nofeat") {
        MoleculeConfig c;
        c.node_features = generator == "molecules";
        read_sizes(f, params, c.sizes);
        f.read("min_nodes", c.min_nodes);
        f.read("max_nodes", c.max_nodes);
        f.read("atom_types", c.atom_types);
        f.read("bond_types", c.bond_types);
        f.read("ring_edges", c.ring_edges);
        f.read("node_features", c.node_features);
        f.finish();
        c.seed = seed;
        return run ? checked([&] { return gen_molecules(c); }) : DatasetSplit{};
    }
    if (generator == "tours") {
        TourConfig c;
        read_sizes(f, params, c.sizes);
        f.read("min_nodes", c.min_nodes);
        f.read("max_nodes", c.max_nodes);
        f.read("k", c.k);
        f.finish();
        c.seed = seed;
        return run ? checked([&] { return gen_tours(c); }) : DatasetSplit{};
    }
    std::string known;
    for (const auto& n : generator_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown generator '" + generator + "' (known: " + known + ")");
}

}  // namespace

DatasetSplit generate(const std::string& generator, const nlohmann::json& params, std::uint64_t seed) {
    return dispatch(generator, params, seed, true);
}

void check_generator_params(const std::string& generator, const nlohmann::json& params) {
    dispatch(generator, params, 0, false);
}

DatasetSplit make_dataset(const DataSpec& spec, std::uint64_t run_seed) {
    if (!spec.path.empty()) return load_dataset(spec.path);
    return generate(spec.generator, spec.params, spec.seed.value_or(run_seed));
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    Fields top(j, "run config");
    RunConfig cfg;
    top.skip("model");
    top.skip("train");
    top.skip("data");
    top.read("seed", cfg.seed);
    std::string out = cfg.output_dir.string();
    top.read("output_dir", out);
    cfg.output_dir = out;
    top.finish();

    if (!j.contains("model")) throw ConfigError("run config needs a model (preset name or object)");
    nlohmann::json train = nlohmann::json::object();
    const nlohmann::json& m = j.at("model");
    if (m.is_string()) {
        const Preset& p = find_preset(m.get<std::string>());
        cfg.preset = p.name;
        cfg.model = p.model;
        train = to_json(train_config_from_preset(p.training));
        cfg.data.generator = p.generator;
    } else {
        cfg.model = model_config_from_json(m);
    }
    if (j.contains("train")) {
        if (!j.at("train").is_object()) throw ConfigError("train must be an object");
        if (j.at("train").contains("seed")) throw ConfigError("set the seed at the top level, not in train");
        train.update(j.at("train"));
    }
    cfg.train = train_config_from_json(train);
    validate(cfg.train);

    if (j.contains("data")) {
        const nlohmann::json& d = j.at("data");
        if (!d.is_object()) throw ConfigError("data must be an object");
        nlohmann::json params = d;
        if (params.contains("path")) {
            if (params.size() != 1) throw ConfigError("data.path cannot be combined with generator parameters");
            cfg.data.path = params.at("path").get<std::string>();
            cfg.data.generator.clear();
        } else {
            if (params.contains("generator")) cfg.data.generator = params.at("generator").get<std::string>();
            if (params.contains("seed")) cfg.data.seed = params.at("seed").get<std::uint64_t>();
            params.erase("generator");
            params.erase("seed");
            cfg.data.params = params;
        }
    }
    if (cfg.data.path.empty() && cfg.data.generator.empty())
        throw ConfigError("data needs a generator or a path");
    if (cfg.data.path.empty()) {
        check_generator_params(cfg.data.generator, cfg.data.params);
    }
    apply_seed(cfg, cfg.seed);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    if (cfg.preset.empty()) {
        j["model"] = to_json(cfg.model);
    } else {
        j["model"] = cfg.preset;
    }
    nlohmann::ordered_json train = to_json(cfg.train);
    train.erase("seed");
    j["train"] = train;
    nlohmann::ordered_json d;
    if (!cfg.data.path.empty()) {
        d["path"] = cfg.data.path.string();
    } else {
        d["generator"] = cfg.data.generator;
        if (cfg.data.seed) d["seed"] = *cfg.data.seed;
        for (const auto& [k, v] : cfg.data.params.items()) d[k] = v;
    }
    j["data"] = d;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    return j;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.train.seed = seed;
}

}  // namespace fog::cli
