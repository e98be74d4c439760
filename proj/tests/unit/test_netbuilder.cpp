#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "fog/graphstore/generators.hpp"
#include "fog/netbuilder.hpp"

using namespace fog;
using namespace fog::testing;

namespace {

ModelConfig small_config(Family f, TaskKind task = TaskKind::node_class) {
    ModelConfig cfg;
    cfg.task = task;
    cfg.family = f;
    cfg.layers = 2;
    cfg.hidden = 8;
    cfg.c_h1 = 3;
    cfg.c_h2 = 2;
    cfg.c_p = has_fog(f) && f != Family::fog ? 4 : 0;
    cfg.c_fc1 = 6;
    cfg.c_fc2 = 4;
    if (base_of(f) == BaseKind::gat) cfg.heads = {2, 1};
    cfg.node_input = {FeatureKind::categorical, 3, 0};
    cfg.n_out = task == TaskKind::graph_regress ? 1 : 2;
    return cfg;
}

DatasetSplit small_pattern(std::uint64_t seed) {
    PatternConfig pc;
    pc.sizes = {6, 2, 2};
    pc.block_sizes = {8, 8};
    pc.pattern_size = 4;
    pc.seed = seed;
    return gen_sbm_pattern(pc);
}

DatasetSplit small_molecules(std::uint64_t seed) {
    MoleculeConfig mc;
    mc.sizes = {6, 2, 2};
    mc.min_nodes = 6;
    mc.max_nodes = 12;
    mc.seed = seed;
    return gen_molecules(mc);
}

DatasetSplit small_tours(std::uint64_t seed) {
    TourConfig tc;
    tc.sizes = {4, 2, 2};
    tc.min_nodes = 8;
    tc.max_nodes = 10;
    tc.k = 3;
    tc.seed = seed;
    return gen_tours(tc);
}

}  // namespace

TEST_CASE("preset parameter counts") {
    CHECK(Model<float>(find_preset("pattern/fog").model, 0).count_params() == 99046);
    CHECK(Model<float>(find_preset("pattern/gcn").model, 0).count_params() == 100923);
    CHECK(Model<float>(find_preset("zinc/gatedgcn").model, 0).count_params() == 105735);
    CHECK(Model<float>(find_preset("zinc/gin").model, 0).count_params() == 103079);
    CHECK(Model<float>(find_preset("tsp/gin+fog").model, 0).count_params() == 94046);
    CHECK(Model<float>(find_preset("zinc/gatedgcn-e").model, 0).count_params() == 105875);

    const ModelConfig& fog4 = find_preset("pattern/fog").model;
    CHECK(fog4.layers == 4);
    CHECK(fog4.hidden == 144);
    CHECK(fog4.c_h1 == 16);
    CHECK(fog4.c_h2 == 8);
    CHECK(fog4.c_fc1 == 72);
    CHECK(fog4.c_fc2 == 36);
    CHECK_THROWS_AS(find_preset("pattern/nope"), ConfigError);
}

TEST_CASE("breakdown sums to the total and counting is side-effect free") {
    for (const Preset& p : presets()) {
        Model<float> m(p.model, 1);
        std::size_t sum = 0;
        for (const auto& c : m.breakdown()) sum += c.count;
        CHECK(sum == m.count_params());
    }
    Model<double> m(small_config(Family::gcn_fog), 0);
    const std::size_t before = m.count_params();
    DatasetSplit d = small_pattern(1);
    Tape<double> t;
    m.forward(t, batch_graphs(d.train));
    CHECK(m.count_params() == before);
}

TEST_CASE("a single FC layer counts weights plus biases") {
    Rng rng(0);
    Linear<double> fc("fc", 7, 5, true, rng);
    std::vector<Parameter<double>*> ps;
    fc.collect(ps);
    std::size_t n = 0;
    for (auto* p : ps) n += p->size();
    CHECK(n == 7 * 5 + 5);
}

TEST_CASE("every preset builds and produces task-shaped output") {
    DatasetSplit pattern = small_pattern(2);
    DatasetSplit molecules = small_molecules(2);
    DatasetSplit tours = small_tours(2);
    for (const Preset& p : presets()) {
        const DatasetSplit& d = p.dataset == "tsp" ? tours : p.dataset.rfind("zinc", 0) == 0 ? molecules : pattern;
        ModelConfig cfg = p.model;
        if (p.dataset == "cluster") cfg.node_input.vocab = 7;
        Model<float> m(cfg, 3);
        GraphBatch b = batch_graphs(std::vector<Graph>(d.train.begin(), d.train.begin() + 2));
        Tape<float> t;
        INFO(p.name);
        Var<float> out = m.forward(t, b);
        std::size_t rows = b.n_nodes();
        if (p.model.task == TaskKind::graph_regress) rows = 2;
        if (p.model.task == TaskKind::edge_class) rows = b.n_edges();
        CHECK(out.shape() == Shape{rows, p.model.n_out});
    }
}

TEST_CASE("node head with zero output layer is uniform") {
    ModelConfig cfg = small_config(Family::gcn);
    cfg.n_out = 6;
    Model<double> m(cfg, 0);
    for (Parameter<double>* p : m.parameters())
        if (p->name.rfind("head.fc3", 0) == 0) p->value.fill(0);
    DatasetSplit d = small_pattern(3);
    Tape<double> t;
    Tensor<double> logits = m.forward(t, batch_graphs(d.train)).value();
    CHECK(logits.shape() == Shape{d.train.size() == 0 ? 0 : logits.shape()[0], 6});
    for (double v : logits.data()) CHECK(v == 0.0);
}

TEST_CASE("graph readout") {
    DatasetSplit d = small_molecules(4);
    const Graph& g = d.train[0];
    GraphBatch twice = batch_graphs(std::vector<Graph>{g, g});
    ModelConfig cfg = small_config(Family::gin_fog, TaskKind::graph_regress);
    cfg.node_input = d.node_features;
    Model<double> m(cfg, 0);
    m.set_bn_mode(BnMode::eval);
    Tape<double> t;
    Tensor<double> y = m.forward(t, twice).value();
    CHECK(y.shape() == Shape{2, 1});
    CHECK(y[0] == y[1]);

    Tensor<double> c({twice.n_nodes(), 3}, 2.5);
    Tensor<double> mean = graph_readout(twice, t.constant(c), Readout::mean).value();
    Tensor<double> sum = graph_readout(twice, t.constant(c), Readout::sum).value();
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(mean(0, j) == doctest::Approx(2.5));
        CHECK(sum(1, j) == doctest::Approx(2.5 * static_cast<double>(g.n_nodes)));
    }

    Graph empty;
    empty.node_kind = g.node_kind;
    empty.edge_kind = g.edge_kind;
    GraphBatch with_empty = batch_graphs(std::vector<Graph>{g, empty});
    CHECK_THROWS_AS(graph_readout(with_empty, t.constant(Tensor<double>({g.n_nodes, 1}, 1.0)), Readout::mean),
                    GraphError);
}

TEST_CASE("edge head") {
    DatasetSplit d = small_tours(5);
    ModelConfig cfg = small_config(Family::gatedgcn_fog, TaskKind::edge_class);
    cfg.node_input = d.node_features;
    cfg.edge_input = d.edge_features;
    cfg.use_edge_features = true;
    cfg.residual = false;
    Model<double> m(cfg, 0);
    GraphBatch b = batch_graphs(d.train);
    Tape<double> t;
    CHECK(m.forward(t, b).shape() == Shape{b.n_edges(), 2});

    // Zero every layer output: the head sees zero features on every edge.
    for (auto& layer : m.layers()) {
        layer.bn_out.gamma.value.fill(0);
        layer.bn_out.beta.value.fill(0);
    }
    Tape<double> t2;
    Tensor<double> logits = m.forward(t2, b).value();
    for (std::size_t e = 1; e < b.n_edges(); ++e) {
        CHECK(logits(e, 0) == logits(0, 0));
        CHECK(logits(e, 1) == logits(0, 1));
    }
}

TEST_CASE("residual wiring") {
    DatasetSplit d = small_pattern(6);
    GraphBatch b = batch_graphs(d.train);
    ModelConfig cfg = small_config(Family::gcn_fog);
    cfg.widths = {8, 12};
    cfg.c_fc1 = 5;
    Model<double> with(cfg, 9);
    cfg.residual = false;
    Model<double> without(cfg, 9);
    with.set_bn_mode(BnMode::eval);
    without.set_bn_mode(BnMode::eval);
    Tape<double> t;
    std::vector<Var<double>> hidden;
    Var<double> h = with.encode(t, b, &hidden);
    CHECK(h.shape() == Shape{b.n_nodes(), 12});
    // Layer 2 changes width, so its output is used as is.
    Tape<double> t2;
    std::vector<Var<double>> hidden2;
    without.encode(t2, b, &hidden2);
    CHECK(max_abs_diff(hidden[1].value(), hidden2[1].value()) > 1e-6);
    Tensor<double> a = with.forward(t, b).value();
    Tensor<double> c = without.forward(t2, b).value();
    CHECK(a.shape() == c.shape());
    CHECK(max_abs_diff(a, c) > 1e-6);
}

TEST_CASE("single node without edges") {
    Graph g;
    g.n_nodes = 1;
    g.offsets = {0, 0};
    g.node_kind = FeatureKind::categorical;
    g.node_codes = {1};
    for (const char* name : {"pattern/fog", "pattern/gcn+fog", "pattern/gin"}) {
        Model<double> m(find_preset(name).model, 0);
        m.set_bn_mode(BnMode::eval);
        Tape<double> t;
        CHECK(m.forward(t, batch_graphs(std::vector<Graph>{g})).shape() == Shape{1, 2});
    }
}

TEST_CASE("config validation names the layer") {
    ModelConfig cfg = small_config(Family::gat);
    cfg.heads = {2, 3};
    try {
        validate(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
    ModelConfig hybrid = small_config(Family::sage_fog);
    hybrid.c_p = 8;
    CHECK_THROWS_AS(validate(hybrid), ConfigError);
    ModelConfig mlp = small_config(Family::gcn);
    mlp.c_fc1 = 0;
    CHECK_THROWS_AS(validate(mlp), ConfigError);
}

TEST_CASE("config json") {
    for (const Preset& p : presets()) {
        ModelConfig back = model_config_from_json(to_json(p.model));
        CHECK(to_json(back) == to_json(p.model));
    }
    nlohmann::json j = to_json(small_config(Family::gcn));
    j["hiden"] = 3;
    CHECK_THROWS_AS(model_config_from_json(j), ConfigError);
    nlohmann::json bad = to_json(small_config(Family::gcn));
    bad["family"] = "gcnn";
    CHECK_THROWS_AS(model_config_from_json(bad), ConfigError);
}

TEST_CASE("checkpoint round trip") {
    DatasetSplit d = small_pattern(7);
    GraphBatch b = batch_graphs(d.train);
    Model<double> m(small_config(Family::gatedgcn_fog), 11);
    {
        Tape<double> t;
        m.forward(t, b);  // moves the running statistics off their defaults
    }
    m.set_bn_mode(BnMode::eval);
    const auto path = std::filesystem::temp_directory_path() / "fog_ckpt_test.json";
    save_checkpoint(m, path);
    Model<double> back = load_checkpoint<double>(path);
    back.set_bn_mode(BnMode::eval);
    Tape<double> t1, t2;
    CHECK(m.forward(t1, b).value() == back.forward(t2, b).value());
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint<double>(path), CheckpointError);
    nlohmann::json j = checkpoint_to_json(m);
    j["version"] = 99;
    CHECK_THROWS_AS(model_from_checkpoint<double>(j), CheckpointError);
}

TEST_CASE("batched and one-at-a-time forward agree") {
    for (Family f : all_families()) {
        DatasetSplit d = small_pattern(8);
        Model<double> m(small_config(f), 12);
        m.set_bn_mode(BnMode::eval);
        Tape<double> t;
        Tensor<double> all = m.forward(t, batch_graphs(d.train)).value();
        std::size_t row = 0;
        double worst = 0;
        for (const Graph& g : d.train) {
            Tape<double> ti;
            Tensor<double> one = m.forward(ti, batch_graphs(std::vector<Graph>{g})).value();
            for (std::size_t r = 0; r < one.shape()[0]; ++r, ++row)
                for (std::size_t c = 0; c < one.shape()[1]; ++c) worst = std::max(worst, std::abs(one(r, c) - all(row, c)));
        }
        INFO(to_string(f));
        CHECK(worst < 1e-6);
    }
}
