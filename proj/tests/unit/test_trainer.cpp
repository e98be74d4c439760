#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "fog/graphstore/generators.hpp"
#include "fog/netbuilder.hpp"
#include "fog/tensorcore/gradcheck.hpp"
#include "fog/trainer.hpp"

using namespace fog;
using namespace fog::testing;
using TD = Tensor<double>;

namespace {

ModelConfig tiny(Family f, const DatasetSplit& d) {
    ModelConfig cfg;
    cfg.task = d.task;
    cfg.family = f;
    cfg.layers = 2;
    cfg.hidden = 12;
    cfg.c_h1 = 4;
    cfg.c_h2 = 3;
    cfg.c_p = has_fog(f) && f != Family::fog ? 6 : 0;
    cfg.c_fc1 = 8;
    cfg.c_fc2 = 6;
    return fit_to_dataset(cfg, d);
}

DatasetSplit pattern(std::size_t train, std::uint64_t seed) {
    PatternConfig pc;
    pc.sizes = {train, 4, 4};
    pc.block_sizes = {10, 10};
    pc.pattern_size = 5;
    pc.seed = seed;
    return gen_sbm_pattern(pc);
}

}  // namespace

TEST_CASE("cross entropy examples") {
    Tape<double> t;
    Var<double> z = t.constant(TD::matrix({{0, 0}}));
    CHECK(cross_entropy(z, {0}).value()[0] == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(cross_entropy(t.constant(TD::matrix({{60, -60}})), {0}).value()[0] < 1e-40);

    Rng rng(1);
    TD logits = rng.normal_tensor<double>({7, 2});
    std::vector<std::int32_t> y = {0, 1, 1, 0, 1, 0, 0};
    const double plain = cross_entropy(t.constant(logits), y).value()[0];
    const double neutral = cross_entropy(t.constant(logits), y, {1.0, 1.0}).value()[0];
    CHECK(std::abs(plain - neutral) < 1e-12);
    CHECK_THROWS_AS(cross_entropy(t.constant(logits), {0, 1, 2, 0, 1, 0, 0}), IndexError);
    CHECK_THROWS_AS(cross_entropy(t.constant(logits), {0, 1}), DimensionError);
}

TEST_CASE("mae examples") {
    Tape<double> t;
    CHECK(mae_loss(t.constant(TD::matrix({{1}, {3}})), {1, 3}).value()[0] == 0.0);
    CHECK(mae_loss(t.constant(TD::matrix({{1}, {3}})), {2, 2}).value()[0] == doctest::Approx(1.0));

    Tape<double> t2;
    Var<double> p = t2.input(TD::matrix({{2}, {5}}));
    t2.backward(mae_loss(p, {2, 4}));
    CHECK(t2.grad(p)[0] == 0.0);
    CHECK(t2.grad(p)[1] == doctest::Approx(0.5));
}

TEST_CASE("loss gradients pass finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Parameter<double> logits("logits", rng.normal_tensor<double>({9, 4}));
        std::vector<std::int32_t> y(9);
        for (auto& v : y) v = static_cast<std::int32_t>(rng.index(4));
        std::vector<double> w = {0.3, 1.0, 2.0, 0.7};
        auto r1 = grad_check([&](Tape<double>& t) { return cross_entropy(t.param(logits), y); }, {&logits});
        auto r2 = grad_check([&](Tape<double>& t) { return cross_entropy(t.param(logits), y, w); }, {&logits});
        CHECK(r1.max_rel_error() < 1e-4);
        CHECK(r2.max_rel_error() < 1e-4);

        Parameter<double> pred("pred", rng.normal_tensor<double>({9, 1}));
        std::vector<double> target(9);
        for (auto& v : target) v = rng.normal();
        auto r3 = grad_check([&](Tape<double>& t) { return mae_loss(t.param(pred), target); }, {&pred});
        CHECK(r3.max_rel_error() < 1e-4);
    }
}

TEST_CASE("inverse frequency weights") {
    auto w = inverse_frequency_weights({0, 0, 0, 1}, 3);
    CHECK(w[0] == doctest::Approx(0.25));
    CHECK(w[1] == doctest::Approx(0.75));
    CHECK(w[2] == 0.0);
}

TEST_CASE("classification metrics") {
    CHECK(f1_positive({1, 1, 0, 0}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(f1_positive({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(f1_positive({0, 0}, {0, 0}) == 0.0);
    CHECK(accuracy({1, 1, 0, 0}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(accuracy({2, 0, 1}, {2, 0, 1}) == 1.0);
    CHECK(accuracy({1, 1}, {0, 0}) == 0.0);
    CHECK(mean_absolute_error({1, 3}, {2, 2}) == doctest::Approx(1.0));
    CHECK_THROWS(accuracy({}, {}));
    CHECK_THROWS_AS(accuracy({1}, {1, 0}), DimensionError);
    CHECK(argmax_rows(TD::matrix({{0.1, 0.9}, {2, 2}, {3, -1}})) == std::vector<std::int32_t>{1, 0, 0});

    MetricAccumulator a(TaskKind::edge_class);
    a.add_classes({1, 1}, {1, 0});
    a.add_classes({0, 0}, {1, 0});
    CHECK(a.value() == doctest::Approx(f1_positive({1, 1, 0, 0}, {1, 0, 1, 0})));
}

TEST_CASE("adam hand examples") {
    Parameter<double> theta("theta", TD({1}));
    Adam<double> adam({&theta});
    theta.grad[0] = 1.0;
    adam.step(0.1);
    CHECK(std::abs(theta.value[0] - (-0.1 / (1 + 1e-8))) < 1e-15);
    theta.grad[0] = 1.0;
    adam.step(0.1);
    CHECK(theta.value[0] == doctest::Approx(-0.2).epsilon(1e-7));

    Parameter<double> a("a", TD::vector({0.5, -1.0})), b("b", TD::vector({0.5, -1.0}));
    Adam<double> oa({&a}), ob({&b});
    for (int i = 0; i < 5; ++i) {
        a.grad = TD::vector({0.3, -0.2});
        b.grad = TD::vector({0.3, -0.2});
        oa.step(0.01, 0.0);
        ob.step(0.01);
    }
    CHECK(a.value == b.value);

    Parameter<double> bad("layer3.gcn.u.weight", TD({2}));
    Adam<double> ob2({&bad});
    bad.grad[1] = std::nan("");
    try {
        ob2.step(0.1);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(std::string(e.what()).find("layer3.gcn.u.weight") != std::string::npos);
    }
    CHECK(bad.value[0] == 0.0);
}

TEST_CASE("adam matches a scalar oracle on a quadratic") {
    // f(x) = 0.5 * a (x - c)^2 with L2 decay
    const double a = 3.0, c = 1.5, lr = 0.05, wd = 1e-3;
    Parameter<double> x("x", TD::vector({-2.0}));
    Adam<double> adam({&x});
    double ox = -2.0, m = 0, v = 0;
    for (int t = 1; t <= 100; ++t) {
        x.grad[0] = a * (x.value[0] - c);
        adam.step(lr, wd);
        const double g = a * (ox - c) + wd * ox;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1 - std::pow(0.9, t));
        const double vh = v / (1 - std::pow(0.999, t));
        ox -= lr * mh / (std::sqrt(vh) + 1e-8);
        REQUIRE(std::abs(x.value[0] - ox) < 1e-10);
    }
}

TEST_CASE("plateau scheduler") {
    PlateauConfig cfg{0.5, 5, 1e-5};
    SchedulerState s;
    s.lr = 1e-3;
    plateau_step(s, cfg, 1.0);
    for (int i = 0; i < 4; ++i) CHECK(plateau_step(s, cfg, 1.0).lr == 1e-3);
    PlateauResult r = plateau_step(s, cfg, 1.0);
    CHECK(r.reduced);
    CHECK(r.lr == 5e-4);

    // improvement resets the counter
    for (int i = 0; i < 4; ++i) plateau_step(s, cfg, 1.0);
    CHECK(!plateau_step(s, cfg, 0.5).reduced);
    for (int i = 0; i < 4; ++i) CHECK(!plateau_step(s, cfg, 0.9).reduced);
    CHECK(plateau_step(s, cfg, 0.9).reduced);

    SchedulerState low;
    low.lr = 1.5e-5;
    PlateauConfig one{0.5, 1, 1e-5};
    plateau_step(low, one, 1.0);
    PlateauResult stop = plateau_step(low, one, 1.0);
    CHECK(stop.lr == doctest::Approx(7.5e-6));
    CHECK(stop.stop);

    CHECK_THROWS_AS(validate(PlateauConfig{1.0, 5, 1e-5}), ConfigError);
    CHECK_THROWS_AS(validate(PlateauConfig{0.5, 5, 0.0}), ConfigError);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    DatasetSplit d = pattern(6, 1);
    Model<double> m(tiny(Family::gcn_fog, d), 2);
    auto before = m.snapshot();
    TrainConfig tc;
    tc.init_lr = 0;
    tc.max_epochs = 3;
    tc.batch_size = 64;
    auto res = train(m, d, tc);
    auto after = m.snapshot();
    CHECK(before.params == after.params);
    CHECK(res.stop_reason == "min_lr");
    // running statistics still track the data in train mode
    CHECK(before.running != after.running);
}

TEST_CASE("same seed gives the same history") {
    DatasetSplit d = pattern(12, 2);
    TrainConfig tc;
    tc.init_lr = 5e-3;
    tc.max_epochs = 4;
    tc.batch_size = 5;
    tc.seed = 9;
    tc.record_time = false;
    std::string runs[2];
    for (auto& out : runs) {
        Model<double> m(tiny(Family::gat_fog, d), 3);
        out = history_csv(train(m, d, tc).history);
    }
    CHECK(runs[0] == runs[1]);
    CHECK(runs[0].rfind("epoch,train_loss,val_loss,metric,lr,seconds\n", 0) == 0);
}

TEST_CASE("small training sets can be overfit") {
    for (Family f : {Family::fog, Family::gcn_fog}) {
        DatasetSplit d = pattern(10, 4);
        Model<double> m(tiny(f, d), 5);
        TrainConfig tc;
        tc.init_lr = 1e-2;
        tc.max_epochs = 200;
        tc.patience = 1000;
        tc.batch_size = 10;
        tc.seed = 1;
        auto res = train(m, d, tc);
        double best = res.history.front().train_loss;
        for (const auto& r : res.history) best = std::min(best, r.train_loss);
        INFO(to_string(f) << " first " << res.history.front().train_loss << " best " << best);
        CHECK(best < 0.1 * res.history.front().train_loss);
    }
}

TEST_CASE("evaluation does not depend on batching") {
    DatasetSplit d = pattern(10, 6);
    Model<double> m(tiny(Family::sage_fog, d), 7);
    EvalResult all = evaluate(m, d.train, 128);
    EvalResult one = evaluate(m, d.train, 1);
    CHECK(std::abs(all.loss - one.loss) < 1e-6);
    CHECK(all.metric == one.metric);
    CHECK(all.metric_name == "accuracy");
    CHECK_THROWS_AS(evaluate(m, std::vector<Graph>{}), std::invalid_argument);
}

TEST_CASE("untrained cluster accuracy is near chance") {
    ClusterConfig cc;
    cc.sizes = {2, 2, 20};
    cc.n_communities = 4;
    cc.nodes_per_graph = 24;
    cc.seed = 3;
    DatasetSplit d = gen_sbm_cluster(cc);
    double mean = 0;
    const int trials = 20;
    for (int s = 0; s < trials; ++s) {
        Model<double> m(tiny(Family::gcn, d), static_cast<std::uint64_t>(s));
        mean += evaluate(m, d.test).metric / trials;
    }
    CHECK(mean == doctest::Approx(0.25).epsilon(0.4));
}

TEST_CASE("divergence is reported with the epoch") {
    DatasetSplit d = pattern(4, 8);
    Model<double> m(tiny(Family::gcn, d), 1);
    m.parameters().back()->value[0] = std::nan("");
    TrainConfig tc;
    tc.max_epochs = 2;
    try {
        train(m, d, tc);
        FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
        CHECK(e.epoch() == 1);
    }
}

TEST_CASE("train config json") {
    TrainConfig tc;
    tc.grid_lr = {1e-2, 5e-3};
    tc.seed = 42;
    CHECK(to_json(train_config_from_json(to_json(tc))) == to_json(tc));
    nlohmann::json j = to_json(tc);
    j["lr"] = 1;
    CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
    TrainConfig bad;
    bad.lr_factor = 1.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}
